#include <tiedlm/kernels.hpp>

#include "gemm_rows.hpp"

#include <atomic>

namespace tiedlm::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

void set_parallel(bool enabled) noexcept { g_parallel.store(enabled, std::memory_order_relaxed); }
bool parallel_enabled() noexcept { return g_parallel.load(std::memory_order_relaxed); }

namespace serial {

void gemm_nn(const double *a, const double *b, double *c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    detail::gemm_nn_rows(a, b, c, k, n, 0, m, accumulate);
}

void gemm_tn(const double *a, const double *b, double *c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    detail::gemm_tn_rows(a, b, c, m, k, n, 0, m, accumulate);
}

} // namespace serial
} // namespace tiedlm::kernels
