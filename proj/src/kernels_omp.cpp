#include <tiedlm/kernels.hpp>

#include "gemm_rows.hpp"

#include <omp.h>

namespace tiedlm::kernels::parallel {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kMinWork = 1u << 16;

// Row chunks are multiples of 4 so the 4-row micro-kernel covers the same rows as in
// the serial path; the bits do not depend on this, only the speed.
template <typename Body>
void split_rows(std::size_t m, std::size_t work, Body body) {
    const int threads = omp_get_max_threads();
    if (threads <= 1 || work < kMinWork || m < 8 || omp_in_parallel()) {
        body(std::size_t{0}, m);
        return;
    }
    const std::size_t blocks = (m + 3) / 4;
#pragma omp parallel
    {
        const std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
        const std::size_t t = static_cast<std::size_t>(omp_get_thread_num());
        const std::size_t per = (blocks + nt - 1) / nt;
        const std::size_t b0 = std::min(blocks, t * per);
        const std::size_t b1 = std::min(blocks, b0 + per);
        const std::size_t r0 = b0 * 4;
        const std::size_t r1 = std::min(m, b1 * 4);
        if (r0 < r1) {
            body(r0, r1);
        }
    }
}

} // namespace

void gemm_nn(const double *a, const double *b, double *c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    split_rows(m, m * k * n, [&](std::size_t r0, std::size_t r1) {
        detail::gemm_nn_rows(a, b, c, k, n, r0, r1, accumulate);
    });
}

void gemm_tn(const double *a, const double *b, double *c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
    split_rows(m, m * k * n, [&](std::size_t r0, std::size_t r1) {
        detail::gemm_tn_rows(a, b, c, m, k, n, r0, r1, accumulate);
    });
}

} // namespace tiedlm::kernels::parallel
