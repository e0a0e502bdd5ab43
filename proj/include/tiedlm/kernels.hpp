#pragma once

// Raw GEMM kernels on row-major buffers. Two implementations with one contract:
// `serial` is the reference; `parallel` splits output rows across OpenMP threads and
// must produce bitwise-identical results (every output element accumulates over k in
// ascending order in both).

#include <cstddef>

namespace tiedlm::kernels {

namespace serial {
// c (m x n) [+]= a (m x k) * b (k x n)
void gemm_nn(const double *a, const double *b, double *c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate);
// c (m x n) [+]= a^T * b, with a stored (k x m) and b (k x n)
void gemm_tn(const double *a, const double *b, double *c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate);
} // namespace serial

namespace parallel {
void gemm_nn(const double *a, const double *b, double *c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate);
void gemm_tn(const double *a, const double *b, double *c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate);
} // namespace parallel

/// Process-wide switch consulted by the linalg front end. Defaults to on.
void set_parallel(bool enabled) noexcept;
bool parallel_enabled() noexcept;

} // namespace tiedlm::kernels
