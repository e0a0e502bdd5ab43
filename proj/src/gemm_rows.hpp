#pragma once

// Row-range GEMM bodies shared by the serial and OpenMP kernels. Each output element
// c[i][j] is accumulated over k in ascending order with one multiply-add per term, so
// any partition of the row range yields the same bits.

#include <algorithm>
#include <cstddef>
#include <cstring>

namespace tiedlm::kernels::detail {

inline constexpr std::size_t kColBlock = 512;

// c[r0:r1, :] (+)= a[r0:r1, :] * b
inline void gemm_nn_rows(const double *__restrict a, const double *__restrict b,
                         double *__restrict c, std::size_t k, std::size_t n, std::size_t r0,
                         std::size_t r1, bool accumulate) {
    if (!accumulate) {
        std::memset(c + r0 * n, 0, (r1 - r0) * n * sizeof(double));
    }
    for (std::size_t jb = 0; jb < n; jb += kColBlock) {
        const std::size_t len = std::min(kColBlock, n - jb);
        std::size_t i = r0;
        for (; i + 4 <= r1; i += 4) {
            double *c0 = c + i * n + jb;
            double *c1 = c0 + n;
            double *c2 = c1 + n;
            double *c3 = c2 + n;
            const double *a0 = a + i * k;
            const double *a1 = a0 + k;
            const double *a2 = a1 + k;
            const double *a3 = a2 + k;
            for (std::size_t p = 0; p < k; ++p) {
                const double *brow = b + p * n + jb;
                const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
                for (std::size_t j = 0; j < len; ++j) {
                    const double bj = brow[j];
                    c0[j] += v0 * bj;
                    c1[j] += v1 * bj;
                    c2[j] += v2 * bj;
                    c3[j] += v3 * bj;
                }
            }
        }
        for (; i < r1; ++i) {
            double *ci = c + i * n + jb;
            const double *ai = a + i * k;
            for (std::size_t p = 0; p < k; ++p) {
                const double *brow = b + p * n + jb;
                const double v = ai[p];
                for (std::size_t j = 0; j < len; ++j) {
                    ci[j] += v * brow[j];
                }
            }
        }
    }
}

// c[r0:r1, :] (+)= (a^T)[r0:r1, :] * b, a stored (k x m)
inline void gemm_tn_rows(const double *__restrict a, const double *__restrict b,
                         double *__restrict c, std::size_t m, std::size_t k, std::size_t n,
                         std::size_t r0, std::size_t r1, bool accumulate) {
    if (!accumulate) {
        std::memset(c + r0 * n, 0, (r1 - r0) * n * sizeof(double));
    }
    for (std::size_t jb = 0; jb < n; jb += kColBlock) {
        const std::size_t len = std::min(kColBlock, n - jb);
        std::size_t i = r0;
        for (; i + 4 <= r1; i += 4) {
            double *c0 = c + i * n + jb;
            double *c1 = c0 + n;
            double *c2 = c1 + n;
            double *c3 = c2 + n;
            for (std::size_t p = 0; p < k; ++p) {
                const double *brow = b + p * n + jb;
                const double *acol = a + p * m + i;
                const double v0 = acol[0], v1 = acol[1], v2 = acol[2], v3 = acol[3];
                for (std::size_t j = 0; j < len; ++j) {
                    const double bj = brow[j];
                    c0[j] += v0 * bj;
                    c1[j] += v1 * bj;
                    c2[j] += v2 * bj;
                    c3[j] += v3 * bj;
                }
            }
        }
        for (; i < r1; ++i) {
            double *ci = c + i * n + jb;
            for (std::size_t p = 0; p < k; ++p) {
                const double *brow = b + p * n + jb;
                const double v = a[p * m + i];
                for (std::size_t j = 0; j < len; ++j) {
                    ci[j] += v * brow[j];
                }
            }
        }
    }
}

} // namespace tiedlm::kernels::detail
