#include "support/gen.hpp"

#include <tiedlm/kernels.hpp>
#include <tiedlm/linalg.hpp>

#include <gtest/gtest.h>

#include <omp.h>

namespace tiedlm {
namespace {

struct Shape {
    std::size_t m, k, n;
};

// Sizes straddle the parallel cutoff and the 4-row / column-block edges.
const Shape kShapes[] = {{1, 1, 1},     {3, 5, 7},     {4, 4, 4},     {5, 17, 513},
                         {64, 64, 64},  {130, 70, 90}, {257, 33, 600}, {35, 100, 1000},
                         {1000, 35, 100}};

class KernelParity : public ::testing::TestWithParam<Shape> {};

TEST_P(KernelParity, ParallelMatchesSerialBitwise) {
    const auto s = GetParam();
    Rng rng(s.m * 131 + s.k * 7 + s.n);
    const Matrix a = testing::random_matrix(rng, s.m, s.k);
    const Matrix at = transpose(a);
    const Matrix b = testing::random_matrix(rng, s.k, s.n);
    const Matrix seed_c = testing::random_matrix(rng, s.m, s.n);
    for (bool accumulate : {false, true}) {
        Matrix cs = seed_c, cp = seed_c, ts = seed_c, tp = seed_c;
        kernels::serial::gemm_nn(a.data(), b.data(), cs.data(), s.m, s.k, s.n, accumulate);
        kernels::parallel::gemm_nn(a.data(), b.data(), cp.data(), s.m, s.k, s.n, accumulate);
        kernels::serial::gemm_tn(at.data(), b.data(), ts.data(), s.m, s.k, s.n, accumulate);
        kernels::parallel::gemm_tn(at.data(), b.data(), tp.data(), s.m, s.k, s.n, accumulate);
        EXPECT_EQ(cs, cp);
        EXPECT_EQ(ts, tp);
        // Both layouts accumulate in the same order.
        EXPECT_EQ(cs, ts);
    }
}

TEST_P(KernelParity, SerialMatchesNaiveLoop) {
    const auto s = GetParam();
    Rng rng(s.m + s.k + s.n);
    const Matrix a = testing::random_matrix(rng, s.m, s.k);
    const Matrix b = testing::random_matrix(rng, s.k, s.n);
    Matrix c(s.m, s.n);
    kernels::serial::gemm_nn(a.data(), b.data(), c.data(), s.m, s.k, s.n, false);
    for (std::size_t i = 0; i < s.m; i += 7) {
        for (std::size_t j = 0; j < s.n; j += 3) {
            double acc = 0.0;
            for (std::size_t p = 0; p < s.k; ++p) {
                acc += a(i, p) * b(p, j);
            }
            EXPECT_NEAR(c(i, j), acc, 1e-12 * (1.0 + std::abs(acc)));
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Shapes, KernelParity, ::testing::ValuesIn(kShapes));

TEST(KernelSwitch, FrontEndResultIndependentOfMode) {
    Rng rng(9);
    const Matrix a = testing::random_matrix(rng, 300, 120);
    const Matrix b = testing::random_matrix(rng, 120, 500);
    const bool before = kernels::parallel_enabled();
    kernels::set_parallel(false);
    const Matrix serial = matmul(a, b);
    kernels::set_parallel(true);
    const Matrix parallel = matmul(a, b);
    kernels::set_parallel(before);
    EXPECT_EQ(serial, parallel);
}

TEST(KernelSwitch, ThreadCountDoesNotChangeResults) {
    Rng rng(10);
    const Matrix a = testing::random_matrix(rng, 200, 64);
    const Matrix b = testing::random_matrix(rng, 64, 300);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const Matrix one = matmul(a, b);
    omp_set_num_threads(4);
    const Matrix four = matmul(a, b);
    omp_set_num_threads(saved);
    EXPECT_EQ(one, four);
}

} // namespace
} // namespace tiedlm
