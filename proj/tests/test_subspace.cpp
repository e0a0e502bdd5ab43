#include "support/gen.hpp"

#include <tiedlm/linalg.hpp>
#include <tiedlm/subspace.hpp>

#include <gtest/gtest.h>

#include <cmath>

namespace tiedlm {
namespace {

using testing::random_matrix;

Matrix basis(std::size_t n, std::initializer_list<std::size_t> axes) {
    Matrix m(n, axes.size());
    std::size_t c = 0;
    for (std::size_t a : axes) {
        m(a, c++) = 1.0;
    }
    return m;
}

TEST(Subspace, IdenticalSpansHaveZeroDistance) {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix x = random_matrix(rng, 40, 6);
        EXPECT_LE(subspace_distance(x, x).distance, 1e-9);
    }
}

TEST(Subspace, OrthogonalSpansHaveUnitDistance) {
    const auto r = subspace_distance(basis(4, {0, 1}), basis(4, {2, 3}));
    EXPECT_NEAR(r.distance, 1.0, 1e-12);
    for (double c : r.principal_cosines) {
        EXPECT_NEAR(c, 0.0, 1e-12);
    }
}

TEST(Subspace, HandDerivedThreeSpaceExample) {
    const Matrix x = basis(3, {0, 1});
    Matrix y(3, 2);
    y(0, 0) = 1.0;
    y(1, 1) = y(2, 1) = 1.0 / std::sqrt(2.0);
    const auto r = subspace_distance(x, y);
    EXPECT_NEAR(r.distance, 0.5, 1e-9);
    EXPECT_NEAR(r.distance_sq, 0.25, 1e-9);
    ASSERT_EQ(r.principal_cosines.size(), 2u);
    EXPECT_NEAR(r.principal_cosines[0], 1.0, 1e-12);
    EXPECT_NEAR(r.principal_cosines[1], 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Subspace, SymmetryBasisInvarianceAndCosineRoute) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t c = testing::random_dim(rng, 1, 8);
        const std::size_t n = c + testing::random_dim(rng, 1, 30);
        const Matrix x = random_matrix(rng, n, c);
        const Matrix y = random_matrix(rng, n, c);
        const auto xy = subspace_distance(x, y);
        const auto yx = subspace_distance(y, x);
        EXPECT_NEAR(xy.distance, yx.distance, 1e-8);
        EXPECT_NEAR(xy.distance_sq, xy.distance_sq_from_cosines, 1e-8);
        EXPECT_GE(xy.distance, 0.0);
        EXPECT_LE(xy.distance, 1.0 + 1e-10);
        const Matrix a = random_matrix(rng, c, c); // invertible with probability 1
        EXPECT_NEAR(subspace_distance(matmul(x, a), y).distance, xy.distance, 1e-8);
        EXPECT_NEAR(subspace_distance(x, matmul(y, a)).distance, xy.distance, 1e-8);
    }
}

TEST(Subspace, UnequalColumnCounts) {
    // y inside x: every basis vector of y lies in span(x).
    const auto inside = subspace_distance(basis(5, {0, 1, 2}), basis(5, {1}));
    EXPECT_NEAR(inside.distance, 0.0, 1e-12);
    EXPECT_TRUE(inside.one_directional);
    const auto outside = subspace_distance(basis(5, {0}), basis(5, {0, 3}));
    EXPECT_NEAR(outside.distance_sq, 0.5, 1e-12);
    EXPECT_NEAR(outside.distance_sq_from_cosines, 0.5, 1e-12);
}

TEST(Subspace, Errors) {
    EXPECT_THROW(subspace_distance(Matrix(4, 2, 1.0), Matrix(5, 2, 1.0)), ContractViolation);
    Matrix deficient{{1, 2}, {2, 4}, {3, 6}};
    EXPECT_THROW(subspace_distance(deficient, basis(3, {0, 1})), RankDeficientError);
}

TEST(ModelSubspace, TiedModelsReportZero) {
    ModelConfig c;
    c.vocab_size = 50;
    c.embed_dim = c.hidden_dim = 5;
    c.tie_weights = true;
    const auto r = model_subspace_distance(init_params(c, 1));
    EXPECT_EQ(r.distance, 0.0);
    EXPECT_TRUE(r.tied);
}

TEST(ModelSubspace, ProjectionInEmbeddingSpanIsZero) {
    ModelConfig c;
    c.vocab_size = 60;
    c.embed_dim = c.hidden_dim = 6;
    ModelParams p = init_params(c, 2);
    Rng rng(3);
    p.proj_weight = matmul(transpose(p.embedding), random_matrix(rng, 6, 6));
    EXPECT_LE(model_subspace_distance(p).distance, 1e-8);
}

TEST(ModelSubspace, RandomInitIsNearlyOrthogonal) {
    ModelConfig c;
    c.vocab_size = 1000;
    c.embed_dim = c.hidden_dim = 30;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        EXPECT_GE(model_subspace_distance(init_params(c, seed)).distance, 0.95);
    }
}

} // namespace
} // namespace tiedlm
