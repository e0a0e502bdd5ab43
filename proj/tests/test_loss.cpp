#include "support/gen.hpp"

#include <tiedlm/linalg.hpp>
#include <tiedlm/loss.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace tiedlm {
namespace {

std::vector<double> v(std::initializer_list<double> x) { return x; }

// Word vectors as columns of a d x V matrix with N(0, scale^2) entries.
Matrix random_embedding(Rng &rng, std::size_t d, std::size_t V, double scale = 1.0) {
    return testing::random_matrix(rng, d, V, scale);
}

TEST(CrossEntropy, SpecExamples) {
    EXPECT_NEAR(cross_entropy(v({0.25, 0.25, 0.25, 0.25}), 2), std::log(4.0), 1e-15);
    EXPECT_EQ(cross_entropy(v({0.0, 1.0}), 1), 0.0);
    EXPECT_NEAR(cross_entropy(v({0.25, 0.75}), 1), 0.28768, 1e-5);
    EXPECT_THROW(cross_entropy(v({0.5, 0.5}), 2), ContractViolation);
}

TEST(TargetDistribution, SpecExamples) {
    const auto y = estimate_target_distribution(Matrix::identity(3), 1, 1.0);
    const double e = std::exp(1.0);
    EXPECT_NEAR(y[1], e / (e + 2.0), 1e-12);
    EXPECT_NEAR(y[1], 0.57612, 1e-5);
    EXPECT_NEAR(y[0], 0.21194, 1e-5);
    const Matrix same(4, 5, 0.3);
    for (double p : estimate_target_distribution(same, 2, 0.7)) {
        EXPECT_NEAR(p, 0.2, 1e-15);
    }
    Rng rng(1);
    const Matrix l = random_embedding(rng, 6, 9);
    for (double p : estimate_target_distribution(l, 4, 1e9)) {
        EXPECT_NEAR(p, 1.0 / 9.0, 1e-6);
    }
}

TEST(TargetDistribution, TargetIsArgmaxForEqualNorms) {
    Rng rng(2);
    Matrix l = random_embedding(rng, 5, 12);
    for (std::size_t w = 0; w < 12; ++w) {
        double n = 0.0;
        for (std::size_t d = 0; d < 5; ++d) {
            n += l(d, w) * l(d, w);
        }
        for (std::size_t d = 0; d < 5; ++d) {
            l(d, w) /= std::sqrt(n);
        }
    }
    for (TokenId t = 0; t < 12; ++t) {
        const auto y = estimate_target_distribution(l, t, 0.5);
        EXPECT_EQ(std::max_element(y.begin(), y.end()) - y.begin(), t);
    }
}

TEST(AugmentedLoss, SpecExamples) {
    EXPECT_EQ(augmented_loss(v({0.3, 0.7}), v({0.3, 0.7})), 0.0);
    EXPECT_NEAR(augmented_loss(v({0.25, 0.75}), v({0.5, 0.5})), 0.14384, 1e-5);
    EXPECT_NEAR(augmented_loss(v({0.25, 0.75}), v({0.0, 1.0})), -std::log(0.75), 1e-15);
}

TEST(AugmentedLoss, GibbsInequality) {
    Rng rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = testing::random_dim(rng, 2, 30);
        const auto p = softmax_with_temperature(testing::random_vector(rng, n, -5, 5), 1.0);
        const auto q = softmax_with_temperature(testing::random_vector(rng, n, -5, 5), 1.0);
        EXPECT_GE(augmented_loss(p, q), 0.0);
    }
}

TEST(AugmentedGrad, SpecExamples) {
    const auto zero = augmented_loss_grad_logits(v({0.2, 0.8}), v({0.2, 0.8}), 3.0);
    EXPECT_EQ(zero, v({0.0, 0.0}));
    const auto g = augmented_loss_grad_logits(v({0.6, 0.4}), v({0.5, 0.5}), 2.0);
    EXPECT_NEAR(g[0], 0.05, 1e-15);
    EXPECT_NEAR(g[1], -0.05, 1e-15);
}

TEST(AugmentedGrad, MatchesFiniteDifferencesAndExpansion) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = testing::random_dim(rng, 2, 15);
        const double tau = std::exp(rng.uniform(-1.0, 3.0));
        auto z = testing::random_vector(rng, n, -3, 3);
        const auto yt = softmax_with_temperature(testing::random_vector(rng, n, -3, 3), 1.0);
        const auto g = augmented_loss_grad_logits(softmax_with_temperature(z, tau), yt, tau);
        EXPECT_NEAR(std::accumulate(g.begin(), g.end(), 0.0), 0.0, 1e-12);
        // Expansion: sum_i yt_i (yhat - e_i) / tau.
        const auto yh = softmax_with_temperature(z, tau);
        for (std::size_t k = 0; k < n; ++k) {
            double e = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                e += yt[i] * (yh[k] - (i == k ? 1.0 : 0.0)) / tau;
            }
            EXPECT_NEAR(g[k], e, 1e-14);
        }
        const double eps = 1e-6;
        std::vector<double> fd(n);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double orig = z[k];
            z[k] = orig + eps;
            const double up = augmented_loss(softmax_with_temperature(z, tau), yt);
            z[k] = orig - eps;
            const double down = augmented_loss(softmax_with_temperature(z, tau), yt);
            z[k] = orig;
            fd[k] = (up - down) / (2 * eps);
            num += (fd[k] - g[k]) * (fd[k] - g[k]);
            den += g[k] * g[k];
        }
        EXPECT_LE(std::sqrt(num / den), 1e-6);
    }
}

struct Block {
    Matrix logits;
    std::vector<TokenId> targets;
    Matrix embedding;
};

Block random_block(Rng &rng, std::size_t N, std::size_t V, std::size_t d) {
    Block b{testing::random_matrix(rng, N, V), {}, random_embedding(rng, d, V, 0.5)};
    for (std::size_t i = 0; i < N; ++i) {
        b.targets.push_back(static_cast<TokenId>(rng.below(V)));
    }
    return b;
}

TEST(TotalLoss, BaselineIsCrossEntropyWithOneHotGradient) {
    Rng rng(5);
    const auto b = random_block(rng, 6, 9, 4);
    LossConfig c;
    const auto out = total_loss(b.logits, b.targets, b.embedding, c);
    EXPECT_EQ(out.total, out.ce);
    EXPECT_EQ(out.tokens, 6u);
    for (std::size_t r = 0; r < 6; ++r) {
        const auto y = softmax_with_temperature(b.logits.row(r), 1.0);
        for (std::size_t i = 0; i < 9; ++i) {
            const double onehot = static_cast<TokenId>(i) == b.targets[r] ? 1.0 : 0.0;
            EXPECT_NEAR(out.d_logits(r, i), (y[i] - onehot) / 6.0, 1e-15);
        }
    }
}

TEST(TotalLoss, ModeEndpointsAndCombinations) {
    Rng rng(6);
    const auto b = random_block(rng, 5, 11, 3);
    LossConfig base;
    const auto ref = total_loss(b.logits, b.targets, b.embedding, base);

    LossConfig a0;
    a0.mode = LossMode::alpha_form;
    a0.tau = 3.0;
    const auto alpha_zero = total_loss(b.logits, b.targets, b.embedding, a0);
    LossConfig b0;
    b0.mode = LossMode::beta_mixture;
    b0.tau = 3.0;
    const auto beta_zero = total_loss(b.logits, b.targets, b.embedding, b0);
    EXPECT_EQ(alpha_zero.total, ref.total);
    EXPECT_EQ(beta_zero.total, ref.total);
    EXPECT_EQ(alpha_zero.d_logits, ref.d_logits);
    EXPECT_EQ(beta_zero.d_logits, ref.d_logits);

    LossConfig b1 = b0;
    b1.beta = 1.0;
    const auto pure = total_loss(b.logits, b.targets, b.embedding, b1);
    EXPECT_NEAR(pure.total, pure.aug * 9.0 * 11.0, 1e-12);

    LossConfig a = a0;
    a.alpha = 2.5;
    const auto mixed = total_loss(b.logits, b.targets, b.embedding, a);
    EXPECT_NEAR(mixed.total, mixed.ce + 2.5 * mixed.aug, 1e-12);
    a.gamma = 0.5; // alpha = gamma * tau
    EXPECT_DOUBLE_EQ(a.effective_alpha(), 1.5);
    const auto by_gamma = total_loss(b.logits, b.targets, b.embedding, a);
    EXPECT_NEAR(by_gamma.total, by_gamma.ce + 1.5 * by_gamma.aug, 1e-12);
}

TEST(TotalLoss, GradientRowsSumToZeroAndMatchFiniteDifferences) {
    Rng rng(7);
    for (LossMode mode : {LossMode::baseline, LossMode::alpha_form, LossMode::beta_mixture}) {
        auto b = random_block(rng, 4, 7, 3);
        LossConfig c;
        c.mode = mode;
        c.tau = 2.0;
        c.alpha = 1.7;
        c.beta = 0.4;
        const auto out = total_loss(b.logits, b.targets, b.embedding, c);
        for (std::size_t r = 0; r < 4; ++r) {
            const auto row = out.d_logits.row(r);
            EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 0.0, 1e-10);
        }
        const double eps = 1e-6;
        for (std::size_t i = 0; i < b.logits.size(); ++i) {
            const double orig = b.logits.data()[i];
            b.logits.data()[i] = orig + eps;
            const double up = total_loss(b.logits, b.targets, b.embedding, c).total;
            b.logits.data()[i] = orig - eps;
            const double down = total_loss(b.logits, b.targets, b.embedding, c).total;
            b.logits.data()[i] = orig;
            EXPECT_NEAR(out.d_logits.data()[i], (up - down) / (2 * eps),
                        1e-6 * (1.0 + std::abs(out.d_logits.data()[i])));
        }
    }
}

TEST(TotalLoss, PureAugmentedGradientIsScaledDifferenceOfDistributions) {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t V = testing::random_dim(rng, 2, 30);
        const auto b = random_block(rng, 1, V, 4);
        LossConfig c;
        c.mode = LossMode::alpha_form;
        c.tau = std::exp(rng.uniform(0.0, 4.0));
        c.alpha = 1.0;
        // Remove the cross-entropy part by subtracting a baseline evaluation.
        LossConfig base;
        const auto with = total_loss(b.logits, b.targets, b.embedding, c);
        const auto ce = total_loss(b.logits, b.targets, b.embedding, base);
        const auto yh = softmax_with_temperature(b.logits.row(0), c.tau);
        const auto yt = estimate_target_distribution(b.embedding, b.targets[0], c.tau);
        for (std::size_t i = 0; i < V; ++i) {
            EXPECT_NEAR(with.d_logits(0, i) - ce.d_logits(0, i), (yh[i] - yt[i]) / c.tau, 1e-12);
        }
    }
}

TEST(TotalLoss, RejectsBadInputs) {
    LossConfig c;
    const Matrix logits(2, 3);
    const Matrix emb(2, 3, 1.0);
    const std::vector<TokenId> ok{0, 1};
    EXPECT_THROW(total_loss(logits, std::vector<TokenId>{0}, emb, c), ContractViolation);
    EXPECT_THROW(total_loss(logits, std::vector<TokenId>{0, 3}, emb, c), ContractViolation);
    EXPECT_THROW(total_loss(logits, ok, Matrix(2, 4), c), ContractViolation);
    c.tau = 0.0;
    EXPECT_THROW(total_loss(logits, ok, emb, c), ContractViolation);
    c.tau = 1.0;
    c.beta = 1.5;
    EXPECT_THROW(total_loss(logits, ok, emb, c), ContractViolation);
    EXPECT_THROW(parse_loss_mode("nope"), ContractViolation);
    EXPECT_EQ(parse_loss_mode(to_string(LossMode::beta_mixture)), LossMode::beta_mixture);
}

TEST(LogitMatching, FixedPointGivesZeroGradient) {
    Rng rng(9);
    const Matrix l = random_embedding(rng, 5, 40, 0.3);
    const TokenId t = 7;
    std::vector<double> z(40);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t d = 0; d < 5; ++d) {
            z[i] += l(d, static_cast<std::size_t>(t)) * l(d, i);
        }
    }
    const auto r = logit_matching_residual(z, l, t, 10.0);
    for (double g : r.grad_scaled) {
        EXPECT_NEAR(g, 0.0, 1e-12);
    }
    EXPECT_FALSE(r.degenerate);
    EXPECT_EQ(r.rel_err, 0.0);
}

TEST(LogitMatching, ResidualShrinksWithTemperature) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(100 + seed);
        const Matrix l = random_embedding(rng, 8, 50, 0.3);
        const auto z = testing::random_vector(rng, 50, -1, 1);
        double prev = INFINITY;
        for (double tau : {2.0, 10.0, 100.0}) {
            const double e = logit_matching_residual(z, l, 3, tau).rel_err;
            EXPECT_LT(e, prev) << "seed " << seed << " tau " << tau;
            prev = e;
        }
    }
}

TEST(LogitMatching, GradientDecaysAsInverseTauSquared) {
    Rng rng(11);
    const Matrix l = random_embedding(rng, 8, 50, 0.3);
    const auto z = testing::random_vector(rng, 50, -1, 1);
    auto norm = [&](double tau) {
        const auto yh = softmax_with_temperature(z, tau);
        const auto yt = estimate_target_distribution(l, 3, tau);
        const auto g = augmented_loss_grad_logits(yh, yt, tau);
        return std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
    };
    for (double tau : {50.0, 100.0, 200.0}) {
        EXPECT_NEAR(norm(tau) / norm(2.0 * tau), 4.0, 1.0);
    }
}

} // namespace
} // namespace tiedlm
