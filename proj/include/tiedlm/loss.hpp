#pragma once

#include <tiedlm/corpus.hpp>
#include <tiedlm/matrix.hpp>

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace tiedlm {

enum class LossMode {
    baseline,     // J
    alpha_form,   // J + alpha * J_aug
    beta_mixture, // beta * tau^2 * |V| * J_aug + (1 - beta) * J
};
std::string_view to_string(LossMode m);
LossMode parse_loss_mode(std::string_view s);

struct LossConfig {
    double tau = 1.0;
    double alpha = 0.0;
    /// When positive, alpha is derived as gamma * tau.
    double gamma = 0.0;
    double beta = 0.0;
    LossMode mode = LossMode::baseline;
    /// Treat the embedding-derived target as a constant (no gradient into L through it).
    bool stop_gradient_through_target = true;

    void validate() const;
    double effective_alpha() const { return gamma > 0.0 ? gamma * tau : alpha; }
    friend bool operator==(const LossConfig &, const LossConfig &) = default;
};

/// Per-token means over a block of predictions plus the gradient of `total`.
struct LossBreakdown {
    double ce = 0.0;
    double aug = 0.0;
    double total = 0.0;
    std::size_t tokens = 0;
    Matrix d_logits; // d total / d logits, same shape as the logits block
    /// Extra gradient into the embedding through the target distribution; only present
    /// when stop_gradient_through_target is false and the augmented term is active.
    std::optional<Matrix> d_embedding;
};

/// -ln y[target]
double cross_entropy(std::span<const double> y, TokenId target);

/// softmax(L^T u / tau) with u the target's word vector (column of L).
std::vector<double> estimate_target_distribution(const Matrix &embedding, TokenId target,
                                                 double tau);

/// KL(y_tilde || y_hat); terms with y_tilde_i == 0 contribute nothing.
double augmented_loss(std::span<const double> y_hat, std::span<const double> y_tilde);

/// (y_hat - y_tilde) / tau: the augmented loss gradient with respect to the logits.
std::vector<double> augmented_loss_grad_logits(std::span<const double> y_hat,
                                               std::span<const double> y_tilde, double tau);

/// Combined loss over a (tokens x |V|) logits block. `targets` follows the block's rows.
LossBreakdown total_loss(const Matrix &logits, std::span<const TokenId> targets,
                         const Matrix &embedding, const LossConfig &config);

struct LogitMatchingResidual {
    std::vector<double> grad_scaled; // tau^2 |V| * augmented gradient, mean-centered
    std::vector<double> reference;   // logits - L^T u, mean-centered
    double rel_err = 0.0;
    /// Reference has zero norm but the scaled gradient does not.
    bool degenerate = false;
};

/// Compares the high-temperature augmented gradient against the logit-matching target.
LogitMatchingResidual logit_matching_residual(std::span<const double> logits,
                                              const Matrix &embedding, TokenId target,
                                              double tau);

} // namespace tiedlm
