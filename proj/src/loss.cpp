#include <tiedlm/linalg.hpp>
#include <tiedlm/loss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tiedlm {

std::string_view to_string(LossMode m) {
    switch (m) {
    case LossMode::baseline:
        return "baseline";
    case LossMode::alpha_form:
        return "alpha_form";
    case LossMode::beta_mixture:
        return "beta_mixture";
    }
    return "unknown";
}

LossMode parse_loss_mode(std::string_view s) {
    if (s == "baseline") {
        return LossMode::baseline;
    }
    if (s == "alpha_form") {
        return LossMode::alpha_form;
    }
    if (s == "beta_mixture") {
        return LossMode::beta_mixture;
    }
    throw ContractViolation("unknown loss mode '" + std::string(s) +
                            "' (expected baseline, alpha_form or beta_mixture)");
}

void LossConfig::validate() const {
    require(tau > 0.0 && std::isfinite(tau), "LossConfig: tau must be positive");
    require(alpha >= 0.0, "LossConfig: alpha must be nonnegative");
    require(gamma >= 0.0, "LossConfig: gamma must be nonnegative");
    require(beta >= 0.0 && beta <= 1.0, "LossConfig: beta must be in [0, 1]");
}

namespace {

void check_target(TokenId target, std::size_t n) {
    if (target < 0 || static_cast<std::size_t>(target) >= n) {
        throw ContractViolation("target id " + std::to_string(target) + " out of range for " +
                                std::to_string(n) + " classes");
    }
}

// Writes softmax(v / tau) into prob and its log into logp.
void log_softmax(std::span<const double> v, double tau, std::span<double> prob,
                 std::span<double> logp) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) {
        mx = std::max(mx, x);
    }
    const double inv_tau = 1.0 / tau;
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        logp[i] = (v[i] - mx) * inv_tau;
        prob[i] = std::exp(logp[i]);
        sum += prob[i];
    }
    const double lse = std::log(sum);
    const double inv = 1.0 / sum;
    for (std::size_t i = 0; i < v.size(); ++i) {
        logp[i] -= lse;
        prob[i] *= inv;
    }
}

} // namespace

double cross_entropy(std::span<const double> y, TokenId target) {
    check_target(target, y.size());
    return -std::log(y[static_cast<std::size_t>(target)]);
}

std::vector<double> estimate_target_distribution(const Matrix &embedding, TokenId target,
                                                 double tau) {
    check_target(target, embedding.cols());
    const auto t = static_cast<std::size_t>(target);
    std::vector<double> scores(embedding.cols(), 0.0);
    for (std::size_t d = 0; d < embedding.rows(); ++d) {
        const auto row = embedding.row(d);
        const double u = row[t];
        for (std::size_t i = 0; i < scores.size(); ++i) {
            scores[i] += u * row[i];
        }
    }
    return softmax_with_temperature(scores, tau);
}

double augmented_loss(std::span<const double> y_hat, std::span<const double> y_tilde) {
    require(y_hat.size() == y_tilde.size(), "augmented_loss: length mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
        if (y_tilde[i] > 0.0) {
            kl += y_tilde[i] * (std::log(y_tilde[i]) - std::log(y_hat[i]));
        }
    }
    return std::max(kl, 0.0);
}

std::vector<double> augmented_loss_grad_logits(std::span<const double> y_hat,
                                               std::span<const double> y_tilde, double tau) {
    require(y_hat.size() == y_tilde.size(), "augmented_loss_grad_logits: length mismatch");
    require(tau > 0.0, "augmented_loss_grad_logits: tau must be positive");
    std::vector<double> g(y_hat.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = (y_hat[i] - y_tilde[i]) / tau;
    }
    return g;
}

LossBreakdown total_loss(const Matrix &logits, std::span<const TokenId> targets,
                         const Matrix &embedding, const LossConfig &config) {
    config.validate();
    const std::size_t N = logits.rows();
    const std::size_t V = logits.cols();
    require(N > 0, "total_loss: empty logits block");
    require(targets.size() == N, "total_loss: targets length does not match logits rows");
    require(embedding.cols() == V, "total_loss: embedding vocabulary does not match logits");
    for (TokenId t : targets) {
        check_target(t, V);
    }

    double w_ce = 1.0;
    double w_aug = 0.0;
    switch (config.mode) {
    case LossMode::baseline:
        break;
    case LossMode::alpha_form:
        w_aug = config.effective_alpha();
        break;
    case LossMode::beta_mixture:
        w_ce = 1.0 - config.beta;
        w_aug = config.beta * config.tau * config.tau * static_cast<double>(V);
        break;
    }
    const bool need_aug = config.mode != LossMode::baseline;
    const double inv_n = 1.0 / static_cast<double>(N);
    const double tau = config.tau;

    LossBreakdown out;
    out.tokens = N;
    out.d_logits = Matrix(N, V);

    std::vector<double> y(V), logy(V);
    double ce_sum = 0.0;
    for (std::size_t r = 0; r < N; ++r) {
        log_softmax(logits.row(r), 1.0, y, logy);
        const auto t = static_cast<std::size_t>(targets[r]);
        ce_sum -= logy[t];
        if (w_ce != 0.0) {
            auto d = out.d_logits.row(r);
            const double s = w_ce * inv_n;
            for (std::size_t i = 0; i < V; ++i) {
                d[i] = s * y[i];
            }
            d[t] -= s;
        }
    }
    out.ce = ce_sum * inv_n;

    if (need_aug) {
        // Target scores L^T u for every row at once.
        Matrix u(N, embedding.rows());
        for (std::size_t r = 0; r < N; ++r) {
            const auto t = static_cast<std::size_t>(targets[r]);
            auto ur = u.row(r);
            for (std::size_t d = 0; d < embedding.rows(); ++d) {
                ur[d] = embedding(d, t);
            }
        }
        const Matrix scores = matmul(u, embedding);
        const bool full_grad = !config.stop_gradient_through_target && w_aug != 0.0;
        Matrix d_scores;
        if (full_grad) {
            d_scores = Matrix(N, V);
        }

        std::vector<double> yh(V), logyh(V), yt(V), logyt(V);
        double aug_sum = 0.0;
        for (std::size_t r = 0; r < N; ++r) {
            log_softmax(logits.row(r), tau, yh, logyh);
            log_softmax(scores.row(r), tau, yt, logyt);
            double kl = 0.0;
            for (std::size_t i = 0; i < V; ++i) {
                if (yt[i] > 0.0) {
                    kl += yt[i] * (logyt[i] - logyh[i]);
                }
            }
            aug_sum += std::max(kl, 0.0);
            if (w_aug != 0.0) {
                auto d = out.d_logits.row(r);
                const double s = w_aug * inv_n / tau;
                for (std::size_t i = 0; i < V; ++i) {
                    d[i] += s * (yh[i] - yt[i]);
                }
            }
            if (full_grad) {
                // d KL / d(scores/tau) = yt .* (g - <yt, g>), g = log yt - log yh
                double mean_g = 0.0;
                for (std::size_t i = 0; i < V; ++i) {
                    mean_g += yt[i] * (logyt[i] - logyh[i]);
                }
                auto ds = d_scores.row(r);
                const double s = w_aug * inv_n / tau;
                for (std::size_t i = 0; i < V; ++i) {
                    ds[i] = s * yt[i] * ((logyt[i] - logyh[i]) - mean_g);
                }
            }
        }
        out.aug = aug_sum * inv_n;

        if (full_grad) {
            // scores = u L  =>  dL += u^T dS, du = dS L^T scattered to target columns.
            Matrix d_emb = matmul_tn(u, d_scores);
            const Matrix du = matmul_nt(d_scores, embedding);
            for (std::size_t r = 0; r < N; ++r) {
                const auto t = static_cast<std::size_t>(targets[r]);
                const auto dr = du.row(r);
                for (std::size_t d = 0; d < embedding.rows(); ++d) {
                    d_emb(d, t) += dr[d];
                }
            }
            out.d_embedding = std::move(d_emb);
        }
    }

    switch (config.mode) {
    case LossMode::baseline:
        out.total = out.ce;
        break;
    case LossMode::alpha_form:
        out.total = out.ce + config.effective_alpha() * out.aug;
        break;
    case LossMode::beta_mixture:
        out.total = config.beta * out.aug * tau * tau * static_cast<double>(V) +
                    (1.0 - config.beta) * out.ce;
        break;
    }
    return out;
}

LogitMatchingResidual logit_matching_residual(std::span<const double> logits,
                                              const Matrix &embedding, TokenId target,
                                              double tau) {
    require(tau > 0.0, "logit_matching_residual: tau must be positive");
    const std::size_t V = logits.size();
    require(embedding.cols() == V, "logit_matching_residual: vocabulary mismatch");
    check_target(target, V);

    const auto y_hat = softmax_with_temperature(logits, tau);
    const auto y_tilde = estimate_target_distribution(embedding, target, tau);
    const auto grad = augmented_loss_grad_logits(y_hat, y_tilde, tau);

    LogitMatchingResidual out;
    out.grad_scaled.resize(V);
    out.reference.resize(V);
    const auto t = static_cast<std::size_t>(target);
    const double scale = tau * tau * static_cast<double>(V);
    for (std::size_t i = 0; i < V; ++i) {
        double s = 0.0;
        for (std::size_t d = 0; d < embedding.rows(); ++d) {
            s += embedding(d, t) * embedding(d, i);
        }
        out.reference[i] = logits[i] - s;
        out.grad_scaled[i] = scale * grad[i];
    }
    auto center = [](std::vector<double> &v) {
        double m = 0.0;
        for (double x : v) {
            m += x;
        }
        m /= static_cast<double>(v.size());
        for (double &x : v) {
            x -= m;
        }
    };
    center(out.reference);
    center(out.grad_scaled);

    double diff = 0.0, ref = 0.0, gs = 0.0;
    for (std::size_t i = 0; i < V; ++i) {
        const double e = out.grad_scaled[i] - out.reference[i];
        diff += e * e;
        ref += out.reference[i] * out.reference[i];
        gs += out.grad_scaled[i] * out.grad_scaled[i];
    }
    if (ref == 0.0) {
        if (std::sqrt(gs) <= 1e-12) {
            out.rel_err = 0.0;
        } else {
            out.rel_err = std::numeric_limits<double>::infinity();
            out.degenerate = true;
        }
    } else {
        out.rel_err = std::sqrt(diff / ref);
    }
    return out;
}

} // namespace tiedlm
