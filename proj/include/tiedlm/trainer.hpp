#pragma once

#include <tiedlm/corpus.hpp>
#include <tiedlm/loss.hpp>
#include <tiedlm/net.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace tiedlm {

struct TrainConfig {
    double lr_init = 1.0;
    std::size_t decay_start_epoch = 5;
    double decay_rate = 0.9;
    double clip_norm = 5.0;
    std::size_t epochs = 13;
    std::size_t bptt_steps = 35;
    std::size_t batch_size = 20;
    std::size_t eval_batch_size = 1;
    /// Log the L^T / W subspace distance after each epoch (untied models only).
    bool track_subspace = false;
    LossConfig loss;
    ModelConfig model;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

/// The four model variants compared in the experiments: plain, augmented loss, reused
/// (tied) embeddings, and both.
enum class Variant { baseline, al, re, real };
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);
/// Sets (loss mode, tie_weights) for the variant; other fields are untouched.
void apply_variant(TrainConfig &config, Variant v);

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_ppl = 0.0;
    double valid_ppl = 0.0; // NaN when no validation stream was given
    std::optional<double> subspace_distance;
    double seconds = 0.0;
};

struct TrainLog {
    double initial_valid_ppl = 0.0;
    std::vector<EpochRecord> epochs;
};

/// Learning rate for a 1-based epoch: lr_init up to decay_start_epoch, then multiplied
/// by decay_rate once per further epoch.
double lr_schedule(const TrainConfig &config, std::size_t epoch);

struct ClipStats {
    double norm_before = 0.0;
    double scale = 1.0;
};

/// Rescales all gradients by clip_norm / global_norm when the norm exceeds clip_norm.
/// Throws NonFiniteError (grads untouched) on a NaN/Inf norm.
ClipStats clip_gradients(ModelParams &grads, double clip_norm);

/// Clips, then params -= lr * grads. On non-finite gradients params are left unchanged.
ClipStats sgd_step(ModelParams &params, ModelParams grads, double lr, double clip_norm);

/// exp(mean next-token cross-entropy) with dropout off and the hidden state carried
/// through the whole stream (split into `batch_size` contiguous rows).
double evaluate_perplexity(const ModelParams &params, const TokenStream &stream,
                           std::size_t batch_size = 1, std::size_t steps = 35);

/// Next-token distribution after feeding `context` (batch 1, no dropout).
std::vector<double> predict_next(const ModelParams &params, std::span<const TokenId> context);

struct TrainResult {
    ModelParams params;      // after the last epoch
    ModelParams best_params; // lowest validation perplexity (== params without validation)
    std::size_t best_epoch = 0;
    TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

/// SGD over contiguous BPTT windows. The objective per window is the loss summed over
/// time steps and averaged over the batch. Hidden state is carried across windows and
/// reset at each epoch. `valid` may be null to skip validation.
TrainResult train(const TokenStream &train_stream, const TokenStream *valid,
                  const TrainConfig &config, const EpochCallback &on_epoch = {});

} // namespace tiedlm
