#include <tiedlm/linalg.hpp>
#include <tiedlm/rng.hpp>
#include <tiedlm/subspace.hpp>
#include <tiedlm/trainer.hpp>

#include <chrono>
#include <cmath>
#include <limits>

namespace tiedlm {

void TrainConfig::validate() const {
    require(lr_init > 0.0, "TrainConfig: lr_init must be positive");
    require(decay_rate > 0.0 && decay_rate <= 1.0, "TrainConfig: decay_rate must be in (0, 1]");
    require(clip_norm > 0.0, "TrainConfig: clip_norm must be positive");
    require(bptt_steps > 0, "TrainConfig: bptt_steps must be positive");
    require(batch_size > 0 && eval_batch_size > 0, "TrainConfig: batch sizes must be positive");
    loss.validate();
    model.validate();
}

std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::baseline:
        return "baseline";
    case Variant::al:
        return "al";
    case Variant::re:
        return "re";
    case Variant::real:
        return "real";
    }
    return "unknown";
}

Variant parse_variant(std::string_view s) {
    if (s == "baseline") {
        return Variant::baseline;
    }
    if (s == "al") {
        return Variant::al;
    }
    if (s == "re") {
        return Variant::re;
    }
    if (s == "real") {
        return Variant::real;
    }
    throw ContractViolation("unknown variant '" + std::string(s) +
                            "' (expected baseline, al, re or real)");
}

void apply_variant(TrainConfig &config, Variant v) {
    const bool aug = v == Variant::al || v == Variant::real;
    config.loss.mode = aug ? LossMode::alpha_form : LossMode::baseline;
    config.model.tie_weights = v == Variant::re || v == Variant::real;
}

double lr_schedule(const TrainConfig &config, std::size_t epoch) {
    require(epoch >= 1, "lr_schedule: epochs are 1-based");
    double lr = config.lr_init;
    for (std::size_t e = config.decay_start_epoch + 1; e <= epoch; ++e) {
        lr *= config.decay_rate;
    }
    return lr;
}

ClipStats clip_gradients(ModelParams &grads, double clip_norm) {
    require(clip_norm > 0.0, "clip_gradients: clip_norm must be positive");
    ClipStats s;
    const auto ptrs = grads.tensor_ptrs();
    s.norm_before = global_norm(ptrs);
    if (!std::isfinite(s.norm_before)) {
        throw NonFiniteError("non-finite gradient norm");
    }
    if (s.norm_before > clip_norm) {
        s.scale = clip_norm / s.norm_before;
        for (auto &t : grads.tensors()) {
            for (double &v : t.tensor->values()) {
                v *= s.scale;
            }
        }
    }
    return s;
}

ClipStats sgd_step(ModelParams &params, ModelParams grads, double lr, double clip_norm) {
    auto pt = params.tensors();
    auto gt = grads.tensors();
    require(pt.size() == gt.size(), "sgd_step: gradient set does not match parameters");
    for (std::size_t i = 0; i < pt.size(); ++i) {
        require(pt[i].tensor->same_shape(*gt[i].tensor),
                "sgd_step: shape mismatch for " + pt[i].name);
    }
    const ClipStats s = clip_gradients(grads, clip_norm);
    for (std::size_t i = 0; i < pt.size(); ++i) {
        double *p = pt[i].tensor->data();
        const double *g = gt[i].tensor->data();
        const std::size_t n = pt[i].tensor->size();
        for (std::size_t j = 0; j < n; ++j) {
            p[j] -= lr * g[j];
        }
    }
    return s;
}

double evaluate_perplexity(const ModelParams &params, const TokenStream &stream,
                           std::size_t batch_size, std::size_t steps) {
    require(stream.size() > 1, "evaluate_perplexity: stream needs at least two tokens");
    const auto batches = batchify(stream, batch_size, steps);
    RecurrentState state = zero_state(params.config, batch_size);
    double nll = 0.0;
    std::size_t count = 0;
    for (const auto &batch : batches) {
        ForwardResult fr = forward(params, batch, nullptr, state);
        const auto targets = time_major_targets(batch);
        const Matrix &logits = fr.tape.logits;
        for (std::size_t r = 0; r < logits.rows(); ++r) {
            const auto row = logits.row(r);
            double mx = -std::numeric_limits<double>::infinity();
            for (double v : row) {
                mx = std::max(mx, v);
            }
            double sum = 0.0;
            for (double v : row) {
                sum += std::exp(v - mx);
            }
            nll += std::log(sum) + mx - row[static_cast<std::size_t>(targets[r])];
        }
        count += logits.rows();
        state = std::move(fr.final_state);
    }
    return std::exp(nll / static_cast<double>(count));
}

std::vector<double> predict_next(const ModelParams &params, std::span<const TokenId> context) {
    require(!context.empty(), "predict_next: empty context");
    BpttBatch batch;
    batch.batch_size = 1;
    batch.steps = context.size();
    batch.inputs.assign(context.begin(), context.end());
    batch.targets.assign(context.size(), 0);
    const ForwardResult fr = forward(params, batch, nullptr, zero_state(params.config, 1));
    return softmax_with_temperature(fr.tape.logits.row(context.size() - 1), 1.0);
}

TrainResult train(const TokenStream &train_stream, const TokenStream *valid,
                  const TrainConfig &config, const EpochCallback &on_epoch) {
    config.validate();
    require(train_stream.size() > config.batch_size, "train: training stream too short");
    const std::size_t V = config.model.vocab_size;
    auto check_ids = [V](const TokenStream &s, const char *what) {
        for (TokenId id : s.ids) {
            if (id < 0 || static_cast<std::size_t>(id) >= V) {
                throw ContractViolation(std::string("train: ") + what +
                                        " stream has ids outside the vocabulary");
            }
        }
    };
    check_ids(train_stream, "training");
    if (valid != nullptr) {
        require(valid->size() > 1, "train: validation stream too short");
        check_ids(*valid, "validation");
    }

    TrainResult result;
    result.params = init_params(config.model, config.seed);
    result.params.config.seed = config.seed;
    ModelParams &params = result.params;
    const bool use_dropout = config.model.dropout_p > 0.0;

    const auto batches = batchify(train_stream, config.batch_size, config.bptt_steps);
    result.log.initial_valid_ppl =
        valid != nullptr ? evaluate_perplexity(params, *valid, config.eval_batch_size,
                                               config.bptt_steps)
                         : std::numeric_limits<double>::quiet_NaN();

    double best_valid = std::numeric_limits<double>::infinity();
    std::size_t window_index = 0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_schedule(config, epoch);
        RecurrentState state = zero_state(config.model, config.batch_size);
        double ce_sum = 0.0;
        std::size_t tokens = 0;

        for (std::size_t bi = 0; bi < batches.size(); ++bi, ++window_index) {
            const BpttBatch &batch = batches[bi];
            std::optional<DropoutMasks> masks;
            if (use_dropout) {
                masks = sample_masks(config.model, config.batch_size,
                                     derive_seed(config.seed, "dropout", window_index));
            }
            ForwardResult fr = forward(params, batch, masks ? &*masks : nullptr, state);
            const auto targets = time_major_targets(batch);
            LossBreakdown loss = total_loss(fr.tape.logits, targets, params.embedding, config.loss);
            if (!std::isfinite(loss.total)) {
                throw NonFiniteError("non-finite loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(bi));
            }
            // Mean over tokens -> sum over time, mean over batch.
            const double time_scale = static_cast<double>(batch.steps);
            for (double &v : loss.d_logits.values()) {
                v *= time_scale;
            }
            ModelParams grads = backward(fr.tape, params, loss.d_logits);
            if (loss.d_embedding) {
                double *g = grads.embedding.data();
                const double *e = loss.d_embedding->data();
                for (std::size_t i = 0; i < grads.embedding.size(); ++i) {
                    g[i] += time_scale * e[i];
                }
            }
            try {
                sgd_step(params, std::move(grads), lr, config.clip_norm);
            } catch (const NonFiniteError &) {
                throw NonFiniteError("non-finite gradient at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(bi));
            }
            if (config.model.unit_norm_embeddings) {
                renormalize_embedding_rows(params);
            }
            ce_sum += loss.ce * static_cast<double>(loss.tokens);
            tokens += loss.tokens;
            state = std::move(fr.final_state);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.train_ppl = std::exp(ce_sum / static_cast<double>(tokens));
        rec.valid_ppl = valid != nullptr ? evaluate_perplexity(params, *valid,
                                                               config.eval_batch_size,
                                                               config.bptt_steps)
                                         : std::numeric_limits<double>::quiet_NaN();
        if (config.track_subspace && !config.model.tie_weights) {
            rec.subspace_distance = model_subspace_distance(params).distance;
        }
        if (valid == nullptr || rec.valid_ppl < best_valid) {
            best_valid = valid != nullptr ? rec.valid_ppl : best_valid;
            result.best_params = params;
            result.best_epoch = epoch;
        }
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.epochs.push_back(rec);
        if (on_epoch) {
            on_epoch(rec);
        }
    }
    if (config.epochs == 0) {
        result.best_params = params;
    }
    return result;
}

} // namespace tiedlm
