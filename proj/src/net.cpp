#include <tiedlm/linalg.hpp>
#include <tiedlm/net.hpp>
#include <tiedlm/rng.hpp>

#include <cmath>

namespace tiedlm {

void ModelConfig::validate() const {
    require(vocab_size > 0, "ModelConfig: vocab_size must be positive");
    require(embed_dim > 0 && hidden_dim > 0, "ModelConfig: dimensions must be positive");
    require(num_layers == 2, "ModelConfig: only 2-layer models are supported");
    require(dropout_p >= 0.0 && dropout_p < 1.0, "ModelConfig: dropout_p must be in [0, 1)");
    if (tie_weights) {
        require(embed_dim == hidden_dim,
                "ModelConfig: tie_weights requires embed_dim == hidden_dim");
    }
}

// ---------------------------------------------------------------------------
// Parameter containers
// ---------------------------------------------------------------------------

std::vector<NamedTensor> ModelParams::tensors() {
    std::vector<NamedTensor> out;
    out.push_back({"embedding", &embedding});
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const std::string p = "lstm" + std::to_string(k);
        out.push_back({p + ".w_input", &layers[k].w_input});
        out.push_back({p + ".w_hidden", &layers[k].w_hidden});
        out.push_back({p + ".bias", &layers[k].bias});
    }
    if (proj_weight) {
        out.push_back({"proj.weight", &*proj_weight});
    }
    if (proj_bias) {
        out.push_back({"proj.bias", &*proj_bias});
    }
    return out;
}

std::vector<ConstNamedTensor> ModelParams::tensors() const {
    std::vector<ConstNamedTensor> out;
    for (auto &t : const_cast<ModelParams *>(this)->tensors()) {
        out.push_back({t.name, t.tensor});
    }
    return out;
}

std::vector<const Matrix *> ModelParams::tensor_ptrs() const {
    std::vector<const Matrix *> out;
    for (const auto &t : tensors()) {
        out.push_back(t.tensor);
    }
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto &t : tensors()) {
        n += t.tensor->size();
    }
    return n;
}

std::size_t parameter_count(const ModelConfig &c) {
    std::size_t n = c.embed_dim * c.vocab_size;
    std::size_t in = c.embed_dim;
    for (std::size_t k = 0; k < c.num_layers; ++k) {
        n += 4 * c.hidden_dim * (in + c.hidden_dim + 1);
        in = c.hidden_dim;
    }
    if (!c.tie_weights) {
        n += c.vocab_size * (c.hidden_dim + 1);
    }
    return n;
}

ModelParams allocate_params(const ModelConfig &config) {
    config.validate();
    ModelParams p;
    p.config = config;
    p.embedding = Matrix(config.embed_dim, config.vocab_size);
    std::size_t in = config.embed_dim;
    const std::size_t h = config.hidden_dim;
    for (std::size_t k = 0; k < config.num_layers; ++k) {
        p.layers.push_back({Matrix(4 * h, in), Matrix(4 * h, h), Matrix(1, 4 * h)});
        in = h;
    }
    if (!config.tie_weights) {
        p.proj_weight = Matrix(config.vocab_size, h);
        p.proj_bias = Matrix(1, config.vocab_size);
    }
    return p;
}

ModelParams zeros_like(const ModelParams &like) {
    ModelParams z = like;
    for (auto &t : z.tensors()) {
        t.tensor->fill(0.0);
    }
    return z;
}

ModelParams init_params(const ModelConfig &config, std::uint64_t seed) {
    ModelParams p = allocate_params(config);
    Rng rng(derive_seed(seed, "init"));
    auto fill_uniform = [&rng](Matrix &m) {
        for (double &v : m.values()) {
            v = rng.uniform(-0.05, 0.05);
        }
    };
    fill_uniform(p.embedding);
    for (auto &layer : p.layers) {
        fill_uniform(layer.w_input);
        fill_uniform(layer.w_hidden);
    }
    if (p.proj_weight) {
        fill_uniform(*p.proj_weight);
    }
    if (config.unit_norm_embeddings) {
        renormalize_embedding_rows(p);
    }
    return p;
}

RecurrentState zero_state(const ModelConfig &config, std::size_t batch_size) {
    RecurrentState s;
    for (std::size_t k = 0; k < config.num_layers; ++k) {
        s.hidden.emplace_back(batch_size, config.hidden_dim);
        s.cell.emplace_back(batch_size, config.hidden_dim);
    }
    return s;
}

DropoutMasks sample_masks(const ModelConfig &config, std::size_t batch_size,
                          std::uint64_t seed) {
    require(config.dropout_p >= 0.0 && config.dropout_p < 1.0,
            "sample_masks: dropout_p must be in [0, 1)");
    DropoutMasks masks;
    const double p = config.dropout_p;
    const double keep_scale = 1.0 / (1.0 - p);
    Rng rng(seed);
    for (std::size_t k = 0; k < config.num_layers; ++k) {
        Matrix m(batch_size, config.hidden_dim, 1.0);
        if (p > 0.0) {
            for (double &v : m.values()) {
                v = rng.uniform() < p ? 0.0 : keep_scale;
            }
        }
        masks.hidden.push_back(std::move(m));
    }
    return masks;
}

std::size_t renormalize_embedding_rows(ModelParams &params) {
    Matrix &emb = params.embedding;
    std::vector<double> norms(emb.cols(), 0.0);
    for (std::size_t r = 0; r < emb.rows(); ++r) {
        const auto row = emb.row(r);
        for (std::size_t c = 0; c < emb.cols(); ++c) {
            norms[c] += row[c] * row[c];
        }
    }
    std::size_t zeros = 0;
    for (double &n : norms) {
        if (n == 0.0) {
            ++zeros;
            n = 1.0;
        } else {
            n = 1.0 / std::sqrt(n);
        }
    }
    for (std::size_t r = 0; r < emb.rows(); ++r) {
        auto row = emb.row(r);
        for (std::size_t c = 0; c < emb.cols(); ++c) {
            row[c] *= norms[c];
        }
    }
    return zeros;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Copies block t (B rows) of `src` into `dst` rows, optionally multiplied by a mask.
void copy_block(const Matrix &src, std::size_t src_block, Matrix &dst, std::size_t dst_block,
                std::size_t rows, const Matrix *mask) {
    const std::size_t w = src.cols();
    for (std::size_t b = 0; b < rows; ++b) {
        const auto s = src.row(src_block * rows + b);
        auto d = dst.row(dst_block * rows + b);
        if (mask != nullptr) {
            const auto m = mask->row(b);
            for (std::size_t j = 0; j < w; ++j) {
                d[j] = s[j] * m[j];
            }
        } else {
            for (std::size_t j = 0; j < w; ++j) {
                d[j] = s[j];
            }
        }
    }
}

void check_state(const ModelConfig &c, const RecurrentState &s, std::size_t batch) {
    require(s.hidden.size() == c.num_layers && s.cell.size() == c.num_layers,
            "forward: initial state has wrong layer count");
    for (std::size_t k = 0; k < c.num_layers; ++k) {
        require(s.hidden[k].rows() == batch && s.hidden[k].cols() == c.hidden_dim &&
                    s.cell[k].rows() == batch && s.cell[k].cols() == c.hidden_dim,
                "forward: initial state dimension mismatch");
    }
}

} // namespace

std::vector<TokenId> time_major_targets(const BpttBatch &batch) {
    std::vector<TokenId> out(batch.batch_size * batch.steps);
    for (std::size_t t = 0; t < batch.steps; ++t) {
        for (std::size_t b = 0; b < batch.batch_size; ++b) {
            out[t * batch.batch_size + b] = batch.target(b, t);
        }
    }
    return out;
}

ForwardResult forward(const ModelParams &params, const BpttBatch &batch,
                      const DropoutMasks *masks, const RecurrentState &initial_state) {
    const ModelConfig &cfg = params.config;
    const std::size_t B = batch.batch_size;
    const std::size_t T = batch.steps;
    const std::size_t N = B * T;
    const std::size_t H = cfg.hidden_dim;
    const std::size_t V = cfg.vocab_size;
    require(B > 0 && T > 0, "forward: empty batch");
    require(batch.inputs.size() == N, "forward: batch inputs have wrong length");
    check_state(cfg, initial_state, B);
    if (masks != nullptr) {
        require(masks->hidden.size() == cfg.num_layers, "forward: mask layer count mismatch");
        for (const auto &m : masks->hidden) {
            require(m.rows() == B && m.cols() == H, "forward: mask shape mismatch");
        }
    }

    ForwardResult result;
    ForwardTape &tape = result.tape;
    tape.batch_size = B;
    tape.steps = T;
    tape.inputs.resize(N);
    if (masks != nullptr) {
        tape.masks = *masks;
    }

    // Embedding lookup: column id of L.
    Matrix x(N, cfg.embed_dim);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t b = 0; b < B; ++b) {
            const TokenId id = batch.input(b, t);
            if (id < 0 || static_cast<std::size_t>(id) >= V) {
                throw ContractViolation("forward: token id " + std::to_string(id) +
                                        " out of range for vocabulary of " + std::to_string(V));
            }
            tape.inputs[t * B + b] = id;
            auto row = x.row(t * B + b);
            for (std::size_t d = 0; d < cfg.embed_dim; ++d) {
                row[d] = params.embedding(d, static_cast<std::size_t>(id));
            }
        }
    }

    result.final_state = initial_state;
    for (std::size_t k = 0; k < cfg.num_layers; ++k) {
        const LstmWeights &w = params.layers[k];
        const Matrix *mask = masks != nullptr ? &masks->hidden[k] : nullptr;
        LayerTape lt;
        lt.input = std::move(x);
        lt.gates = matmul(lt.input, transpose(w.w_input));
        for (std::size_t r = 0; r < N; ++r) {
            auto g = lt.gates.row(r);
            for (std::size_t j = 0; j < 4 * H; ++j) {
                g[j] += w.bias(0, j);
            }
        }
        lt.cells = Matrix((T + 1) * B, H);
        lt.hidden = Matrix((T + 1) * B, H);
        copy_block(initial_state.cell[k], 0, lt.cells, 0, B, nullptr);
        copy_block(initial_state.hidden[k], 0, lt.hidden, 0, B, nullptr);

        const Matrix wh_t = transpose(w.w_hidden);
        Matrix h_prev(B, H);
        Matrix rec(B, 4 * H);
        for (std::size_t t = 0; t < T; ++t) {
            copy_block(lt.hidden, t, h_prev, 0, B, mask);
            rec = matmul(h_prev, wh_t);
            for (std::size_t b = 0; b < B; ++b) {
                auto g = lt.gates.row(t * B + b);
                const auto r = rec.row(b);
                const auto c_prev = lt.cells.row(t * B + b);
                auto c_new = lt.cells.row((t + 1) * B + b);
                auto h_new = lt.hidden.row((t + 1) * B + b);
                for (std::size_t j = 0; j < H; ++j) {
                    const double i_g = sigmoid(g[j] + r[j]);
                    const double f_g = sigmoid(g[H + j] + r[H + j]);
                    const double c_g = std::tanh(g[2 * H + j] + r[2 * H + j]);
                    const double o_g = sigmoid(g[3 * H + j] + r[3 * H + j]);
                    g[j] = i_g;
                    g[H + j] = f_g;
                    g[2 * H + j] = c_g;
                    g[3 * H + j] = o_g;
                    const double c = f_g * c_prev[j] + i_g * c_g;
                    c_new[j] = c;
                    h_new[j] = o_g * std::tanh(c);
                }
            }
        }
        copy_block(lt.cells, T, result.final_state.cell[k], 0, B, nullptr);
        copy_block(lt.hidden, T, result.final_state.hidden[k], 0, B, nullptr);

        // Output of this layer (after its mask) feeds the next layer / the projection.
        x = Matrix(N, H);
        for (std::size_t t = 0; t < T; ++t) {
            copy_block(lt.hidden, t + 1, x, t, B, mask);
        }
        tape.layers.push_back(std::move(lt));
    }

    tape.top = std::move(x);
    if (cfg.tie_weights) {
        tape.logits = matmul(tape.top, params.embedding);
    } else {
        tape.logits = matmul_nt(tape.top, *params.proj_weight);
        const auto bias = params.proj_bias->row(0);
        for (std::size_t r = 0; r < N; ++r) {
            auto l = tape.logits.row(r);
            for (std::size_t v = 0; v < V; ++v) {
                l[v] += bias[v];
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

ModelParams backward(const ForwardTape &tape, const ModelParams &params,
                     const Matrix &d_logits) {
    const ModelConfig &cfg = params.config;
    const std::size_t B = tape.batch_size;
    const std::size_t T = tape.steps;
    const std::size_t N = B * T;
    const std::size_t H = cfg.hidden_dim;
    require(d_logits.rows() == N && d_logits.cols() == cfg.vocab_size,
            "backward: d_logits shape " + d_logits.shape_string() + " does not match tape");
    require(tape.layers.size() == cfg.num_layers && tape.top.cols() == H,
            "backward: tape does not match parameters");

    ModelParams grads = zeros_like(params);

    // Projection.
    Matrix d_above;
    if (cfg.tie_weights) {
        d_above = matmul_nt(d_logits, params.embedding);
        matmul_tn_acc(tape.top, d_logits, grads.embedding);
    } else {
        d_above = matmul(d_logits, *params.proj_weight);
        matmul_tn_acc(d_logits, tape.top, *grads.proj_weight);
        auto db = grads.proj_bias->row(0);
        for (std::size_t r = 0; r < N; ++r) {
            const auto d = d_logits.row(r);
            for (std::size_t v = 0; v < cfg.vocab_size; ++v) {
                db[v] += d[v];
            }
        }
    }

    for (std::size_t k = cfg.num_layers; k-- > 0;) {
        const LayerTape &lt = tape.layers[k];
        const LstmWeights &w = params.layers[k];
        LstmWeights &gw = grads.layers[k];
        const Matrix *mask = tape.masks ? &tape.masks->hidden[k] : nullptr;

        // d_above is w.r.t. the masked output; move it to the raw hidden state.
        if (mask != nullptr) {
            for (std::size_t r = 0; r < N; ++r) {
                auto d = d_above.row(r);
                const auto m = mask->row(r % B);
                for (std::size_t j = 0; j < H; ++j) {
                    d[j] *= m[j];
                }
            }
        }

        Matrix d_gates(N, 4 * H);
        Matrix dh_rec(B, H);
        Matrix dc_next(B, H);
        Matrix dg_t(B, 4 * H);
        for (std::size_t t = T; t-- > 0;) {
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t row = t * B + b;
                const auto g = lt.gates.row(row);
                const auto c_prev = lt.cells.row(t * B + b);
                const auto c_cur = lt.cells.row((t + 1) * B + b);
                const auto da = d_above.row(row);
                const auto dr = dh_rec.row(b);
                auto dc_n = dc_next.row(b);
                auto dg = dg_t.row(b);
                for (std::size_t j = 0; j < H; ++j) {
                    const double i_g = g[j], f_g = g[H + j], c_g = g[2 * H + j],
                                 o_g = g[3 * H + j];
                    const double tc = std::tanh(c_cur[j]);
                    const double dh = da[j] + dr[j];
                    const double d_o = dh * tc;
                    const double dc = dc_n[j] + dh * o_g * (1.0 - tc * tc);
                    dg[j] = dc * c_g * i_g * (1.0 - i_g);
                    dg[H + j] = dc * c_prev[j] * f_g * (1.0 - f_g);
                    dg[2 * H + j] = dc * i_g * (1.0 - c_g * c_g);
                    dg[3 * H + j] = d_o * o_g * (1.0 - o_g);
                    dc_n[j] = dc * f_g;
                }
                auto dst = d_gates.row(row);
                for (std::size_t j = 0; j < 4 * H; ++j) {
                    dst[j] = dg[j];
                }
            }
            if (t > 0) {
                dh_rec = matmul(dg_t, w.w_hidden);
                if (mask != nullptr) {
                    for (std::size_t b = 0; b < B; ++b) {
                        auto d = dh_rec.row(b);
                        const auto m = mask->row(b);
                        for (std::size_t j = 0; j < H; ++j) {
                            d[j] *= m[j];
                        }
                    }
                }
            }
        }

        // Recurrent inputs h_{t-1} as seen by the gates (masked).
        Matrix h_prev(N, H);
        for (std::size_t t = 0; t < T; ++t) {
            copy_block(lt.hidden, t, h_prev, t, B, mask);
        }
        matmul_tn_acc(d_gates, h_prev, gw.w_hidden);
        matmul_tn_acc(d_gates, lt.input, gw.w_input);
        auto db = gw.bias.row(0);
        for (std::size_t r = 0; r < N; ++r) {
            const auto d = d_gates.row(r);
            for (std::size_t j = 0; j < 4 * H; ++j) {
                db[j] += d[j];
            }
        }
        d_above = matmul(d_gates, w.w_input);
    }

    // Embedding lookup: scatter into columns.
    for (std::size_t r = 0; r < N; ++r) {
        const auto id = static_cast<std::size_t>(tape.inputs[r]);
        const auto d = d_above.row(r);
        for (std::size_t e = 0; e < cfg.embed_dim; ++e) {
            grads.embedding(e, id) += d[e];
        }
    }
    return grads;
}

} // namespace tiedlm
