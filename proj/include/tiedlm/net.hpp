#pragma once

#include <tiedlm/corpus.hpp>
#include <tiedlm/matrix.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tiedlm {

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t num_layers = 2;
    bool tie_weights = false;
    double dropout_p = 0.0;
    bool unit_norm_embeddings = false;
    std::uint64_t seed = 0;

    /// Throws ContractViolation: tying needs embed_dim == hidden_dim, dropout in [0, 1).
    void validate() const;
    friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

/// One LSTM layer. Gate blocks along the 4h axis are ordered input, forget, candidate,
/// output.
struct LstmWeights {
    Matrix w_input;  // 4h x in
    Matrix w_hidden; // 4h x h
    Matrix bias;     // 1 x 4h
    friend bool operator==(const LstmWeights &, const LstmWeights &) = default;
};

struct NamedTensor {
    std::string name;
    Matrix *tensor;
};
struct ConstNamedTensor {
    std::string name;
    const Matrix *tensor;
};

/// Trainable tensors. The embedding is stored d_x x |V| (word vectors are columns).
/// Tied models carry no projection: logits are L^T h with zero bias.
struct ModelParams {
    ModelConfig config;
    Matrix embedding;
    std::vector<LstmWeights> layers;
    std::optional<Matrix> proj_weight; // |V| x d_h
    std::optional<Matrix> proj_bias;   // 1 x |V|

    /// Fixed order: embedding, lstm{k}.w_input, lstm{k}.w_hidden, lstm{k}.bias, proj.*
    std::vector<NamedTensor> tensors();
    std::vector<ConstNamedTensor> tensors() const;
    std::vector<const Matrix *> tensor_ptrs() const;
    std::size_t parameter_count() const;

    friend bool operator==(const ModelParams &, const ModelParams &) = default;
};

std::size_t parameter_count(const ModelConfig &config);

/// All-zero tensors with the shapes implied by `config`.
ModelParams allocate_params(const ModelConfig &config);
/// Same shapes and config as `like`, zero-filled (gradient buffers).
ModelParams zeros_like(const ModelParams &like);

/// Weights uniform in [-0.05, 0.05] from the "init" child stream of `seed`; biases zero.
/// When unit_norm_embeddings is set the word vectors start normalized.
ModelParams init_params(const ModelConfig &config, std::uint64_t seed);

/// Hidden and cell state per layer, each batch x d_h.
struct RecurrentState {
    std::vector<Matrix> hidden;
    std::vector<Matrix> cell;
};
RecurrentState zero_state(const ModelConfig &config, std::size_t batch_size);

/// Inverted-dropout masks, one batch x d_h matrix per layer. A layer's mask is applied
/// to its hidden state both when fed back recurrently and when passed upward (to the
/// next layer or to the output projection). The embedding output is never dropped.
struct DropoutMasks {
    std::vector<Matrix> hidden;
};

/// Entries are 0 or 1/(1-p), i.i.d. Bernoulli(1-p) keeps.
DropoutMasks sample_masks(const ModelConfig &config, std::size_t batch_size, std::uint64_t seed);

struct LayerTape {
    Matrix input;  // (T*B) x in, layer input after dropout
    Matrix gates;  // (T*B) x 4h, post-activation
    Matrix cells;  // ((T+1)*B) x h, block 0 is the carried-in cell
    Matrix hidden; // ((T+1)*B) x h, undropped, block 0 is the carried-in hidden
};

/// Everything backward() needs. Rows are time-major: row t*B + b.
struct ForwardTape {
    std::size_t batch_size = 0;
    std::size_t steps = 0;
    std::vector<TokenId> inputs; // time-major
    std::optional<DropoutMasks> masks;
    std::vector<LayerTape> layers;
    Matrix top;    // (T*B) x d_h, top hidden after its mask
    Matrix logits; // (T*B) x |V|
};

struct ForwardResult {
    ForwardTape tape;
    RecurrentState final_state;
};

ForwardResult forward(const ModelParams &params, const BpttBatch &batch,
                      const DropoutMasks *masks, const RecurrentState &initial_state);

/// Targets of `batch` in the tape's time-major row order.
std::vector<TokenId> time_major_targets(const BpttBatch &batch);

/// Exact gradient of sum(d_logits .* logits) with respect to every parameter. In tied
/// mode the embedding receives both the lookup and the projection contributions.
ModelParams backward(const ForwardTape &tape, const ModelParams &params,
                     const Matrix &d_logits);

/// Rescales every word vector (column of the embedding) to unit norm. Zero vectors are
/// left unchanged; their count is returned.
std::size_t renormalize_embedding_rows(ModelParams &params);

} // namespace tiedlm
