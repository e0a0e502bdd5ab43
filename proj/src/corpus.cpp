#include <tiedlm/corpus.hpp>
#include <tiedlm/errors.hpp>
#include <tiedlm/rng.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace tiedlm {

std::string_view to_string(Split s) {
    switch (s) {
    case Split::train:
        return "train";
    case Split::valid:
        return "valid";
    case Split::test:
        return "test";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary Vocabulary::from_counts(const std::unordered_map<std::string, std::size_t> &counts) {
    std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
    for (std::string_view reserved : {kUnkToken, kEosToken}) {
        if (!counts.contains(std::string(reserved))) {
            entries.emplace_back(std::string(reserved), 0);
        }
    }
    std::sort(entries.begin(), entries.end(), [](const auto &a, const auto &b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    std::vector<std::string> tokens;
    tokens.reserve(entries.size());
    for (auto &e : entries) {
        tokens.push_back(std::move(e.first));
    }
    return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    v.id_to_token_ = std::move(tokens);
    v.index();
    return v;
}

void Vocabulary::index() {
    token_to_id_.clear();
    token_to_id_.reserve(id_to_token_.size());
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
        const auto [it, inserted] =
            token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i));
        if (!inserted) {
            throw FormatError("vocabulary: duplicate token '" + id_to_token_[i] + "'");
        }
    }
    const auto unk = token_to_id_.find(std::string(kUnkToken));
    const auto eos = token_to_id_.find(std::string(kEosToken));
    if (unk == token_to_id_.end() || eos == token_to_id_.end()) {
        throw FormatError("vocabulary: missing reserved <unk>/<eos>");
    }
    unk_id_ = unk->second;
    eos_id_ = eos->second;
}

TokenId Vocabulary::id(std::string_view token) const {
    const auto it = token_to_id_.find(std::string(token));
    return it == token_to_id_.end() ? unk_id_ : it->second;
}

const std::string &Vocabulary::token(TokenId id) const {
    require(id >= 0 && static_cast<std::size_t>(id) < id_to_token_.size(),
            "Vocabulary::token: id out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
    return token_to_id_.contains(std::string(token));
}

void Vocabulary::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write vocabulary to " + path.string());
    }
    for (const auto &t : id_to_token_) {
        out << t << '\n';
    }
    if (!out) {
        throw FormatError("failed writing vocabulary to " + path.string());
    }
}

Vocabulary Vocabulary::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open vocabulary " + path.string());
    }
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            tokens.push_back(line);
        }
    }
    return from_tokens(std::move(tokens));
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream is{std::string(line)};
    std::string tok;
    while (is >> tok) {
        out.push_back(std::move(tok));
    }
    return out;
}

} // namespace

LoadedCorpus load_corpus(const std::filesystem::path &path, const Vocabulary *vocab,
                         Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open corpus " + path.string());
    }
    std::vector<std::vector<std::string>> lines;
    std::string line;
    bool any = false;
    while (std::getline(in, line)) {
        any = true;
        lines.push_back(split_ws(line));
    }
    if (!any) {
        throw FormatError("empty corpus " + path.string());
    }

    LoadedCorpus out;
    if (vocab != nullptr) {
        out.vocab = *vocab;
    } else {
        std::unordered_map<std::string, std::size_t> counts;
        for (const auto &toks : lines) {
            for (const auto &t : toks) {
                ++counts[t];
            }
            ++counts[std::string(kEosToken)];
        }
        out.vocab = Vocabulary::from_counts(counts);
    }

    out.stream.split = split;
    for (const auto &toks : lines) {
        for (const auto &t : toks) {
            out.stream.ids.push_back(out.vocab.id(t));
        }
        out.stream.ids.push_back(out.vocab.eos_id());
    }
    return out;
}

std::vector<TokenId> encode_text(std::string_view text, const Vocabulary &vocab) {
    std::vector<TokenId> ids;
    for (const auto &t : split_ws(text)) {
        ids.push_back(vocab.id(t));
    }
    return ids;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

std::vector<BpttBatch> batchify(const TokenStream &stream, std::size_t batch_size,
                                std::size_t steps) {
    require(batch_size > 0 && steps > 0, "batchify: batch_size and steps must be positive");
    if (stream.size() < batch_size + 1) {
        throw ContractViolation("batchify: stream of " + std::to_string(stream.size()) +
                                " tokens is too short for batch_size " +
                                std::to_string(batch_size));
    }
    const std::size_t row_len = (stream.size() - 1) / batch_size;
    std::vector<BpttBatch> batches;
    for (std::size_t start = 0; start < row_len; start += steps) {
        const std::size_t len = std::min(steps, row_len - start);
        BpttBatch b;
        b.batch_size = batch_size;
        b.steps = len;
        b.inputs.resize(batch_size * len);
        b.targets.resize(batch_size * len);
        for (std::size_t r = 0; r < batch_size; ++r) {
            const std::size_t base = r * row_len + start;
            for (std::size_t t = 0; t < len; ++t) {
                b.inputs[r * len + t] = stream.ids[base + t];
                b.targets[r * len + t] = stream.ids[base + t + 1];
            }
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

TokenStream take_contiguous(const TokenStream &stream, std::size_t offset, std::size_t length) {
    if (offset > stream.size() || length > stream.size() - offset) {
        throw ContractViolation("take_contiguous: slice [" + std::to_string(offset) + ", +" +
                                std::to_string(length) + ") exceeds stream of " +
                                std::to_string(stream.size()));
    }
    TokenStream out;
    out.split = stream.split;
    out.ids.assign(stream.ids.begin() + static_cast<std::ptrdiff_t>(offset),
                   stream.ids.begin() + static_cast<std::ptrdiff_t>(offset + length));
    return out;
}

std::size_t choose_offset(std::size_t stream_size, std::size_t length, std::uint64_t seed) {
    require(length <= stream_size, "choose_offset: slice longer than stream");
    Rng rng(derive_seed(seed, "data-offset"));
    return static_cast<std::size_t>(rng.below(stream_size - length + 1));
}

} // namespace tiedlm
