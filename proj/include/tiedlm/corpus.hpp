#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tiedlm {

using TokenId = std::int32_t;

inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kEosToken = "<eos>";

/// Bidirectional token <-> id map. `<unk>` and `<eos>` are always present; looking up an
/// unknown token yields unk_id().
class Vocabulary {
  public:
    Vocabulary() = default;

    /// Builds from raw token counts: descending frequency, ties broken lexicographically.
    /// The reserved tokens are added with count 0 if absent.
    static Vocabulary from_counts(const std::unordered_map<std::string, std::size_t> &counts);
    /// Builds from an explicit id-ordered token list (e.g. a saved vocab file).
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    std::size_t size() const noexcept { return id_to_token_.size(); }
    TokenId id(std::string_view token) const;
    const std::string &token(TokenId id) const;
    bool contains(std::string_view token) const;
    TokenId unk_id() const noexcept { return unk_id_; }
    TokenId eos_id() const noexcept { return eos_id_; }
    const std::vector<std::string> &tokens() const noexcept { return id_to_token_; }

    /// One token per line, in id order.
    void save(const std::filesystem::path &path) const;
    static Vocabulary load(const std::filesystem::path &path);

    friend bool operator==(const Vocabulary &a, const Vocabulary &b) {
        return a.id_to_token_ == b.id_to_token_;
    }

  private:
    void index();

    std::unordered_map<std::string, TokenId> token_to_id_;
    std::vector<std::string> id_to_token_;
    TokenId unk_id_ = 0;
    TokenId eos_id_ = 0;
};

enum class Split { train, valid, test };
std::string_view to_string(Split s);

struct TokenStream {
    std::vector<TokenId> ids;
    Split split = Split::train;

    std::size_t size() const noexcept { return ids.size(); }
};

struct LoadedCorpus {
    TokenStream stream;
    Vocabulary vocab;
};

/// Reads a whitespace-tokenized text file, appending `<eos>` per line. With no vocabulary
/// supplied one is built from this file; otherwise OOV tokens map to `<unk>`.
LoadedCorpus load_corpus(const std::filesystem::path &path, const Vocabulary *vocab = nullptr,
                         Split split = Split::train);

/// Tokenizes one line of free text under `vocab` (no `<eos>` appended).
std::vector<TokenId> encode_text(std::string_view text, const Vocabulary &vocab);

/// One truncated-BPTT window: batch_size rows x `steps` columns, row-major.
struct BpttBatch {
    std::size_t batch_size = 0;
    std::size_t steps = 0;
    std::vector<TokenId> inputs;
    std::vector<TokenId> targets;

    TokenId input(std::size_t b, std::size_t t) const { return inputs[b * steps + t]; }
    TokenId target(std::size_t b, std::size_t t) const { return targets[b * steps + t]; }
};

/// Splits the N-1 (input, next-token) pairs of the stream into batch_size contiguous rows
/// of floor((N-1)/batch_size) pairs, then cuts consecutive windows of at most `steps`.
/// Row b of window w+1 continues row b of window w.
std::vector<BpttBatch> batchify(const TokenStream &stream, std::size_t batch_size,
                                std::size_t steps);

TokenStream take_contiguous(const TokenStream &stream, std::size_t offset, std::size_t length);

/// Seeded offset in [0, stream_size - length] drawn from the "data-offset" child stream.
std::size_t choose_offset(std::size_t stream_size, std::size_t length, std::uint64_t seed);

} // namespace tiedlm
