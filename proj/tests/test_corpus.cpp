#include "support/tmp.hpp"

#include <tiedlm/corpus.hpp>
#include <tiedlm/errors.hpp>
#include <tiedlm/rng.hpp>

#include <gtest/gtest.h>

#include <numeric>

namespace tiedlm {
namespace {

TokenStream iota_stream(std::size_t n) {
    TokenStream s;
    s.ids.resize(n);
    std::iota(s.ids.begin(), s.ids.end(), 0);
    return s;
}

TEST(Corpus, TwoLineHandTrace) {
    testing::TempDir dir;
    const auto c = load_corpus(dir.write("t.txt", "a b\na c\n"));
    EXPECT_EQ(c.vocab.size(), 5u);
    const auto &v = c.vocab;
    const std::vector<TokenId> expected{v.id("a"), v.id("b"), v.eos_id(),
                                        v.id("a"), v.id("c"), v.eos_id()};
    EXPECT_EQ(c.stream.ids, expected);
    // Frequency order, then lexicographic: <eos> and a tie at 2, b and c at 1, <unk> at 0.
    EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<eos>", "a", "b", "c", "<unk>"}));
}

TEST(Corpus, EmptyLineIsJustEos) {
    testing::TempDir dir;
    const auto c = load_corpus(dir.write("t.txt", "x\n\ny\n"));
    EXPECT_EQ(c.stream.ids[2], c.vocab.eos_id());
    EXPECT_EQ(c.stream.ids.size(), 5u);
}

TEST(Corpus, NonTrainingSplitsMapOovToUnk) {
    testing::TempDir dir;
    const auto train = load_corpus(dir.write("a.txt", "a b\n"));
    const auto valid = load_corpus(dir.write("b.txt", "a zzz\n"), &train.vocab, Split::valid);
    EXPECT_EQ(valid.stream.split, Split::valid);
    EXPECT_EQ(valid.stream.ids[1], train.vocab.unk_id());
    EXPECT_EQ(valid.vocab, train.vocab);
}

TEST(Corpus, MissingOrEmptyFileIsAnError) {
    testing::TempDir dir;
    EXPECT_THROW(load_corpus(dir / "nope.txt"), std::runtime_error);
    EXPECT_THROW(load_corpus(dir.write("e.txt", "")), std::runtime_error);
}

TEST(Corpus, VocabularyDeterministicAndRoundTrips) {
    testing::TempDir dir;
    const auto path = dir.write("t.txt", "the cat sat on the mat\nthe dog\n<unk> ran\n");
    const auto a = load_corpus(path);
    const auto b = load_corpus(path);
    EXPECT_EQ(a.vocab, b.vocab);
    a.vocab.save(dir / "vocab.txt");
    EXPECT_EQ(Vocabulary::load(dir / "vocab.txt"), a.vocab);
    // Decode then re-encode.
    std::string text;
    for (TokenId id : a.stream.ids) {
        text += a.vocab.token(id) + " ";
    }
    EXPECT_EQ(encode_text(text, a.vocab), a.stream.ids);
    for (std::size_t i = 0; i < a.vocab.size(); ++i) {
        EXPECT_EQ(a.vocab.id(a.vocab.token(static_cast<TokenId>(i))), static_cast<TokenId>(i));
    }
}

TEST(Corpus, BundledTinyCorpusLoads) {
    const auto train = load_corpus(std::string(TIEDLM_DATA_DIR) + "/tiny/train.txt");
    const auto valid =
        load_corpus(std::string(TIEDLM_DATA_DIR) + "/tiny/valid.txt", &train.vocab, Split::valid);
    EXPECT_GT(train.stream.size(), 25000u);
    EXPECT_GT(train.vocab.size(), 500u);
    EXPECT_GT(valid.stream.size(), 4000u);
}

TEST(Batchify, SpecHandTrace) {
    const auto batches = batchify(iota_stream(11), 2, 2);
    ASSERT_FALSE(batches.empty());
    EXPECT_EQ(batches[0].inputs, (std::vector<TokenId>{0, 1, 5, 6}));
    EXPECT_EQ(batches[0].targets, (std::vector<TokenId>{1, 2, 6, 7}));
    ASSERT_EQ(batches.size(), 3u);
    EXPECT_EQ(batches[2].steps, 1u); // the row length 5 leaves a short final window
    EXPECT_EQ(batches[2].inputs, (std::vector<TokenId>{4, 9}));
}

TEST(Batchify, DegenerateCases) {
    const auto one = batchify(iota_stream(4), 1, 10);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].steps, 3u);
    EXPECT_EQ(one[0].inputs, (std::vector<TokenId>{0, 1, 2}));
    EXPECT_THROW(batchify(iota_stream(2), 2, 2), ContractViolation);
    EXPECT_THROW(batchify(iota_stream(20), 0, 2), ContractViolation);
}

TEST(Batchify, TargetsAreNextTokensAndRowsContinue) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        TokenStream s;
        const std::size_t n = 2 + rng.below(300);
        for (std::size_t i = 0; i < n; ++i) {
            s.ids.push_back(static_cast<TokenId>(rng.below(1000)));
        }
        const std::size_t B = 1 + rng.below(std::min<std::size_t>(n - 1, 8));
        const std::size_t T = 1 + rng.below(12);
        const auto batches = batchify(s, B, T);
        const std::size_t row = (n - 1) / B;
        std::vector<std::size_t> pos(B, 0);
        for (const auto &b : batches) {
            EXPECT_LE(b.steps, T);
            for (std::size_t r = 0; r < B; ++r) {
                for (std::size_t t = 0; t < b.steps; ++t) {
                    const std::size_t at = r * row + pos[r] + t;
                    EXPECT_EQ(b.input(r, t), s.ids[at]);
                    EXPECT_EQ(b.target(r, t), s.ids[at + 1]);
                }
                pos[r] += b.steps;
            }
        }
        for (std::size_t p : pos) {
            EXPECT_EQ(p, row);
        }
    }
}

TEST(Slices, TakeContiguousAndSeededOffset) {
    const auto s = iota_stream(100);
    EXPECT_EQ(take_contiguous(s, 10, 5).ids, (std::vector<TokenId>{10, 11, 12, 13, 14}));
    EXPECT_EQ(take_contiguous(s, 0, 100).ids, s.ids);
    EXPECT_THROW(take_contiguous(s, 96, 5), ContractViolation);
    EXPECT_EQ(choose_offset(1000, 100, 5), choose_offset(1000, 100, 5));
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        EXPECT_LE(choose_offset(1000, 100, seed), 900u);
    }
    EXPECT_EQ(choose_offset(100, 100, 3), 0u);
}

} // namespace
} // namespace tiedlm
