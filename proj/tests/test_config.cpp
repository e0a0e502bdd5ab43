#include "support/tmp.hpp"

#include <tiedlm/config.hpp>
#include <tiedlm/rng.hpp>

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

using namespace tiedlm;
using tiedlm::testing::TempDir;

namespace {

// A valid, non-default value for every key.
std::string other_value(const std::string &key, const std::string &current) {
    if (key == "loss_mode") {
        return current == "beta_mixture" ? "alpha_form" : "beta_mixture";
    }
    if (current == "true" || current == "false") {
        return current == "true" ? "false" : "true";
    }
    if (current.find_first_of(".e") != std::string::npos || key == "tau" || key == "alpha" ||
        key == "gamma" || key == "beta" || key == "dropout_p" || key == "lr_init" ||
        key == "decay_rate" || key == "clip_norm") {
        return current == "0.25" ? "0.5" : "0.25";
    }
    return current == "7" ? "8" : "7";
}

TrainConfig random_config(Rng &rng) {
    TrainConfig c;
    for (const auto &k : config_keys()) {
        if (rng.uniform() < 0.5) {
            k.set(c, other_value(k.name, k.get(c)));
        }
    }
    c.lr_init = rng.uniform(0.01, 2.0);
    c.loss.tau = rng.uniform(0.5, 100.0);
    c.seed = rng.next_u64();
    c.model.seed = c.seed;
    return c;
}

std::vector<std::pair<std::string, std::string>> parse(const std::string &text) {
    std::istringstream in(text);
    return parse_config_text(in);
}

TrainConfig from_text(const std::string &text) {
    TrainConfig c;
    for (const auto &[k, v] : parse(text)) {
        apply_config_value(c, k, v);
    }
    return c;
}

template <typename F> std::string error_key(F &&f) {
    try {
        f();
    } catch (const ConfigError &e) {
        return e.key();
    }
    return "<no error>";
}

} // namespace

TEST(ConfigKeys, NamesAreUniqueAndEachControlsItsOwnField) {
    std::set<std::string> names;
    for (const auto &k : config_keys()) {
        EXPECT_TRUE(names.insert(k.name).second) << k.name;
        EXPECT_FALSE(k.help.empty()) << k.name;
        EXPECT_EQ(find_config_key(k.name), &k);
    }
    EXPECT_EQ(find_config_key("no_such_key"), nullptr);
    // Changing one key moves exactly that key's rendered value.
    const TrainConfig base;
    for (const auto &k : config_keys()) {
        TrainConfig c = base;
        k.set(c, other_value(k.name, k.get(c)));
        EXPECT_FALSE(c == base) << k.name;
        for (const auto &o : config_keys()) {
            if (o.name != k.name) {
                EXPECT_EQ(o.get(c), o.get(base)) << k.name << " leaked into " << o.name;
            }
        }
    }
}

TEST(ConfigKeys, CoversEveryField) {
    // A config built only through the keys can reach any TrainConfig: format -> parse is
    // the identity on random configs.
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const TrainConfig c = random_config(rng);
        EXPECT_TRUE(from_text(format_config(c)) == c) << format_config(c);
    }
}

TEST(ConfigText, CommentsBlankLinesAndWhitespace) {
    const auto kv = parse("# comment\n\n  lr_init = 0.5 \r\n\tepochs=3\n   # indented comment\n");
    ASSERT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"lr_init", "0.5"}));
    EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"epochs", "3"}));
}

TEST(ConfigText, RejectsUnknownDuplicateAndMalformed) {
    EXPECT_EQ(error_key([] { parse("learning_rate=1\n"); }), "learning_rate");
    EXPECT_EQ(error_key([] { parse("tau=1\ntau=2\n"); }), "tau");
    EXPECT_EQ(error_key([] { parse("just words\n"); }), "");
    EXPECT_THROW(parse("just words\n"), FormatError);
}

TEST(ConfigText, RejectsBadValuesNamingTheKey) {
    TrainConfig c;
    EXPECT_EQ(error_key([&] { apply_config_value(c, "epochs", "-1"); }), "epochs");
    EXPECT_EQ(error_key([&] { apply_config_value(c, "epochs", "3.5"); }), "epochs");
    EXPECT_EQ(error_key([&] { apply_config_value(c, "lr_init", "fast"); }), "lr_init");
    EXPECT_EQ(error_key([&] { apply_config_value(c, "lr_init", "1.0x"); }), "lr_init");
    EXPECT_EQ(error_key([&] { apply_config_value(c, "tie_weights", "yes"); }), "tie_weights");
    EXPECT_EQ(error_key([&] { apply_config_value(c, "loss_mode", "fancy"); }), "loss_mode");
    EXPECT_EQ(error_key([&] { apply_config_value(c, "seed", ""); }), "seed");
    EXPECT_EQ(error_key([&] { apply_config_value(c, "bogus", "1"); }), "bogus");
    EXPECT_TRUE(c == TrainConfig{});
}

TEST(ConfigText, SeedAlsoSeedsTheModel) {
    TrainConfig c;
    apply_config_value(c, "seed", "18446744073709551615");
    EXPECT_EQ(c.seed, 18446744073709551615ull);
    EXPECT_EQ(c.model.seed, c.seed);
}

TEST(ConfigFile, AppliesAndRejectsMissingFile) {
    TempDir dir;
    TrainConfig c;
    apply_config_file(c, dir.write("a.cfg", "batch_size=7\nloss_mode=alpha_form\n"));
    EXPECT_EQ(c.batch_size, 7u);
    EXPECT_EQ(c.loss.mode, LossMode::alpha_form);
    EXPECT_THROW(apply_config_file(c, dir / "missing.cfg"), ConfigError);
}

TEST(ConfigEnv, NamesAndOverrides) {
    EXPECT_EQ(env_var_name("lr_init"), "TIEDLM_LR_INIT");
    EXPECT_EQ(env_var_name("stop_gradient_through_target"),
              "TIEDLM_STOP_GRADIENT_THROUGH_TARGET");
    const std::map<std::string, std::string> env = {
        {"TIEDLM_EPOCHS", "4"}, {"TIEDLM_TAU", "2.5"}, {"UNRELATED", "x"}};
    auto lookup = [&](const std::string &name) -> std::optional<std::string> {
        const auto it = env.find(name);
        return it == env.end() ? std::nullopt : std::optional(it->second);
    };
    TrainConfig c;
    apply_env_overrides(c, lookup);
    EXPECT_EQ(c.epochs, 4u);
    EXPECT_EQ(c.loss.tau, 2.5);
    TrainConfig expect;
    expect.epochs = 4;
    expect.loss.tau = 2.5;
    EXPECT_TRUE(c == expect);

    TrainConfig bad;
    EXPECT_EQ(error_key([&] {
                  apply_env_overrides(bad, [](const std::string &n) -> std::optional<std::string> {
                      return n == "TIEDLM_BATCH_SIZE" ? std::optional<std::string>("many")
                                                      : std::nullopt;
                  });
              }),
              "batch_size");
}

TEST(ConfigEnv, EnvironmentOverridesFile) {
    TempDir dir;
    TrainConfig c;
    apply_config_file(c, dir.write("a.cfg", "epochs=9\nclip_norm=3\n"));
    apply_env_overrides(c, [](const std::string &n) -> std::optional<std::string> {
        return n == "TIEDLM_EPOCHS" ? std::optional<std::string>("2") : std::nullopt;
    });
    EXPECT_EQ(c.epochs, 2u);
    EXPECT_EQ(c.clip_norm, 3.0);
}

TEST(Profiles, KnownPresets) {
    const auto names = profile_names();
    EXPECT_EQ(names, (std::vector<std::string>{"ptb-small", "ptb-medium", "ptb-large",
                                               "wt2-small", "wt2-medium", "desk"}));
    for (const auto &n : names) {
        const TrainConfig c = profile(n);
        EXPECT_EQ(c.model.embed_dim, c.model.hidden_dim) << n;
        EXPECT_EQ(c.lr_init, 1.0) << n;
        EXPECT_GT(c.epochs, 0u) << n;
    }
    const TrainConfig large = profile("ptb-large");
    EXPECT_EQ(large.model.hidden_dim, 1500u);
    EXPECT_EQ(large.decay_start_epoch, 1u);
    EXPECT_EQ(large.decay_rate, 0.97);
    EXPECT_EQ(large.clip_norm, 6.0);
    const TrainConfig small = profile("ptb-small");
    EXPECT_EQ(small.decay_start_epoch, 5u);
    EXPECT_EQ(small.decay_rate, 0.9);
    EXPECT_EQ(small.clip_norm, 5.0);
    EXPECT_EQ(error_key([] { profile("ptb-huge"); }), "profile");
}
