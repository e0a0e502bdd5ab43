#include <tiedlm/config.hpp>
#include <tiedlm/experiment.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace tiedlm {

namespace {

std::size_t to_size(const std::string &key, const std::string &v) {
    std::size_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw ConfigError(key, "config key '" + key + "': expected a nonnegative integer, got '" +
                                   v + "'");
    }
    return out;
}

std::uint64_t to_u64(const std::string &key, const std::string &v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw ConfigError(key, "config key '" + key + "': expected an unsigned integer, got '" +
                                   v + "'");
    }
    return out;
}

double to_double(const std::string &key, const std::string &v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos == v.size()) {
            return d;
        }
    } catch (...) {
    }
    throw ConfigError(key, "config key '" + key + "': expected a number, got '" + v + "'");
}

bool to_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw ConfigError(key, "config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

template <typename Field>
ConfigKey size_key(std::string name, std::string help, Field field) {
    return {name, std::move(help),
            [name, field](TrainConfig &c, const std::string &v) { field(c) = to_size(name, v); },
            [field](const TrainConfig &c) {
                return std::to_string(field(const_cast<TrainConfig &>(c)));
            }};
}

template <typename Field>
ConfigKey double_key(std::string name, std::string help, Field field) {
    return {name, std::move(help),
            [name, field](TrainConfig &c, const std::string &v) { field(c) = to_double(name, v); },
            [field](const TrainConfig &c) {
                return format_exact(field(const_cast<TrainConfig &>(c)));
            }};
}

template <typename Field>
ConfigKey bool_key(std::string name, std::string help, Field field) {
    return {name, std::move(help),
            [name, field](TrainConfig &c, const std::string &v) { field(c) = to_bool(name, v); },
            [field](const TrainConfig &c) {
                return from_bool(field(const_cast<TrainConfig &>(c)));
            }};
}

std::vector<ConfigKey> build_keys() {
    std::vector<ConfigKey> k;
    // model
    k.push_back(size_key("vocab_size", "vocabulary size; 0 = take it from the training corpus",
                         [](TrainConfig &c) -> std::size_t & { return c.model.vocab_size; }));
    k.push_back(size_key("embed_dim", "word embedding dimension",
                         [](TrainConfig &c) -> std::size_t & { return c.model.embed_dim; }));
    k.push_back(size_key("hidden_dim", "LSTM hidden units per layer",
                         [](TrainConfig &c) -> std::size_t & { return c.model.hidden_dim; }));
    k.push_back(size_key("num_layers", "LSTM layers (must be 2)",
                         [](TrainConfig &c) -> std::size_t & { return c.model.num_layers; }));
    k.push_back(bool_key("tie_weights", "reuse the embedding as output projection",
                         [](TrainConfig &c) -> bool & { return c.model.tie_weights; }));
    k.push_back(double_key("dropout_p", "variational dropout probability",
                           [](TrainConfig &c) -> double & { return c.model.dropout_p; }));
    k.push_back(bool_key("unit_norm_embeddings", "renormalize word vectors after every step",
                         [](TrainConfig &c) -> bool & { return c.model.unit_norm_embeddings; }));
    // loss
    k.push_back(double_key("tau", "softmax temperature of the augmented loss",
                           [](TrainConfig &c) -> double & { return c.loss.tau; }));
    k.push_back(double_key("alpha", "augmented loss weight (alpha_form)",
                           [](TrainConfig &c) -> double & { return c.loss.alpha; }));
    k.push_back(double_key("gamma", "if > 0, alpha = gamma * tau",
                           [](TrainConfig &c) -> double & { return c.loss.gamma; }));
    k.push_back(double_key("beta", "augmented loss proportion (beta_mixture)",
                           [](TrainConfig &c) -> double & { return c.loss.beta; }));
    k.push_back({"loss_mode", "baseline | alpha_form | beta_mixture",
                 [](TrainConfig &c, const std::string &v) {
                     try {
                         c.loss.mode = parse_loss_mode(v);
                     } catch (const ContractViolation &e) {
                         throw ConfigError("loss_mode", e.what());
                     }
                 },
                 [](const TrainConfig &c) { return std::string(to_string(c.loss.mode)); }});
    k.push_back(bool_key("stop_gradient_through_target",
                         "treat the embedding-derived target as a constant",
                         [](TrainConfig &c) -> bool & {
                             return c.loss.stop_gradient_through_target;
                         }));
    // training
    k.push_back(double_key("lr_init", "initial SGD learning rate",
                           [](TrainConfig &c) -> double & { return c.lr_init; }));
    k.push_back(size_key("decay_start_epoch", "last epoch trained at lr_init",
                         [](TrainConfig &c) -> std::size_t & { return c.decay_start_epoch; }));
    k.push_back(double_key("decay_rate", "per-epoch learning-rate multiplier after the start",
                           [](TrainConfig &c) -> double & { return c.decay_rate; }));
    k.push_back(double_key("clip_norm", "global gradient-norm clipping threshold",
                           [](TrainConfig &c) -> double & { return c.clip_norm; }));
    k.push_back(size_key("epochs", "number of passes over the training data",
                         [](TrainConfig &c) -> std::size_t & { return c.epochs; }));
    k.push_back(size_key("bptt_steps", "unroll length",
                         [](TrainConfig &c) -> std::size_t & { return c.bptt_steps; }));
    k.push_back(size_key("batch_size", "training batch size",
                         [](TrainConfig &c) -> std::size_t & { return c.batch_size; }));
    k.push_back(size_key("eval_batch_size", "evaluation batch size",
                         [](TrainConfig &c) -> std::size_t & { return c.eval_batch_size; }));
    k.push_back(bool_key("track_subspace", "log the L^T/W subspace distance each epoch",
                         [](TrainConfig &c) -> bool & { return c.track_subspace; }));
    k.push_back({"seed", "master random seed",
                 [](TrainConfig &c, const std::string &v) {
                     c.seed = to_u64("seed", v);
                     c.model.seed = c.seed;
                 },
                 [](const TrainConfig &c) { return std::to_string(c.seed); }});
    return k;
}

} // namespace

const std::vector<ConfigKey> &config_keys() {
    static const std::vector<ConfigKey> keys = build_keys();
    return keys;
}

const ConfigKey *find_config_key(std::string_view name) {
    for (const auto &k : config_keys()) {
        if (k.name == name) {
            return &k;
        }
    }
    return nullptr;
}

void apply_config_value(TrainConfig &config, std::string_view key, const std::string &value) {
    const ConfigKey *k = find_config_key(key);
    if (k == nullptr) {
        throw ConfigError(std::string(key), "unknown config key '" + std::string(key) + "'");
    }
    k->set(config, value);
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::istream &in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", "config line " + std::to_string(lineno) +
                                      ": expected key=value, got '" + line + "'");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (find_config_key(key) == nullptr) {
            throw ConfigError(key, "unknown config key '" + key + "' (line " +
                                       std::to_string(lineno) + ")");
        }
        if (!seen.insert(key).second) {
            throw ConfigError(key, "config key '" + key + "' given twice");
        }
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

void apply_config_file(TrainConfig &config, const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot open config file " + path.string());
    }
    for (const auto &[k, v] : parse_config_text(in)) {
        apply_config_value(config, k, v);
    }
}

std::string env_var_name(std::string_view key) {
    std::string out = "TIEDLM_";
    for (char c : key) {
        out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return out;
}

void apply_env_overrides(TrainConfig &config, const EnvLookup &lookup) {
    for (const auto &k : config_keys()) {
        const std::string var = env_var_name(k.name);
        std::optional<std::string> value;
        if (lookup) {
            value = lookup(var);
        } else if (const char *e = std::getenv(var.c_str())) {
            value = e;
        }
        if (value) {
            k.set(config, *value);
        }
    }
}

std::string format_config(const TrainConfig &config) {
    std::ostringstream os;
    for (const auto &k : config_keys()) {
        os << k.name << '=' << k.get(config) << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

namespace {

struct ProfileSpec {
    std::string_view name;
    std::size_t units;
    double dropout;
    std::size_t decay_start;
    double decay_rate;
    double clip;
    double gamma;
    std::size_t epochs;
};

// Desk profile is tuned for the bundled synthetic corpus.
constexpr ProfileSpec kProfiles[] = {
    {"ptb-small", 200, 0.7, 5, 0.9, 5.0, 0.65, 40},
    {"ptb-medium", 650, 0.5, 10, 0.9, 5.0, 0.65, 40},
    {"ptb-large", 1500, 0.35, 1, 0.97, 6.0, 0.65, 55},
    {"wt2-small", 200, 0.8, 5, 0.9, 5.0, 1.25, 40},
    {"wt2-medium", 650, 0.6, 10, 0.9, 5.0, 1.25, 40},
    {"desk", 32, 0.3, 6, 0.8, 5.0, 0.65, 10},
};

} // namespace

std::vector<std::string> profile_names() {
    std::vector<std::string> out;
    for (const auto &p : kProfiles) {
        out.emplace_back(p.name);
    }
    return out;
}

TrainConfig profile(std::string_view name) {
    for (const auto &p : kProfiles) {
        if (p.name != name) {
            continue;
        }
        TrainConfig c;
        c.model.embed_dim = p.units;
        c.model.hidden_dim = p.units;
        c.model.dropout_p = p.dropout;
        c.lr_init = 1.0;
        c.decay_start_epoch = p.decay_start;
        c.decay_rate = p.decay_rate;
        c.clip_norm = p.clip;
        c.epochs = p.epochs;
        c.bptt_steps = 35;
        c.batch_size = 20;
        c.loss.tau = 20.0;
        c.loss.gamma = p.gamma;
        return c;
    }
    throw ConfigError("profile", "unknown profile '" + std::string(name) + "'");
}

} // namespace tiedlm
