#pragma once

#include <tiedlm/errors.hpp>
#include <tiedlm/trainer.hpp>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tiedlm {

/// A bad key or value in a config file, environment variable, or flag.
class ConfigError : public FormatError {
  public:
    ConfigError(std::string key, const std::string &what)
        : FormatError(what), key_(std::move(key)) {}
    const std::string &key() const noexcept { return key_; }

  private:
    std::string key_;
};

struct ConfigKey {
    std::string name;
    std::string help;
    std::function<void(TrainConfig &, const std::string &)> set;
    std::function<std::string(const TrainConfig &)> get;
};

/// Every flat key, one per TrainConfig / LossConfig / ModelConfig field.
const std::vector<ConfigKey> &config_keys();
const ConfigKey *find_config_key(std::string_view name);

void apply_config_value(TrainConfig &config, std::string_view key, const std::string &value);

/// Parses `key=value` lines; blank lines and lines starting with '#' are ignored.
/// Unknown or repeated keys are rejected.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::istream &in);
void apply_config_file(TrainConfig &config, const std::filesystem::path &path);

/// "lr_init" -> "TIEDLM_LR_INIT"
std::string env_var_name(std::string_view key);
using EnvLookup = std::function<std::optional<std::string>(const std::string &)>;
/// Applies every TIEDLM_<KEY> variable found through `lookup` (defaults to getenv).
void apply_env_overrides(TrainConfig &config, const EnvLookup &lookup = {});

/// All keys as `key=value` lines, in config_keys() order. Parses back to the same config.
std::string format_config(const TrainConfig &config);

/// Named hyperparameter presets (ptb-small, ..., desk).
std::vector<std::string> profile_names();
TrainConfig profile(std::string_view name);

} // namespace tiedlm
