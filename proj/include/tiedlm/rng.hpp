#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tiedlm {

/// Child seed for a named stream ("init", "dropout", "data-offset", ...). Streams with
/// different names are independent, so adding a new consumer never perturbs the others.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index = 0);

/// mt19937_64 with distribution code of our own, so draws are identical across
/// standard-library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    double normal();

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace tiedlm
