#pragma once

#include <tiedlm/corpus.hpp>
#include <tiedlm/trainer.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace tiedlm {

enum class SweepVariable { beta, tau };
std::string_view to_string(SweepVariable v);
SweepVariable parse_sweep_variable(std::string_view s);

/// Subspace-distance sweep: train untied models on a contiguous corpus slice with the
/// beta-mixture loss and measure the L^T / W distance afterwards.
struct SweepSpec {
    SweepVariable variable = SweepVariable::beta;
    std::vector<double> values;
    double fixed_tau = 10.0;  // used by beta sweeps
    double fixed_beta = 1.0;  // used by tau sweeps
    std::size_t runs = 3;
    std::size_t slice_length = 5000;
    /// Training schedule and model shape; loss and tying fields are overwritten per run.
    TrainConfig train;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Reduced setup that runs in minutes: 5000-token slice, 100 units, 3 runs, 30 epochs.
SweepSpec desk_scale_sweep(SweepVariable variable, std::size_t vocab_size);
/// 20000-token slice, 300 units, 10 runs.
SweepSpec paper_scale_sweep(SweepVariable variable, std::size_t vocab_size);

struct RunRecord {
    double value = 0.0;
    std::uint64_t seed = 0;
    double distance = 0.0; // NaN for a failed (diverged) run
    bool failed() const;
};

struct SweepPoint {
    double value = 0.0;
    double mean = 0.0;
    double std = 0.0; // population standard deviation over successful runs
    std::size_t n = 0;
    std::vector<double> distances;
    std::size_t failed = 0;
};

struct SweepResult {
    SweepVariable variable = SweepVariable::beta;
    std::vector<SweepPoint> points; // in ascending value order
    std::vector<RunRecord> runs;    // sorted by (value, seed)
};

/// Seed of run `index`; identical across sweep values.
std::uint64_t sweep_run_seed(const SweepSpec &spec, std::size_t index);

/// Groups runs by value. Order of `runs` does not matter.
SweepResult aggregate_runs(SweepVariable variable, std::vector<RunRecord> runs);

struct SweepHooks {
    /// Runs already present (e.g. from an earlier interrupted invocation) are not redone.
    std::vector<RunRecord> completed;
    /// Called after each finished run, serialized.
    std::function<void(const RunRecord &)> on_run;
};

/// Trains one model of the sweep and returns its distance. Exposed for tests.
double run_sweep_point(const TokenStream &slice, const SweepSpec &spec, double value,
                       std::uint64_t run_seed);

SweepResult run_beta_sweep(const TokenStream &corpus, const SweepSpec &spec,
                           const SweepHooks &hooks = {});
SweepResult run_tau_sweep(const TokenStream &corpus, const SweepSpec &spec,
                          const SweepHooks &hooks = {});
SweepResult run_sweep(const TokenStream &corpus, const SweepSpec &spec,
                      const SweepHooks &hooks = {});

// CSV: runs as `variable,value,seed,distance`; summary as `variable,value,mean,std,n`.
void write_runs_csv(const std::filesystem::path &path, const SweepResult &result);
void append_run_csv(const std::filesystem::path &path, SweepVariable variable,
                    const RunRecord &run);
std::vector<RunRecord> read_runs_csv(const std::filesystem::path &path,
                                     SweepVariable expected);
void write_summary_csv(const std::filesystem::path &path, const SweepResult &result);
std::vector<SweepPoint> read_summary_csv(const std::filesystem::path &path);

struct VariantRow {
    Variant variant = Variant::baseline;
    std::size_t parameters = 0;
    double valid_ppl = 0.0;
    double test_ppl = 0.0;
};

/// Trains the four variants with the same seed and schedule. `profile` supplies
/// everything except (loss mode, tie_weights).
std::vector<VariantRow> run_variant_grid(const TokenStream &train_stream,
                                         const TokenStream &valid, const TokenStream &test,
                                         const TrainConfig &profile);
void write_grid_csv(const std::filesystem::path &path, const std::vector<VariantRow> &rows);

/// "%.17g": round-trips every finite double.
std::string format_exact(double v);

} // namespace tiedlm
