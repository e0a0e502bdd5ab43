#include <tiedlm/experiment.hpp>
#include <tiedlm/rng.hpp>
#include <tiedlm/subspace.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace tiedlm {

std::string_view to_string(SweepVariable v) { return v == SweepVariable::beta ? "beta" : "tau"; }

SweepVariable parse_sweep_variable(std::string_view s) {
    if (s == "beta") {
        return SweepVariable::beta;
    }
    if (s == "tau") {
        return SweepVariable::tau;
    }
    throw ContractViolation("unknown sweep variable '" + std::string(s) + "' (beta or tau)");
}

std::string format_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void SweepSpec::validate() const {
    require(!values.empty(), "SweepSpec: no sweep values");
    require(runs >= 1, "SweepSpec: runs must be >= 1");
    for (std::size_t i = 1; i < values.size(); ++i) {
        require(values[i] > values[i - 1], "SweepSpec: values must be strictly increasing");
    }
    for (double v : values) {
        if (variable == SweepVariable::beta) {
            require(v >= 0.0 && v <= 1.0, "SweepSpec: beta values must be in [0, 1]");
        } else {
            require(v > 0.0, "SweepSpec: tau values must be positive");
        }
    }
    require(slice_length > train.batch_size, "SweepSpec: slice too short for the batch size");
}

namespace {

TrainConfig sweep_train_config(std::size_t vocab_size, std::size_t units) {
    TrainConfig t;
    t.model.vocab_size = vocab_size;
    t.model.embed_dim = units;
    t.model.hidden_dim = units;
    t.model.dropout_p = 0.0;
    t.model.unit_norm_embeddings = true;
    t.model.tie_weights = false;
    t.loss.mode = LossMode::beta_mixture;
    t.lr_init = 1.0;
    t.decay_rate = 1.0;
    t.decay_start_epoch = 0;
    t.clip_norm = 5.0;
    t.bptt_steps = 35;
    return t;
}

} // namespace

SweepSpec desk_scale_sweep(SweepVariable variable, std::size_t vocab_size) {
    SweepSpec s;
    s.variable = variable;
    if (variable == SweepVariable::beta) {
        s.values = {0.0, 0.25, 0.5, 0.75, 1.0};
    } else {
        s.values = {2.0, 10.0, 20.0};
    }
    s.runs = 3;
    s.slice_length = 5000;
    s.train = sweep_train_config(vocab_size, 100);
    s.train.epochs = 30;
    s.train.batch_size = 10;
    return s;
}

SweepSpec paper_scale_sweep(SweepVariable variable, std::size_t vocab_size) {
    SweepSpec s = desk_scale_sweep(variable, vocab_size);
    s.runs = 10;
    s.slice_length = 20000;
    s.train = sweep_train_config(vocab_size, 300);
    s.train.epochs = 30;
    s.train.batch_size = 20;
    return s;
}

bool RunRecord::failed() const { return !std::isfinite(distance); }

std::uint64_t sweep_run_seed(const SweepSpec &spec, std::size_t index) {
    return derive_seed(spec.seed, "run", index);
}

SweepResult aggregate_runs(SweepVariable variable, std::vector<RunRecord> runs) {
    std::sort(runs.begin(), runs.end(), [](const RunRecord &a, const RunRecord &b) {
        return a.value != b.value ? a.value < b.value : a.seed < b.seed;
    });
    SweepResult res;
    res.variable = variable;
    for (const auto &r : runs) {
        if (res.points.empty() || res.points.back().value != r.value) {
            res.points.push_back({});
            res.points.back().value = r.value;
        }
        auto &p = res.points.back();
        if (r.failed()) {
            ++p.failed;
        } else {
            p.distances.push_back(r.distance);
        }
    }
    for (auto &p : res.points) {
        p.n = p.distances.size();
        if (p.n == 0) {
            p.mean = p.std = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        double s = 0.0;
        for (double d : p.distances) {
            s += d;
        }
        p.mean = s / static_cast<double>(p.n);
        double v = 0.0;
        for (double d : p.distances) {
            v += (d - p.mean) * (d - p.mean);
        }
        p.std = std::sqrt(v / static_cast<double>(p.n));
    }
    res.runs = std::move(runs);
    return res;
}

double run_sweep_point(const TokenStream &slice, const SweepSpec &spec, double value,
                       std::uint64_t run_seed) {
    TrainConfig cfg = spec.train;
    cfg.seed = run_seed;
    cfg.model.seed = run_seed;
    cfg.model.tie_weights = false;
    cfg.loss.mode = LossMode::beta_mixture;
    if (spec.variable == SweepVariable::beta) {
        cfg.loss.beta = value;
        cfg.loss.tau = spec.fixed_tau;
    } else {
        cfg.loss.beta = spec.fixed_beta;
        cfg.loss.tau = value;
    }
    const TrainResult tr = train(slice, nullptr, cfg);
    return model_subspace_distance(tr.params).distance;
}

SweepResult run_sweep(const TokenStream &corpus, const SweepSpec &spec,
                      const SweepHooks &hooks) {
    spec.validate();
    const std::size_t offset = choose_offset(corpus.size(), spec.slice_length, spec.seed);
    const TokenStream slice = take_contiguous(corpus, offset, spec.slice_length);

    std::set<std::pair<double, std::uint64_t>> done;
    for (const auto &r : hooks.completed) {
        done.emplace(r.value, r.seed);
    }
    struct Job {
        double value;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double v : spec.values) {
        for (std::size_t i = 0; i < spec.runs; ++i) {
            const std::uint64_t s = sweep_run_seed(spec, i);
            if (!done.contains({v, s})) {
                jobs.push_back({v, s});
            }
        }
    }

    std::vector<RunRecord> fresh(jobs.size());
    // One model per worker; the GEMM kernels drop to serial inside a parallel region.
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(jobs.size()); ++j) {
        const Job &job = jobs[static_cast<std::size_t>(j)];
        RunRecord rec{job.value, job.seed, std::numeric_limits<double>::quiet_NaN()};
        try {
            rec.distance = run_sweep_point(slice, spec, job.value, job.seed);
        } catch (const NonFiniteError &) {
            // recorded as failed
        }
        fresh[static_cast<std::size_t>(j)] = rec;
        if (hooks.on_run) {
#pragma omp critical(tiedlm_sweep_sink)
            hooks.on_run(rec);
        }
    }

    std::vector<RunRecord> all;
    const std::set<double> wanted(spec.values.begin(), spec.values.end());
    for (const auto &r : hooks.completed) {
        if (wanted.contains(r.value)) {
            all.push_back(r);
        }
    }
    all.insert(all.end(), fresh.begin(), fresh.end());
    return aggregate_runs(spec.variable, std::move(all));
}

SweepResult run_beta_sweep(const TokenStream &corpus, const SweepSpec &spec,
                           const SweepHooks &hooks) {
    require(spec.variable == SweepVariable::beta, "run_beta_sweep: spec sweeps tau");
    return run_sweep(corpus, spec, hooks);
}

SweepResult run_tau_sweep(const TokenStream &corpus, const SweepSpec &spec,
                          const SweepHooks &hooks) {
    require(spec.variable == SweepVariable::tau, "run_tau_sweep: spec sweeps beta");
    return run_sweep(corpus, spec, hooks);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string &s, const std::filesystem::path &path) {
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size()) {
            return v;
        }
    } catch (...) {
    }
    throw FormatError(path.string() + ": bad number '" + s + "'");
}

std::ofstream open_out(const std::filesystem::path &path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    return out;
}

std::string format_distance(double d) { return std::isfinite(d) ? format_exact(d) : "nan"; }

constexpr std::string_view kRunsHeader = "variable,value,seed,distance";
constexpr std::string_view kSummaryHeader = "variable,value,mean,std,n";

} // namespace

void write_runs_csv(const std::filesystem::path &path, const SweepResult &result) {
    auto out = open_out(path, std::ios::binary | std::ios::trunc);
    out << kRunsHeader << '\n';
    for (const auto &r : result.runs) {
        out << to_string(result.variable) << ',' << format_exact(r.value) << ',' << r.seed << ','
            << format_distance(r.distance) << '\n';
    }
}

void append_run_csv(const std::filesystem::path &path, SweepVariable variable,
                    const RunRecord &run) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    auto out = open_out(path, std::ios::binary | std::ios::app);
    if (fresh) {
        out << kRunsHeader << '\n';
    }
    out << to_string(variable) << ',' << format_exact(run.value) << ',' << run.seed << ','
        << format_distance(run.distance) << '\n';
    out.flush();
}

std::vector<RunRecord> read_runs_csv(const std::filesystem::path &path,
                                     SweepVariable expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kRunsHeader) {
        throw FormatError(path.string() + ": missing runs header");
    }
    std::vector<RunRecord> runs;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 4) {
            throw FormatError(path.string() + ": malformed row '" + line + "'");
        }
        if (parse_sweep_variable(cells[0]) != expected) {
            throw FormatError(path.string() + ": rows belong to a " + cells[0] + " sweep");
        }
        RunRecord r;
        r.value = parse_double(cells[1], path);
        try {
            r.seed = std::stoull(cells[2]);
        } catch (...) {
            throw FormatError(path.string() + ": bad seed '" + cells[2] + "'");
        }
        r.distance = parse_double(cells[3], path);
        runs.push_back(r);
    }
    return runs;
}

void write_summary_csv(const std::filesystem::path &path, const SweepResult &result) {
    auto out = open_out(path, std::ios::binary | std::ios::trunc);
    out << kSummaryHeader << '\n';
    for (const auto &p : result.points) {
        out << to_string(result.variable) << ',' << format_exact(p.value) << ','
            << format_distance(p.mean) << ',' << format_distance(p.std) << ',' << p.n << '\n';
    }
}

std::vector<SweepPoint> read_summary_csv(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kSummaryHeader) {
        throw FormatError(path.string() + ": missing summary header");
    }
    std::vector<SweepPoint> points;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 5) {
            throw FormatError(path.string() + ": malformed row '" + line + "'");
        }
        SweepPoint p;
        p.value = parse_double(cells[1], path);
        p.mean = parse_double(cells[2], path);
        p.std = parse_double(cells[3], path);
        p.n = static_cast<std::size_t>(std::stoull(cells[4]));
        points.push_back(p);
    }
    return points;
}

// ---------------------------------------------------------------------------
// Variant grid
// ---------------------------------------------------------------------------

std::vector<VariantRow> run_variant_grid(const TokenStream &train_stream,
                                         const TokenStream &valid, const TokenStream &test,
                                         const TrainConfig &profile) {
    std::vector<VariantRow> rows;
    for (Variant v : {Variant::baseline, Variant::al, Variant::re, Variant::real}) {
        TrainConfig cfg = profile;
        apply_variant(cfg, v);
        const TrainResult tr = train(train_stream, &valid, cfg);
        VariantRow row;
        row.variant = v;
        row.parameters = tr.best_params.parameter_count();
        row.valid_ppl = tr.log.epochs.empty() ? tr.log.initial_valid_ppl
                                              : evaluate_perplexity(tr.best_params, valid,
                                                                    cfg.eval_batch_size,
                                                                    cfg.bptt_steps);
        row.test_ppl = evaluate_perplexity(tr.best_params, test, cfg.eval_batch_size,
                                           cfg.bptt_steps);
        rows.push_back(row);
    }
    return rows;
}

void write_grid_csv(const std::filesystem::path &path, const std::vector<VariantRow> &rows) {
    auto out = open_out(path, std::ios::binary | std::ios::trunc);
    out << "variant,parameters,valid_ppl,test_ppl\n";
    for (const auto &r : rows) {
        out << to_string(r.variant) << ',' << r.parameters << ',' << format_exact(r.valid_ppl)
            << ',' << format_exact(r.test_ppl) << '\n';
    }
}

} // namespace tiedlm
