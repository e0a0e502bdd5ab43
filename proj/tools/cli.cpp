#include "cli.hpp"

#include <tiedlm/checkpoint.hpp>
#include <tiedlm/config.hpp>
#include <tiedlm/corpus.hpp>
#include <tiedlm/experiment.hpp>
#include <tiedlm/subspace.hpp>
#include <tiedlm/trainer.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tiedlm::cli {

namespace fs = std::filesystem;

namespace {

std::string dashed(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

// Options shared by commands that build a TrainConfig.
struct ConfigOptions {
    std::string config_file;
    std::string profile_name;
    std::map<std::string, std::string> overrides;
    std::map<std::string, CLI::Option *> flags;

    void attach(CLI::App &cmd) {
        cmd.add_option("--config", config_file, "flat key=value config file")
            ->check(CLI::ExistingFile);
        std::string profiles;
        for (const auto &p : profile_names()) {
            profiles += (profiles.empty() ? "" : ", ") + p;
        }
        cmd.add_option("--profile", profile_name, "hyperparameter preset: " + profiles);
        for (const auto &k : config_keys()) {
            flags[k.name] = cmd.add_option("--" + dashed(k.name), overrides[k.name],
                                           k.help + " (env " + env_var_name(k.name) + ")");
        }
    }

    // defaults/profile < file < environment < variant < flags
    TrainConfig resolve(const std::string &variant) const {
        TrainConfig c = profile_name.empty() ? TrainConfig{} : profile(profile_name);
        if (!config_file.empty()) {
            apply_config_file(c, config_file);
        }
        apply_env_overrides(c);
        if (!variant.empty()) {
            apply_variant(c, parse_variant(variant));
        }
        for (const auto &k : config_keys()) {
            if (flags.at(k.name)->count() > 0) {
                k.set(c, overrides.at(k.name));
            }
        }
        c.model.seed = c.seed;
        return c;
    }
};

void write_text(const fs::path &path, const std::string &text) {
    const fs::path tmp = fs::path(path).concat(".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FormatError("cannot write " + path.string());
        }
        out << text;
        if (!out) {
            throw FormatError("failed writing " + path.string());
        }
    }
    fs::rename(tmp, path);
}

fs::path default_vocab_path(const std::string &vocab, const std::string &checkpoint) {
    return vocab.empty() ? fs::path(checkpoint).parent_path() / "vocab.txt" : fs::path(vocab);
}

std::vector<double> parse_values(const std::string &csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(cell, &pos));
            if (pos != cell.size()) {
                throw std::invalid_argument(cell);
            }
        } catch (const std::exception &) {
            throw ConfigError("values", "--values: bad number '" + cell + "'");
        }
    }
    return out;
}

std::string fmt(double v) { return format_exact(v); }

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string train_path, valid_path, out_dir, variant;
    bool timing_in_csv = false;
    ConfigOptions cfg;
};

std::string log_csv(const TrainLog &log, bool timing) {
    std::ostringstream os;
    os << "epoch,lr,train_ppl,valid_ppl,subspace_distance,seconds\n";
    for (const auto &e : log.epochs) {
        os << e.epoch << ',' << fmt(e.lr) << ',' << fmt(e.train_ppl) << ','
           << (std::isfinite(e.valid_ppl) ? fmt(e.valid_ppl) : "nan") << ','
           << (e.subspace_distance ? fmt(*e.subspace_distance) : "") << ','
           << (timing ? fmt(e.seconds) : "") << '\n';
        os << "# epoch=" << e.epoch << " seconds=" << e.seconds << '\n';
    }
    return os.str();
}

int cmd_train(const TrainArgs &a, std::ostream &out, std::ostream &err) {
    TrainConfig cfg = a.cfg.resolve(a.variant);

    const LoadedCorpus train_corpus = load_corpus(a.train_path, nullptr, Split::train);
    const LoadedCorpus valid_corpus = load_corpus(a.valid_path, &train_corpus.vocab, Split::valid);
    const std::size_t V = train_corpus.vocab.size();
    if (cfg.model.vocab_size != 0 && cfg.model.vocab_size != V) {
        throw ConfigError("vocab_size", "config vocab_size=" +
                                            std::to_string(cfg.model.vocab_size) +
                                            " but the training corpus has " + std::to_string(V));
    }
    cfg.model.vocab_size = V;
    cfg.validate();
    if (cfg.loss.mode == LossMode::alpha_form && cfg.loss.effective_alpha() == 0.0) {
        err << "warning: alpha_form with alpha = 0 trains the baseline objective\n";
    }

    out << "# training " << (a.variant.empty() ? "custom" : a.variant) << " model, |V|=" << V
        << ", parameters=" << parameter_count(cfg.model) << '\n';
    const TrainResult result =
        train(train_corpus.stream, &valid_corpus.stream, cfg, [&out](const EpochRecord &e) {
            out << "epoch " << e.epoch << " lr " << e.lr << " train_ppl " << e.train_ppl
                << " valid_ppl " << e.valid_ppl;
            if (e.subspace_distance) {
                out << " subspace " << *e.subspace_distance;
            }
            out << " # " << e.seconds << "s" << std::endl;
        });

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    write_text(dir / "config.txt", format_config(cfg));
    train_corpus.vocab.save(dir / "vocab.txt");
    save_checkpoint(dir / "best.bin", result.best_params);
    write_text(dir / "train_log.csv", log_csv(result.log, a.timing_in_csv));
    save_checkpoint(dir / "checkpoint.bin", result.params);
    out << "wrote " << (dir / "checkpoint.bin").string() << " (best epoch " << result.best_epoch
        << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint, vocab, train_path, valid_path, test_path;
    std::size_t batch_size = 1;
    std::size_t steps = 35;
};

int cmd_eval(const EvalArgs &a, std::ostream &out, std::ostream &) {
    const ModelParams params = load_checkpoint(a.checkpoint);
    const Vocabulary vocab = Vocabulary::load(default_vocab_path(a.vocab, a.checkpoint));
    if (vocab.size() != params.config.vocab_size) {
        throw FormatError("vocabulary has " + std::to_string(vocab.size()) +
                          " tokens but the checkpoint expects " +
                          std::to_string(params.config.vocab_size));
    }
    const std::pair<const std::string *, Split> splits[] = {
        {&a.train_path, Split::train}, {&a.valid_path, Split::valid}, {&a.test_path, Split::test}};
    bool any = false;
    for (const auto &[path, split] : splits) {
        if (path->empty()) {
            continue;
        }
        any = true;
        const LoadedCorpus c = load_corpus(*path, &vocab, split);
        const double ppl = evaluate_perplexity(params, c.stream, a.batch_size, a.steps);
        out << to_string(split) << ',' << fmt(ppl) << '\n';
    }
    if (!any) {
        throw ConfigError("corpus", "eval: give at least one of --train, --valid, --test");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string checkpoint, vocab, prompt;
    std::size_t k = 10;
};

int cmd_predict(const PredictArgs &a, std::ostream &out, std::ostream &err) {
    const ModelParams params = load_checkpoint(a.checkpoint);
    const Vocabulary vocab = Vocabulary::load(default_vocab_path(a.vocab, a.checkpoint));
    if (vocab.size() != params.config.vocab_size) {
        throw FormatError("vocabulary size does not match the checkpoint");
    }
    std::vector<TokenId> context = encode_text(a.prompt, vocab);
    if (context.empty()) {
        context.push_back(vocab.eos_id());
    }
    std::size_t k = a.k;
    if (k > vocab.size()) {
        err << "warning: k=" << k << " exceeds |V|; clamped to " << vocab.size() << '\n';
        k = vocab.size();
    }
    const std::vector<double> probs = predict_next(params, context);
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&probs](std::size_t x, std::size_t y) { return probs[x] > probs[y]; });
    for (std::size_t i = 0; i < k; ++i) {
        out << vocab.token(static_cast<TokenId>(order[i])) << ' ' << fmt(probs[order[i]]) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// subspace
// ---------------------------------------------------------------------------

int cmd_subspace(const std::string &checkpoint, std::ostream &out) {
    const ModelParams params = load_checkpoint(checkpoint);
    const SubspaceReport rep = model_subspace_distance(params);
    out << fmt(rep.distance) << '\n';
    if (rep.tied) {
        out << "tied\n";
        return 0;
    }
    out << "# columns=" << rep.num_columns << " distance_sq=" << fmt(rep.distance_sq)
        << " distance_sq_from_cosines=" << fmt(rep.distance_sq_from_cosines) << '\n';
    out << "principal_cosines";
    for (double c : rep.principal_cosines) {
        out << ' ' << fmt(c);
    }
    out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string variable, values, corpus, out_dir;
    double tau = 10.0;
    double beta = 1.0;
    std::size_t runs = 0, epochs = 0, slice_length = 0, units = 0, batch_size = 0;
    std::uint64_t seed = 0;
    bool paper_scale = false;
};

int cmd_sweep(const SweepArgs &a, std::ostream &out, std::ostream &) {
    const SweepVariable var = parse_sweep_variable(a.variable);
    const LoadedCorpus corpus = load_corpus(a.corpus, nullptr, Split::train);
    const std::size_t V = corpus.vocab.size();
    SweepSpec spec = a.paper_scale ? paper_scale_sweep(var, V) : desk_scale_sweep(var, V);
    if (!a.values.empty()) {
        spec.values = parse_values(a.values);
    }
    spec.fixed_tau = a.tau;
    spec.fixed_beta = a.beta;
    spec.seed = a.seed;
    if (a.runs > 0) {
        spec.runs = a.runs;
    }
    if (a.epochs > 0) {
        spec.train.epochs = a.epochs;
    }
    if (a.slice_length > 0) {
        spec.slice_length = a.slice_length;
    }
    if (a.units > 0) {
        spec.train.model.embed_dim = spec.train.model.hidden_dim = a.units;
    }
    if (a.batch_size > 0) {
        spec.train.batch_size = a.batch_size;
    }
    spec.validate();

    fs::create_directories(a.out_dir);
    const fs::path runs_path = fs::path(a.out_dir) / "runs.csv";
    SweepHooks hooks;
    if (fs::exists(runs_path)) {
        hooks.completed = read_runs_csv(runs_path, var);
        out << "# resuming: " << hooks.completed.size() << " completed runs\n";
    }
    hooks.on_run = [&](const RunRecord &r) {
        append_run_csv(runs_path, var, r);
        out << to_string(var) << '=' << r.value << " seed=" << r.seed
            << " distance=" << r.distance << std::endl;
    };
    const SweepResult res = run_sweep(corpus.stream, spec, hooks);
    write_runs_csv(runs_path, res);
    write_summary_csv(fs::path(a.out_dir) / "summary.csv", res);
    for (const auto &p : res.points) {
        out << to_string(var) << '=' << p.value << " mean=" << p.mean << " std=" << p.std
            << " n=" << p.n << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

struct GridArgs {
    std::string train_path, valid_path, test_path, out_dir;
    ConfigOptions cfg;
};

int cmd_grid(const GridArgs &a, std::ostream &out, std::ostream &) {
    TrainConfig cfg = a.cfg.resolve("");
    const LoadedCorpus tr = load_corpus(a.train_path, nullptr, Split::train);
    const LoadedCorpus va = load_corpus(a.valid_path, &tr.vocab, Split::valid);
    const LoadedCorpus te = load_corpus(a.test_path, &tr.vocab, Split::test);
    cfg.model.vocab_size = tr.vocab.size();
    const auto rows = run_variant_grid(tr.stream, va.stream, te.stream, cfg);
    fs::create_directories(a.out_dir);
    write_grid_csv(fs::path(a.out_dir) / "grid.csv", rows);
    for (const auto &r : rows) {
        out << to_string(r.variant) << " parameters=" << r.parameters << " valid=" << r.valid_ppl
            << " test=" << r.test_ppl << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// App
// ---------------------------------------------------------------------------

struct AllArgs {
    TrainArgs train;
    EvalArgs eval;
    PredictArgs predict;
    std::string subspace_checkpoint;
    SweepArgs sweep;
    GridArgs grid;
};

std::unique_ptr<CLI::App> build_app(AllArgs &a) {
    auto app = std::make_unique<CLI::App>(
        "Recurrent language models with an embedding-derived augmented loss and tied "
        "input/output embeddings",
        "tiedlm");
    app->require_subcommand(1);

    auto *train = app->add_subcommand("train", "train a model and write checkpoint, log, config");
    train->add_option("--train", a.train.train_path, "training corpus")->required();
    train->add_option("--valid", a.train.valid_path, "validation corpus")->required();
    train->add_option("--out", a.train.out_dir, "output directory")->required();
    train->add_option("--variant", a.train.variant, "baseline | al | re | real")
        ->check(CLI::IsMember({"baseline", "al", "re", "real"}));
    train->add_flag("--timing-in-csv", a.train.timing_in_csv,
                    "fill the seconds column of train_log.csv (breaks byte reproducibility)");
    a.train.cfg.attach(*train);

    auto *eval = app->add_subcommand("eval", "print split,perplexity for the given corpora");
    eval->add_option("--checkpoint", a.eval.checkpoint, "checkpoint file")->required();
    eval->add_option("--vocab", a.eval.vocab, "vocabulary file (default: next to checkpoint)");
    eval->add_option("--train", a.eval.train_path, "training corpus to evaluate");
    eval->add_option("--valid", a.eval.valid_path, "validation corpus to evaluate");
    eval->add_option("--test", a.eval.test_path, "test corpus to evaluate");
    eval->add_option("--eval-batch-size", a.eval.batch_size, "evaluation batch size")
        ->check(CLI::PositiveNumber);
    eval->add_option("--bptt-steps", a.eval.steps, "evaluation window length")
        ->check(CLI::PositiveNumber);

    auto *predict = app->add_subcommand("predict", "top-k next-word predictions for a prompt");
    predict->add_option("--checkpoint", a.predict.checkpoint, "checkpoint file")->required();
    predict->add_option("--vocab", a.predict.vocab, "vocabulary file (default: next to checkpoint)");
    predict->add_option("--prompt", a.predict.prompt, "context words")->required();
    predict->add_option("--k", a.predict.k, "number of predictions")->check(CLI::PositiveNumber);

    auto *subspace =
        app->add_subcommand("subspace", "print the L^T / W subspace distance of a checkpoint");
    subspace->add_option("--checkpoint", a.subspace_checkpoint, "checkpoint file")->required();

    auto *sweep = app->add_subcommand("sweep", "beta or tau sweep of the subspace distance");
    sweep->add_option("--sweep", a.sweep.variable, "beta | tau")
        ->required()
        ->check(CLI::IsMember({"beta", "tau"}));
    sweep->add_option("--values", a.sweep.values, "comma-separated increasing values");
    sweep->add_option("--corpus", a.sweep.corpus, "corpus to slice")->required();
    sweep->add_option("--out", a.sweep.out_dir, "output directory")->required();
    sweep->add_option("--tau", a.sweep.tau, "temperature for beta sweeps");
    sweep->add_option("--beta", a.sweep.beta, "augmented proportion for tau sweeps");
    sweep->add_option("--runs", a.sweep.runs, "runs per value");
    sweep->add_option("--epochs", a.sweep.epochs, "training epochs per run");
    sweep->add_option("--slice-length", a.sweep.slice_length, "contiguous slice length");
    sweep->add_option("--units", a.sweep.units, "embedding and hidden units");
    sweep->add_option("--batch-size", a.sweep.batch_size, "training batch size");
    sweep->add_option("--seed", a.sweep.seed, "master seed (slice offset and run seeds)");
    sweep->add_flag("--paper-scale", a.sweep.paper_scale,
                    "20000-token slice, 300 units, 10 runs");

    auto *grid = app->add_subcommand("grid", "train baseline/al/re/real and write grid.csv");
    grid->add_option("--train", a.grid.train_path, "training corpus")->required();
    grid->add_option("--valid", a.grid.valid_path, "validation corpus")->required();
    grid->add_option("--test", a.grid.test_path, "test corpus")->required();
    grid->add_option("--out", a.grid.out_dir, "output directory")->required();
    a.grid.cfg.attach(*grid);
    return app;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    AllArgs a;
    auto app = build_app(a);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app->parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app->help();
        return 0;
    } catch (const CLI::CallForAllHelp &) {
        out << app->help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError &e) {
        // Subcommand help is reported through the parse error path as well.
        if (e.get_exit_code() == 0) {
            for (auto *sub : app->get_subcommands()) {
                out << sub->help();
            }
            return 0;
        }
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        const auto *sub = app->get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "train") {
            return cmd_train(a.train, out, err);
        }
        if (name == "eval") {
            return cmd_eval(a.eval, out, err);
        }
        if (name == "predict") {
            return cmd_predict(a.predict, out, err);
        }
        if (name == "subspace") {
            return cmd_subspace(a.subspace_checkpoint, out);
        }
        if (name == "sweep") {
            return cmd_sweep(a.sweep, out, err);
        }
        if (name == "grid") {
            return cmd_grid(a.grid, out, err);
        }
    } catch (const ConfigError &e) {
        err << "config error";
        if (!e.key().empty()) {
            err << " [" << e.key() << "]";
        }
        err << ": " << e.what() << '\n';
        return 3;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

std::vector<FlagDoc> flag_docs() {
    AllArgs a;
    auto app = build_app(a);
    std::vector<FlagDoc> docs;
    for (const auto *sub : app->get_subcommands({})) {
        for (const auto *opt : sub->get_options()) {
            if (opt->get_name() == "--help" || opt->get_name().empty()) {
                continue;
            }
            for (const auto &l : opt->get_lnames()) {
                docs.push_back({sub->get_name(), "--" + l, opt->get_description()});
            }
        }
    }
    return docs;
}

} // namespace tiedlm::cli
