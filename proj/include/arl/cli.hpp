#pragma once

// Command-line front end: train, adversary, dynamics, pareto, gen-data.
//
// Exit codes: 0 success, 2 configuration or usage error (bad flags, bad
// config, missing input files, refusing to overwrite), 3 failure while
// running (malformed data, numeric breakdown).
//
// Every command writes into a temporary sibling of --out and renames it into
// place when all files are complete, so a failed run leaves nothing behind.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "arl/arl.hpp"
#include "arl/config.hpp"
#include "arl/datasets.hpp"
#include "arl/dynamics.hpp"
#include "arl/eval.hpp"
#include "arl/experiment.hpp"
#include "arl/nn.hpp"

#ifndef ARL_VERSION
#define ARL_VERSION "unknown"
#endif

namespace arl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

namespace fs = std::filesystem;

/// Output directory staged in a hidden sibling until commit().
class AtomicDir {
public:
    AtomicDir(fs::path target, bool force) : target_(std::move(target))
    {
        if (target_.empty()) throw ConfigError("--out: required");
        if (fs::exists(target_) && !force) {
            throw ConfigError("--out: '" + target_.string() + "' exists; pass --force to overwrite");
        }
        const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
        fs::create_directories(parent);
        std::random_device rd;
        tmp_ = parent / ("." + target_.filename().string() + ".tmp-" + std::to_string(rd()));
        fs::create_directories(tmp_);
    }
    AtomicDir(const AtomicDir&) = delete;
    AtomicDir& operator=(const AtomicDir&) = delete;
    ~AtomicDir()
    {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(tmp_, ec);
        }
    }

    [[nodiscard]] const fs::path& path() const noexcept { return tmp_; }

    void commit()
    {
        if (fs::exists(target_)) fs::remove_all(target_);
        fs::rename(tmp_, target_);
        committed_ = true;
    }

private:
    fs::path target_;
    fs::path tmp_;
    bool committed_ = false;
};

inline void write_file(const fs::path& p, const std::function<void(std::ostream&)>& body)
{
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    body(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed for '" + p.string() + "'");
}

inline void write_manifest(std::ostream& os, const std::string& command, const ExperimentConfig& cfg)
{
    os << "; arl run manifest\n";
    os << "; version = " << ARL_VERSION << '\n';
    os << "; compiler = " << __VERSION__ << '\n';
    os << "; command = " << command << '\n';
    os << "; this file is itself a valid --config\n";
    write_config(os, cfg);
}

inline std::string number_label(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::vector<double> alphas;
    std::string variant;
    bool force = false;
    int jobs = 1;
};

/// One training run into `dir`: checkpoint.txt, metrics.csv, manifest.txt.
inline void train_one(const ExperimentConfig& cfg, const fs::path& dir)
{
    validate_for_training(cfg);
    const ExperimentData d = load_experiment_data(cfg);
    const ArlConfig a = effective_arl(cfg, d);
    std::ostringstream metrics;
    write_metrics_header(metrics);
    const TrainResult r = train_arl(a, cfg.model, d.train, [&](const EpochMetrics& m) { write_metrics_row(metrics, m); });
    fs::create_directories(dir);
    const auto& p = r.state.players;
    write_file(dir / "checkpoint.txt",
               [&](std::ostream& os) { nn::write_checkpoint(os, {&p.encoder, &p.predictor, &p.discriminator}); });
    write_file(dir / "metrics.csv", [&](std::ostream& os) { os << metrics.str(); });
    write_file(dir / "manifest.txt", [&](std::ostream& os) { write_manifest(os, "train", cfg); });
}

inline int cmd_train(const TrainArgs& args, std::ostream& out)
{
    ExperimentConfig base = read_config(args.config);
    if (!args.variant.empty()) {
        try {
            base.arl.variant = parse_variant(args.variant);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--variant: ") + e.what());
        }
    }
    for (double a : args.alphas) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("--alpha: must be a finite value >= 0");
    }
    if (args.jobs < 1) throw ConfigError("--jobs: must be >= 1");
    const std::string out_dir = args.out.empty() ? base.output_dir : args.out;

    struct Run {
        ExperimentConfig cfg;
        fs::path rel;
    };
    std::vector<Run> runs;
    const std::vector<std::optional<std::uint64_t>> seeds = [&] {
        std::vector<std::optional<std::uint64_t>> s(args.seeds.begin(), args.seeds.end());
        if (s.empty()) s.push_back(std::nullopt);
        return s;
    }();
    const std::vector<std::optional<double>> alphas = [&] {
        std::vector<std::optional<double>> s(args.alphas.begin(), args.alphas.end());
        if (s.empty()) s.push_back(std::nullopt);
        return s;
    }();
    const bool sweep = seeds.size() * alphas.size() > 1;
    for (const auto& s : seeds) {
        for (const auto& al : alphas) {
            Run r{base, {}};
            if (s) {
                r.cfg.arl.seed = *s;
                r.cfg.seed_set = true;
            }
            if (al) r.cfg.arl.alpha = *al;
            r.cfg.output_dir.clear();
            validate_for_training(r.cfg);
            if (sweep) r.rel = "seed" + std::to_string(r.cfg.arl.seed) + "_alpha" + number_label(r.cfg.arl.alpha);
            runs.push_back(std::move(r));
        }
    }

    AtomicDir stage(out_dir, args.force);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(runs.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            try {
                train_one(runs[i].cfg, stage.path() / runs[i].rel);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(args.jobs), runs.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    stage.commit();
    out << "train: " << runs.size() << " run(s) written to " << out_dir << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// adversary

struct AdversaryArgs {
    std::string config;
    std::string checkpoint;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

inline int cmd_adversary(const AdversaryArgs& args, std::ostream& out)
{
    ExperimentConfig cfg = read_config(args.config);
    if (args.seed) {
        cfg.arl.seed = *args.seed;
        cfg.seed_set = true;
    }
    validate_for_training(cfg);
    if (!fs::is_regular_file(args.checkpoint)) throw ConfigError("--checkpoint: file not found '" + args.checkpoint + "'");
    std::ifstream in(args.checkpoint);
    std::vector<nn::Mlp> models;
    try {
        models = nn::read_checkpoint(in);
    } catch (const std::runtime_error& e) {
        throw ConfigError("--checkpoint: " + std::string(e.what()));
    }
    Players players;
    bool have_encoder = false, have_predictor = false;
    for (auto& m : models) {
        if (m.role() == nn::Role::encoder && !have_encoder) {
            players.encoder = m;
            have_encoder = true;
        } else if (m.role() == nn::Role::predictor && !have_predictor) {
            players.predictor = m;
            have_predictor = true;
        }
    }
    if (!have_encoder) throw ConfigError("--checkpoint: role mismatch, no encoder model in '" + args.checkpoint + "'");
    const std::string out_dir = args.out.empty() ? cfg.output_dir : args.out;
    AtomicDir stage(out_dir, args.force);
    const ExperimentData d = load_experiment_data(cfg);
    if (players.encoder.spec().input_dim != d.train.dim()) {
        throw ConfigError("--checkpoint: encoder input_dim " + std::to_string(players.encoder.spec().input_dim) +
                          " does not match the data dimension " + std::to_string(d.train.dim()));
    }
    AdversaryResult adv;
    eval::TradeoffPoint p;
    if (have_predictor) {
        p = tradeoff_point(cfg, players, d, &adv);
    } else {
        adv = train_adversary(players.encoder, effective_adversary(cfg), d.train, d.test);
        p.adv_acc = adv.test_accuracy;
        p.adv_entropy = adv.test_entropy;
        p.variant = to_string(cfg.arl.variant);
        p.alpha = cfg.arl.alpha;
        p.seed = cfg.arl.seed;
    }
    write_file(stage.path() / "tradeoff.csv", [&](std::ostream& os) {
        eval::write_tradeoff_header(os);
        eval::write_tradeoff_row(os, p);
    });
    stage.commit();
    out << "adversary: target_acc=" << p.target_acc << " adv_acc=" << p.adv_acc << " adv_entropy=" << p.adv_entropy
        << " epochs=" << adv.epochs_run << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// dynamics

struct DynamicsArgs {
    std::string config;
    std::string out;
    std::string variant;
    std::optional<double> alpha;
    std::string game_form;
    std::vector<double> start;
    std::vector<std::string> frozen;
    std::optional<double> dt;
    std::optional<long> steps;
    std::optional<int> grid_n;
    std::optional<long> record_every;
    bool force = false;
};

inline int cmd_dynamics(const DynamicsArgs& args, std::ostream& out)
{
    DynamicsBlock d;
    std::string out_dir = args.out;
    if (!args.config.empty()) {
        const ExperimentConfig cfg = read_config(args.config);
        d = cfg.dynamics;
        if (out_dir.empty()) out_dir = cfg.output_dir;
    }
    try {
        if (!args.variant.empty()) d.game.variant = parse_variant(args.variant);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("--variant: ") + e.what());
    }
    try {
        if (!args.game_form.empty()) d.game.form = dynamics::parse_game_form(args.game_form);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("--game-form: ") + e.what());
    }
    if (args.alpha) d.game.alpha = *args.alpha;
    if (!args.start.empty()) d.start = {args.start[0], args.start[1], args.start[2]};
    if (!args.frozen.empty()) {
        d.integration.frozen = {false, false, false};
        for (const auto& w : args.frozen) {
            if (w == "w1") d.integration.frozen[0] = true;
            else if (w == "w2") d.integration.frozen[1] = true;
            else if (w == "w3") d.integration.frozen[2] = true;
            else if (w != "none") throw ConfigError("--frozen: unknown coordinate '" + w + "' (expected w1, w2, w3, none)");
        }
    }
    if (args.dt) d.integration.dt = *args.dt;
    if (args.steps) d.integration.steps = *args.steps;
    if (args.grid_n) d.grid_n = *args.grid_n;
    if (args.record_every) d.integration.record_every = *args.record_every;
    if (!(d.game.alpha >= 0.0)) throw ConfigError("--alpha: must be >= 0");
    if (!(d.integration.dt > 0.0)) throw ConfigError("--dt: must be > 0");
    if (d.integration.steps < 0) throw ConfigError("--steps: must be >= 0");
    if (d.grid_n < 2) throw ConfigError("--grid-n: must be >= 2");
    if (d.integration.record_every < 0) throw ConfigError("--record-every: must be >= 0");

    AtomicDir stage(out_dir, args.force);
    const dynamics::Field f = dynamics::make_field(d.game);
    write_file(stage.path() / "grid.csv",
               [&](std::ostream& os) { dynamics::grid_export(os, f, d.grid_lo, d.grid_hi, d.grid_n); });
    dynamics::DynamicsReport r = dynamics::analyze(d.game, {0.0, 0.0, 0.0}, d.start, d.integration);
    r.grid_file = "grid.csv";
    r.grid_n = d.grid_n;
    r.grid_lo = d.grid_lo;
    r.grid_hi = d.grid_hi;
    write_file(stage.path() / "trajectory.csv", [&](std::ostream& os) { dynamics::write_trajectory_csv(os, r.trajectory); });
    write_file(stage.path() / "report.txt", [&](std::ostream& os) { dynamics::write_report(os, r); });
    stage.commit();
    out << "dynamics: " << to_string(d.game.variant) << ' ' << dynamics::to_string(d.game.form)
        << " verdict=" << dynamics::to_string(r.verdict) << " final_field_norm=" << r.trajectory.final_field_norm
        << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// pareto

struct ParetoArgs {
    std::vector<std::string> files;
    std::string objective = "accuracy";
    int m = 0;
    std::string out;
    bool force = false;
};

inline int cmd_pareto(const ParetoArgs& args, std::ostream& out)
{
    eval::ObjectivePair pair;
    try {
        pair = eval::parse_objective_pair(args.objective);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("--objective: ") + e.what());
    }
    if (args.m < 2) throw ConfigError("--m: sensitive class count must be >= 2");
    for (const auto& f : args.files) {
        if (!fs::is_regular_file(f)) throw ConfigError("FILES: not found '" + f + "'");
    }
    AtomicDir stage(args.out, args.force);
    std::vector<eval::TradeoffPoint> all;
    for (const auto& f : args.files) {
        std::ifstream in(f);
        const auto rows = eval::read_tradeoff_csv(in, f);
        all.insert(all.end(), rows.begin(), rows.end());
    }
    const eval::Front front = eval::nondominated(all, pair, args.m);
    const double hv = eval::hypervolume(front);
    write_file(stage.path() / "front.csv", [&](std::ostream& os) { eval::write_front_report(os, front, hv, all.size()); });
    stage.commit();
    out << "pareto: " << front.points.size() << " of " << all.size() << " points retained, hv=" << hv << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples_per_component;
    std::optional<double> sigma;
    bool force = false;
};

inline int cmd_gen_data(const GenDataArgs& args, std::ostream& out)
{
    data::MixtureConfig mc;
    std::string out_dir = args.out;
    if (!args.config.empty()) {
        const ExperimentConfig cfg = read_config(args.config);
        if (cfg.dataset.kind != DatasetKind::mixture) throw ConfigError("dataset.kind: gen-data needs kind = mixture");
        mc = cfg.dataset.mixture;
        mc.seed = cfg.data_seed();
        if (out_dir.empty()) out_dir = cfg.output_dir;
    }
    if (args.seed) mc.seed = *args.seed;
    if (args.samples_per_component) mc.samples_per_component = *args.samples_per_component;
    if (args.sigma) mc.sigma = *args.sigma;
    if (mc.samples_per_component == 0) throw ConfigError("--samples-per-component: must be >= 1");
    if (!(mc.sigma > 0.0)) throw ConfigError("--sigma: must be > 0");
    AtomicDir stage(out_dir, args.force);
    const data::Dataset ds = data::gen_mixture(mc);
    write_file(stage.path() / "data.csv", [&](std::ostream& os) { data::write_csv(os, ds); });
    stage.commit();
    out << "gen-data: " << ds.size() << " rows written to " << out_dir << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

/// Parses argv and runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Adversarial representation learning experiments"};
    app.set_version_flag("--version", std::string(ARL_VERSION));
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train encoder, predictor and discriminator");
    train->add_option("--config", ta.config, "Experiment config file")->required();
    train->add_option("--out", ta.out, "Output directory (default: output.dir)");
    train->add_option("--seed", ta.seeds, "Seed or comma list of seeds")->delimiter(',');
    train->add_option("--alpha", ta.alphas, "Trade-off or comma list of trade-offs")->delimiter(',');
    train->add_option("--variant", ta.variant, "ml | maxent");
    train->add_flag("--force", ta.force, "Overwrite an existing output directory");
    train->add_option("--jobs", ta.jobs, "Parallel runs for seed/alpha sweeps");

    AdversaryArgs aa;
    auto* adversary = app.add_subcommand("adversary", "Fit a post-hoc adversary on a frozen encoder");
    adversary->add_option("--config", aa.config, "Experiment config (a run manifest works)")->required();
    adversary->add_option("--checkpoint", aa.checkpoint, "Checkpoint holding the encoder")->required();
    adversary->add_option("--out", aa.out, "Output directory");
    adversary->add_option("--seed", aa.seed, "Seed of the training run");
    adversary->add_flag("--force", aa.force, "Overwrite an existing output directory");

    DynamicsArgs da;
    auto* dyn = app.add_subcommand("dynamics", "Vector field, trajectory and stability of the linear game");
    dyn->add_option("--config", da.config, "Config with a [dynamics] section");
    dyn->add_option("--out", da.out, "Output directory");
    dyn->add_option("--variant", da.variant, "ml | maxent");
    dyn->add_option("--alpha", da.alpha, "Trade-off");
    dyn->add_option("--game-form", da.game_form, "bilinear | quadratic");
    dyn->add_option("--start", da.start, "Start point w1 w2 w3")->expected(3);
    dyn->add_option("--frozen", da.frozen, "Frozen coordinates, e.g. w3")->delimiter(',');
    dyn->add_option("--dt", da.dt, "RK4 step");
    dyn->add_option("--steps", da.steps, "RK4 steps");
    dyn->add_option("--grid-n", da.grid_n, "Grid points per axis");
    dyn->add_option("--record-every", da.record_every, "Trajectory sampling stride (0: ends only)");
    dyn->add_flag("--force", da.force, "Overwrite an existing output directory");

    ParetoArgs pa;
    auto* pareto = app.add_subcommand("pareto", "Non-dominated front and hypervolume of trade-off files");
    pareto->add_option("FILES", pa.files, "tradeoff.csv files")->required();
    pareto->add_option("--objective", pa.objective, "accuracy | entropy");
    pareto->add_option("--m", pa.m, "Number of sensitive classes")->required();
    pareto->add_option("--out", pa.out, "Output directory")->required();
    pareto->add_flag("--force", pa.force, "Overwrite an existing output directory");

    GenDataArgs ga;
    auto* gen = app.add_subcommand("gen-data", "Write the Gaussian mixture as CSV");
    gen->add_option("--config", ga.config, "Config with a mixture [dataset] section");
    gen->add_option("--out", ga.out, "Output directory");
    gen->add_option("--seed", ga.seed, "Mixture seed");
    gen->add_option("--samples-per-component", ga.samples_per_component, "Samples per component");
    gen->add_option("--sigma", ga.sigma, "Component standard deviation");
    gen->add_flag("--force", ga.force, "Overwrite an existing output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train->parsed()) return cmd_train(ta, out);
        if (adversary->parsed()) return cmd_adversary(aa, out);
        if (dyn->parsed()) return cmd_dynamics(da, out);
        if (pareto->parsed()) return cmd_pareto(pa, out);
        if (gen->parsed()) return cmd_gen_data(ga, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}

} // namespace arl::cli
