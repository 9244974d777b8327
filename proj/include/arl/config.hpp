#pragma once

// Experiment configuration: one INI file, read with Boost.PropertyTree.
//
// Sections and keys (all optional unless the command needs them):
//
//   [dataset]    kind = mixture|csv, path | train_path + test_path, schema,
//                split, split_seed, seed, samples_per_component, sigma
//   [model]      encoder_hidden, embedding_dim, predictor_hidden,
//                discriminator_hidden, activation
//   [arl]        variant, alpha, epochs, batch_size, update, seed,
//                optimizer, learning_rate, momentum, beta1, beta2, epsilon,
//                weight_decay; any optimizer key may be prefixed with
//                encoder_, predictor_ or discriminator_ to override it
//                for that player
//   [adversary]  kind = mlp|logistic, hidden, activation, optimizer,
//                learning_rate, momentum, beta1, beta2, epsilon,
//                weight_decay, batch_size, patience, max_epochs,
//                validation_fraction
//   [eval]       objective = accuracy|entropy, m
//   [dynamics]   variant, alpha, game_form, start, frozen, dt, steps,
//                record_every, grid_n, grid_lo, grid_hi
//   [output]     dir
//
// Lists are comma separated; an empty value is an empty list. Relative paths
// are resolved against the directory of the config file. Unknown sections
// and keys are errors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "arl/arl.hpp"
#include "arl/datasets.hpp"
#include "arl/dynamics.hpp"
#include "arl/eval.hpp"
#include "arl/nn.hpp"

namespace arl {

/// Invalid or missing configuration; the message starts with the field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] inline std::string to_string(nn::OptimizerKind k) { return k == nn::OptimizerKind::adam ? "adam" : "sgd_momentum"; }

[[nodiscard]] inline nn::OptimizerKind parse_optimizer_kind(const std::string& s)
{
    if (s == "adam") return nn::OptimizerKind::adam;
    if (s == "sgd_momentum" || s == "sgd") return nn::OptimizerKind::sgd_momentum;
    throw std::invalid_argument("unknown optimizer '" + s + "' (expected adam|sgd_momentum)");
}

[[nodiscard]] inline std::string to_string(AdversaryKind k) { return k == AdversaryKind::mlp ? "mlp" : "logistic"; }

[[nodiscard]] inline AdversaryKind parse_adversary_kind(const std::string& s)
{
    if (s == "mlp") return AdversaryKind::mlp;
    if (s == "logistic") return AdversaryKind::logistic;
    throw std::invalid_argument("unknown adversary kind '" + s + "' (expected mlp|logistic)");
}

enum class DatasetKind { mixture, csv };

struct DatasetBlock {
    DatasetKind kind = DatasetKind::mixture;
    std::string path;       // csv, one file split by `split`
    std::string train_path; // csv, published partition
    std::string test_path;
    std::string schema;
    double split = 0.8; // train fraction
    std::optional<std::uint64_t> split_seed;
    std::optional<std::uint64_t> seed; // mixture draw
    data::MixtureConfig mixture;
};

struct DynamicsBlock {
    dynamics::LinearGame game;
    dynamics::State start{0.008, 0.006, 0.004};
    dynamics::IntegrateOptions integration;
    int grid_n = 30;
    double grid_lo = -0.01;
    double grid_hi = 0.01;
};

struct ExperimentConfig {
    std::string source; // path of the file this was read from, if any
    DatasetBlock dataset;
    Architecture model;
    ArlConfig arl;
    bool seed_set = false;
    AdversarySpec adversary;
    eval::ObjectivePair objective = eval::ObjectivePair::accuracy;
    std::optional<int> eval_m;
    DynamicsBlock dynamics;
    std::string output_dir;

    /// Effective dataset seeds; both follow arl.seed unless set explicitly.
    [[nodiscard]] std::uint64_t data_seed() const { return dataset.seed.value_or(arl.seed); }
    [[nodiscard]] std::uint64_t split_seed() const { return dataset.split_seed.value_or(derive_seed(arl.seed, 500)); }
};

namespace detail {

using boost::property_tree::ptree;

inline const std::map<std::string, std::vector<std::string>>& known_keys()
{
    static const std::vector<std::string> opt{"optimizer", "learning_rate", "momentum", "beta1", "beta2", "epsilon",
                                              "weight_decay"};
    static const std::map<std::string, std::vector<std::string>> keys = [] {
        std::map<std::string, std::vector<std::string>> k{
            {"dataset",
             {"kind", "path", "train_path", "test_path", "schema", "split", "split_seed", "seed",
              "samples_per_component", "sigma"}},
            {"model", {"encoder_hidden", "embedding_dim", "predictor_hidden", "discriminator_hidden", "activation"}},
            {"arl", {"variant", "alpha", "epochs", "batch_size", "update", "seed"}},
            {"adversary",
             {"kind", "hidden", "activation", "batch_size", "patience", "max_epochs", "validation_fraction"}},
            {"eval", {"objective", "m"}},
            {"dynamics",
             {"variant", "alpha", "game_form", "start", "frozen", "dt", "steps", "record_every", "grid_n", "grid_lo",
              "grid_hi"}},
            {"output", {"dir"}},
        };
        for (const auto& o : opt) {
            k["arl"].push_back(o);
            k["adversary"].push_back(o);
            for (const char* who : {"encoder_", "predictor_", "discriminator_"}) k["arl"].push_back(who + o);
        }
        return k;
    }();
    return keys;
}

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

/// Typed reads from one section; every error names "section.key".
class Section {
public:
    Section(const ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    [[nodiscard]] bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

    [[nodiscard]] std::string raw(const std::string& key) const { return trim(tree_->get<std::string>(key)); }

    [[nodiscard]] std::string path(const std::string& key) const { return name_ + "." + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const
    {
        throw ConfigError(path(key) + ": " + why);
    }

    template <class T>
    void read(const std::string& key, T& out) const
    {
        if (!has(key)) return;
        out = parse<T>(key, raw(key));
    }

    template <class T>
    void read(const std::string& key, std::optional<T>& out) const
    {
        if (!has(key)) return;
        out = parse<T>(key, raw(key));
    }

    void read_list(const std::string& key, std::vector<std::size_t>& out) const
    {
        if (!has(key)) return;
        out.clear();
        const std::string v = raw(key);
        if (v.empty()) return;
        for (const auto& item : data::split_list(v)) {
            const auto d = parse<std::size_t>(key, trim(item));
            if (d == 0) fail(key, "layer widths must be >= 1");
            out.push_back(d);
        }
    }

    template <class F>
    void read_enum(const std::string& key, F parse_fn) const
    {
        if (!has(key)) return;
        try {
            parse_fn(raw(key));
        } catch (const std::invalid_argument& e) {
            fail(key, e.what());
        }
    }

    template <class T>
    [[nodiscard]] T parse(const std::string& key, const std::string& v) const
    {
        if constexpr (std::is_same_v<T, std::string>) {
            return v;
        } else {
            std::istringstream is(v);
            T out{};
            if constexpr (std::is_unsigned_v<T>) {
                if (!v.empty() && v[0] == '-') fail(key, "expected a non-negative integer, got '" + v + "'");
            }
            if (v.empty() || !(is >> out) || !(is >> std::ws).eof()) {
                fail(key, "cannot parse '" + v + "'");
            }
            return out;
        }
    }

private:
    const ptree* tree_;
    std::string name_;
};

inline Section section(const ptree& root, const std::string& name)
{
    const auto it = root.find(name);
    return Section(it == root.not_found() ? nullptr : &it->second, name);
}

inline void read_optimizer(const Section& s, const std::string& prefix, nn::OptimizerSettings& o)
{
    s.read_enum(prefix + "optimizer", [&](const std::string& v) { o.kind = parse_optimizer_kind(v); });
    s.read(prefix + "learning_rate", o.learning_rate);
    s.read(prefix + "momentum", o.momentum);
    s.read(prefix + "beta1", o.beta1);
    s.read(prefix + "beta2", o.beta2);
    s.read(prefix + "epsilon", o.epsilon);
    s.read(prefix + "weight_decay", o.weight_decay);
    const std::string lr = s.path(prefix + "learning_rate");
    if (!(o.learning_rate >= 0.0)) throw ConfigError(lr + ": must be >= 0");
    if (!(o.weight_decay >= 0.0)) throw ConfigError(s.path(prefix + "weight_decay") + ": must be >= 0");
    if (!(o.momentum >= 0.0 && o.momentum < 1.0)) throw ConfigError(s.path(prefix + "momentum") + ": must be in [0, 1)");
    if (!(o.beta1 >= 0.0 && o.beta1 < 1.0)) throw ConfigError(s.path(prefix + "beta1") + ": must be in [0, 1)");
    if (!(o.beta2 >= 0.0 && o.beta2 < 1.0)) throw ConfigError(s.path(prefix + "beta2") + ": must be in [0, 1)");
    if (!(o.epsilon > 0.0)) throw ConfigError(s.path(prefix + "epsilon") + ": must be > 0");
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p)
{
    if (p.empty()) return p;
    const std::filesystem::path q(p);
    return q.is_absolute() ? p : (base / q).lexically_normal().string();
}

inline dynamics::State parse_state(const Section& s, const std::string& key)
{
    std::istringstream is(s.raw(key));
    dynamics::State w{};
    for (double& v : w) {
        if (!(is >> v)) s.fail(key, "expected three numbers");
    }
    if (!(is >> std::ws).eof()) s.fail(key, "expected three numbers");
    return w;
}

} // namespace detail

/// Parses INI text. `base_dir` anchors relative paths.
[[nodiscard]] inline ExperimentConfig parse_config(std::istream& is, const std::string& source,
                                                   const std::filesystem::path& base_dir)
{
    using detail::ptree;
    ptree root;
    try {
        boost::property_tree::ini_parser::read_ini(is, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    const auto& known = detail::known_keys();
    for (const auto& [name, body] : root) {
        const auto it = known.find(name);
        if (it == known.end()) {
            throw ConfigError(name + ": unknown section" + (body.empty() ? " or key outside a section" : ""));
        }
        for (const auto& kv : body) {
            if (std::find(it->second.begin(), it->second.end(), kv.first) == it->second.end()) {
                throw ConfigError(name + "." + kv.first + ": unknown key");
            }
        }
    }

    ExperimentConfig cfg;
    cfg.source = source;

    const auto ds = detail::section(root, "dataset");
    ds.read_enum("kind", [&](const std::string& v) {
        if (v == "mixture") cfg.dataset.kind = DatasetKind::mixture;
        else if (v == "csv") cfg.dataset.kind = DatasetKind::csv;
        else throw std::invalid_argument("unknown dataset kind '" + v + "' (expected mixture|csv)");
    });
    ds.read("path", cfg.dataset.path);
    ds.read("train_path", cfg.dataset.train_path);
    ds.read("test_path", cfg.dataset.test_path);
    ds.read("schema", cfg.dataset.schema);
    ds.read("split", cfg.dataset.split);
    ds.read("split_seed", cfg.dataset.split_seed);
    ds.read("seed", cfg.dataset.seed);
    ds.read("samples_per_component", cfg.dataset.mixture.samples_per_component);
    ds.read("sigma", cfg.dataset.mixture.sigma);
    if (!(cfg.dataset.split > 0.0 && cfg.dataset.split < 1.0)) ds.fail("split", "must be in (0, 1)");
    if (!(cfg.dataset.mixture.sigma > 0.0)) ds.fail("sigma", "must be > 0");
    if (cfg.dataset.mixture.samples_per_component == 0) ds.fail("samples_per_component", "must be >= 1");
    for (std::string* p : {&cfg.dataset.path, &cfg.dataset.train_path, &cfg.dataset.test_path, &cfg.dataset.schema}) {
        *p = detail::resolve(base_dir, *p);
    }
    if (cfg.dataset.kind == DatasetKind::csv) {
        if (cfg.dataset.schema.empty()) ds.fail("schema", "required for kind = csv");
        const bool one = !cfg.dataset.path.empty();
        const bool two = !cfg.dataset.train_path.empty() || !cfg.dataset.test_path.empty();
        if (one == two) ds.fail("path", "give either path or train_path + test_path");
        if (two && (cfg.dataset.train_path.empty() || cfg.dataset.test_path.empty())) {
            ds.fail(cfg.dataset.train_path.empty() ? "train_path" : "test_path", "both train_path and test_path required");
        }
    }

    const auto md = detail::section(root, "model");
    md.read_list("encoder_hidden", cfg.model.encoder_hidden);
    md.read("embedding_dim", cfg.model.embedding_dim);
    md.read_list("predictor_hidden", cfg.model.predictor_hidden);
    md.read_list("discriminator_hidden", cfg.model.discriminator_hidden);
    md.read_enum("activation", [&](const std::string& v) { cfg.model.activation = nn::parse_activation(v); });
    if (cfg.model.embedding_dim == 0) md.fail("embedding_dim", "must be >= 1");

    const auto a = detail::section(root, "arl");
    a.read_enum("variant", [&](const std::string& v) { cfg.arl.variant = parse_variant(v); });
    a.read("alpha", cfg.arl.alpha);
    a.read("epochs", cfg.arl.epochs);
    a.read("batch_size", cfg.arl.batch_size);
    a.read_enum("update", [&](const std::string& v) { cfg.arl.update = parse_update_mode(v); });
    if (a.has("seed")) {
        a.read("seed", cfg.arl.seed);
        cfg.seed_set = true;
    }
    if (!(cfg.arl.alpha >= 0.0) || !std::isfinite(cfg.arl.alpha)) a.fail("alpha", "must be a finite value >= 0");
    if (cfg.arl.epochs < 0) a.fail("epochs", "must be >= 0");
    if (cfg.arl.batch_size == 0) a.fail("batch_size", "must be >= 1");
    nn::OptimizerSettings shared;
    detail::read_optimizer(a, "", shared);
    cfg.arl.encoder_opt = cfg.arl.predictor_opt = cfg.arl.discriminator_opt = shared;
    detail::read_optimizer(a, "encoder_", cfg.arl.encoder_opt);
    detail::read_optimizer(a, "predictor_", cfg.arl.predictor_opt);
    detail::read_optimizer(a, "discriminator_", cfg.arl.discriminator_opt);

    const auto adv = detail::section(root, "adversary");
    adv.read_enum("kind", [&](const std::string& v) { cfg.adversary.kind = parse_adversary_kind(v); });
    adv.read_list("hidden", cfg.adversary.hidden);
    adv.read_enum("activation", [&](const std::string& v) { cfg.adversary.activation = nn::parse_activation(v); });
    detail::read_optimizer(adv, "", cfg.adversary.fit.optimizer);
    adv.read("batch_size", cfg.adversary.fit.batch_size);
    adv.read("patience", cfg.adversary.fit.patience);
    adv.read("max_epochs", cfg.adversary.fit.max_epochs);
    adv.read("validation_fraction", cfg.adversary.fit.validation_fraction);
    if (cfg.adversary.fit.batch_size == 0) adv.fail("batch_size", "must be >= 1");
    if (cfg.adversary.fit.patience < 1) adv.fail("patience", "must be >= 1");
    if (cfg.adversary.fit.max_epochs < 1) adv.fail("max_epochs", "must be >= 1");
    const double vf = cfg.adversary.fit.validation_fraction;
    if (!(vf >= 0.0 && vf < 1.0)) adv.fail("validation_fraction", "must be in [0, 1)");

    const auto ev = detail::section(root, "eval");
    ev.read_enum("objective", [&](const std::string& v) { cfg.objective = eval::parse_objective_pair(v); });
    ev.read("m", cfg.eval_m);
    if (cfg.eval_m && *cfg.eval_m < 2) ev.fail("m", "must be >= 2");

    const auto dy = detail::section(root, "dynamics");
    auto& d = cfg.dynamics;
    dy.read_enum("variant", [&](const std::string& v) { d.game.variant = parse_variant(v); });
    dy.read("alpha", d.game.alpha);
    dy.read_enum("game_form", [&](const std::string& v) { d.game.form = dynamics::parse_game_form(v); });
    if (dy.has("start")) d.start = detail::parse_state(dy, "start");
    if (dy.has("frozen")) {
        for (const auto& item : data::split_list(dy.raw("frozen"))) {
            const std::string w = detail::trim(item);
            if (w == "w1") d.integration.frozen[0] = true;
            else if (w == "w2") d.integration.frozen[1] = true;
            else if (w == "w3") d.integration.frozen[2] = true;
            else if (!w.empty()) dy.fail("frozen", "unknown coordinate '" + w + "' (expected w1, w2, w3)");
        }
    }
    dy.read("dt", d.integration.dt);
    dy.read("steps", d.integration.steps);
    dy.read("record_every", d.integration.record_every);
    dy.read("grid_n", d.grid_n);
    dy.read("grid_lo", d.grid_lo);
    dy.read("grid_hi", d.grid_hi);
    if (!(d.game.alpha >= 0.0)) dy.fail("alpha", "must be >= 0");
    if (!(d.integration.dt > 0.0)) dy.fail("dt", "must be > 0");
    if (d.integration.steps < 0) dy.fail("steps", "must be >= 0");
    if (d.integration.record_every < 0) dy.fail("record_every", "must be >= 0");
    if (d.grid_n < 2) dy.fail("grid_n", "must be >= 2");
    if (!(d.grid_lo < d.grid_hi)) dy.fail("grid_lo", "must be < grid_hi");

    const auto out = detail::section(root, "output");
    out.read("dir", cfg.output_dir);
    cfg.output_dir = detail::resolve(base_dir, cfg.output_dir);
    return cfg;
}

[[nodiscard]] inline ExperimentConfig read_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("--config: cannot open '" + path + "'");
    return parse_config(in, path, std::filesystem::path(path).parent_path());
}

/// Checks needed before training: a seed and existing input files.
inline void validate_for_training(const ExperimentConfig& cfg)
{
    if (!cfg.seed_set) throw ConfigError("arl.seed: required (runs must be reproducible)");
    if (cfg.dataset.kind == DatasetKind::csv) {
        const std::pair<const char*, const std::string*> files[] = {{"dataset.path", &cfg.dataset.path},
                                                                    {"dataset.train_path", &cfg.dataset.train_path},
                                                                    {"dataset.test_path", &cfg.dataset.test_path},
                                                                    {"dataset.schema", &cfg.dataset.schema}};
        for (const auto& [key, p] : files) {
            if (!p->empty() && !std::filesystem::is_regular_file(*p)) {
                throw ConfigError(std::string(key) + ": file not found '" + *p + "'");
            }
        }
    }
}

namespace detail {
inline std::string join(const std::vector<std::size_t>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

inline void write_optimizer(std::ostream& os, const std::string& prefix, const nn::OptimizerSettings& o)
{
    os << prefix << "optimizer = " << to_string(o.kind) << '\n';
    os << prefix << "learning_rate = " << o.learning_rate << '\n';
    os << prefix << "momentum = " << o.momentum << '\n';
    os << prefix << "beta1 = " << o.beta1 << '\n';
    os << prefix << "beta2 = " << o.beta2 << '\n';
    os << prefix << "epsilon = " << o.epsilon << '\n';
    os << prefix << "weight_decay = " << o.weight_decay << '\n';
}
} // namespace detail

/// Every effective value, in a form parse_config reads back to the same config.
inline void write_config(std::ostream& os, const ExperimentConfig& cfg)
{
    os << std::setprecision(17);
    const auto& ds = cfg.dataset;
    os << "[dataset]\n";
    os << "kind = " << (ds.kind == DatasetKind::mixture ? "mixture" : "csv") << '\n';
    if (ds.kind == DatasetKind::csv) {
        if (!ds.path.empty()) os << "path = " << ds.path << '\n';
        if (!ds.train_path.empty()) os << "train_path = " << ds.train_path << '\n';
        if (!ds.test_path.empty()) os << "test_path = " << ds.test_path << '\n';
        os << "schema = " << ds.schema << '\n';
    } else {
        os << "samples_per_component = " << ds.mixture.samples_per_component << '\n';
        os << "sigma = " << ds.mixture.sigma << '\n';
        os << "seed = " << cfg.data_seed() << '\n';
    }
    os << "split = " << ds.split << '\n';
    os << "split_seed = " << cfg.split_seed() << '\n';

    os << "\n[model]\n";
    os << "encoder_hidden = " << detail::join(cfg.model.encoder_hidden) << '\n';
    os << "embedding_dim = " << cfg.model.embedding_dim << '\n';
    os << "predictor_hidden = " << detail::join(cfg.model.predictor_hidden) << '\n';
    os << "discriminator_hidden = " << detail::join(cfg.model.discriminator_hidden) << '\n';
    os << "activation = " << nn::to_string(cfg.model.activation) << '\n';

    os << "\n[arl]\n";
    os << "variant = " << to_string(cfg.arl.variant) << '\n';
    os << "alpha = " << cfg.arl.alpha << '\n';
    os << "epochs = " << cfg.arl.epochs << '\n';
    os << "batch_size = " << cfg.arl.batch_size << '\n';
    os << "update = " << to_string(cfg.arl.update) << '\n';
    if (cfg.seed_set) os << "seed = " << cfg.arl.seed << '\n';
    detail::write_optimizer(os, "encoder_", cfg.arl.encoder_opt);
    detail::write_optimizer(os, "predictor_", cfg.arl.predictor_opt);
    detail::write_optimizer(os, "discriminator_", cfg.arl.discriminator_opt);

    const auto& adv = cfg.adversary;
    os << "\n[adversary]\n";
    os << "kind = " << to_string(adv.kind) << '\n';
    os << "hidden = " << detail::join(adv.hidden) << '\n';
    os << "activation = " << nn::to_string(adv.activation) << '\n';
    detail::write_optimizer(os, "", adv.fit.optimizer);
    os << "batch_size = " << adv.fit.batch_size << '\n';
    os << "patience = " << adv.fit.patience << '\n';
    os << "max_epochs = " << adv.fit.max_epochs << '\n';
    os << "validation_fraction = " << adv.fit.validation_fraction << '\n';

    os << "\n[eval]\n";
    os << "objective = " << eval::to_string(cfg.objective) << '\n';
    if (cfg.eval_m) os << "m = " << *cfg.eval_m << '\n';

    const auto& d = cfg.dynamics;
    os << "\n[dynamics]\n";
    os << "variant = " << to_string(d.game.variant) << '\n';
    os << "alpha = " << d.game.alpha << '\n';
    os << "game_form = " << dynamics::to_string(d.game.form) << '\n';
    os << "start = " << d.start[0] << ' ' << d.start[1] << ' ' << d.start[2] << '\n';
    std::string frozen;
    for (int i = 0; i < 3; ++i) {
        if (d.integration.frozen[i]) frozen += (frozen.empty() ? "w" : ",w") + std::to_string(i + 1);
    }
    os << "frozen = " << frozen << '\n';
    os << "dt = " << d.integration.dt << '\n';
    os << "steps = " << d.integration.steps << '\n';
    os << "record_every = " << d.integration.record_every << '\n';
    os << "grid_n = " << d.grid_n << '\n';
    os << "grid_lo = " << d.grid_lo << '\n';
    os << "grid_hi = " << d.grid_hi << '\n';

    if (!cfg.output_dir.empty()) os << "\n[output]\ndir = " << cfg.output_dir << '\n';
}

} // namespace arl
