#pragma once

// Three-player adversarial representation learning.
//
// Players: encoder E (z = E(x)), target predictor T (logits over n target
// classes) and discriminator D (logits over m sensitive classes).
//
//   v1 = CE(D(z), s)            discriminator loss
//   v2 = CE(T(z), t)            predictor loss
//   v3 = KL(softmax(D(z)) || U) leakage of the discriminator
//
//   maxent: encoder minimizes v2 + alpha * v3 (never reads s)
//   ml:     encoder minimizes v2 - alpha * v1 (zero-sum with D)
//
// Every player descends the gradient of its own loss: theta <- theta - lr * dL/dtheta.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "arl/autodiff.hpp"
#include "arl/datasets.hpp"
#include "arl/eval.hpp"
#include "arl/nn.hpp"

namespace arl {

enum class Variant { ml, maxent };
enum class UpdateMode { simultaneous, alternating };

[[nodiscard]] inline std::string to_string(Variant v) { return v == Variant::ml ? "ml" : "maxent"; }

[[nodiscard]] inline Variant parse_variant(const std::string& s)
{
    if (s == "ml") return Variant::ml;
    if (s == "maxent") return Variant::maxent;
    throw std::invalid_argument("unknown variant '" + s + "' (expected ml|maxent)");
}

[[nodiscard]] inline std::string to_string(UpdateMode m)
{
    return m == UpdateMode::simultaneous ? "simultaneous" : "alternating";
}

[[nodiscard]] inline UpdateMode parse_update_mode(const std::string& s)
{
    if (s == "simultaneous") return UpdateMode::simultaneous;
    if (s == "alternating") return UpdateMode::alternating;
    throw std::invalid_argument("unknown update mode '" + s + "' (expected simultaneous|alternating)");
}

/// splitmix64 finalizer; derives independent stream seeds from one run seed.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct ArlConfig {
    Variant variant = Variant::maxent;
    double alpha = 1.0;
    int n_classes = 2;
    int m_classes = 2;
    int epochs = 10;
    std::size_t batch_size = 64;
    UpdateMode update = UpdateMode::simultaneous;
    nn::OptimizerSettings encoder_opt;
    nn::OptimizerSettings predictor_opt;
    nn::OptimizerSettings discriminator_opt;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("ArlConfig: alpha must be >= 0");
        if (n_classes < 2) throw std::invalid_argument("ArlConfig: n must be >= 2");
        if (m_classes < 2) throw std::invalid_argument("ArlConfig: m must be >= 2");
        if (epochs < 0) throw std::invalid_argument("ArlConfig: epochs must be >= 0");
        if (batch_size == 0) throw std::invalid_argument("ArlConfig: batch_size must be >= 1");
    }
};

/// Hidden-layer layout of the three players.
struct Architecture {
    std::vector<std::size_t> encoder_hidden{64};
    std::size_t embedding_dim = 64;
    std::vector<std::size_t> predictor_hidden{};
    std::vector<std::size_t> discriminator_hidden{64, 64};
    nn::Activation activation = nn::Activation::relu;
};

struct Players {
    nn::Mlp encoder;
    nn::Mlp predictor;
    nn::Mlp discriminator;
};

[[nodiscard]] inline Players make_players(const Architecture& arch, std::size_t input_dim, const ArlConfig& cfg)
{
    Players p;
    p.encoder = nn::Mlp(nn::Role::encoder, {input_dim, arch.encoder_hidden, arch.embedding_dim, arch.activation,
                                            derive_seed(cfg.seed, 1)});
    p.predictor = nn::Mlp(nn::Role::predictor,
                          {arch.embedding_dim, arch.predictor_hidden, static_cast<std::size_t>(cfg.n_classes),
                           arch.activation, derive_seed(cfg.seed, 2)});
    p.discriminator = nn::Mlp(nn::Role::discriminator,
                              {arch.embedding_dim, arch.discriminator_hidden, static_cast<std::size_t>(cfg.m_classes),
                               arch.activation, derive_seed(cfg.seed, 3)});
    return p;
}

struct LossBundle {
    std::optional<double> v1; // absent when the batch carries no sensitive labels
    double v2 = 0.0;
    double v3 = 0.0;
    double encoder_total = 0.0;
};

// ---------------------------------------------------------------------------
// Losses on the tape

/// Mean over labeled rows of -log_softmax(logits)[label]; rows labeled
/// data::kAbsent are skipped. Throws if no row is labeled.
[[nodiscard]] inline ad::Var cross_entropy(ad::Var logits, std::span<const int> labels)
{
    const Matrix& lv = logits.tape->value(logits);
    if (labels.size() != lv.rows()) {
        throw std::invalid_argument("cross_entropy: shape mismatch " + shape_string(lv) + " vs " +
                                    std::to_string(labels.size()) + " labels");
    }
    std::size_t count = 0;
    for (int y : labels) {
        if (y == data::kAbsent) continue;
        if (y < 0 || static_cast<std::size_t>(y) >= lv.cols()) {
            throw std::invalid_argument("cross_entropy: label " + std::to_string(y) + " out of range [0, " +
                                        std::to_string(lv.cols()) + ")");
        }
        ++count;
    }
    if (count == 0) throw std::invalid_argument("cross_entropy: no labeled rows");
    Matrix weights(lv.rows(), lv.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != data::kAbsent) weights(i, static_cast<std::size_t>(labels[i])) = -1.0 / static_cast<double>(count);
    }
    ad::Tape& t = *logits.tape;
    return ad::sum(ad::mul(ad::log_softmax(logits), t.constant(std::move(weights))));
}

/// Mean over rows of KL(softmax(logits) || uniform) = ln m - H(q).
[[nodiscard]] inline ad::Var kl_to_uniform(ad::Var logits)
{
    const Matrix& lv = logits.tape->value(logits);
    if (lv.cols() < 2) throw std::invalid_argument("kl_to_uniform: shape mismatch " + shape_string(lv) + " needs m >= 2");
    if (lv.rows() == 0) throw std::invalid_argument("kl_to_uniform: empty batch");
    // recording new nodes may move lv
    const auto rows = static_cast<double>(lv.rows()), cols = static_cast<double>(lv.cols());
    const ad::Var ls = ad::log_softmax(logits);
    const ad::Var neg_h = ad::sum(ad::mul(ad::exp(ls), ls));
    return ad::shift(ad::scale(neg_h, 1.0 / rows), std::log(cols));
}

// Tape-free counterparts for evaluation.

[[nodiscard]] inline double cross_entropy(const Matrix& logits, std::span<const int> labels)
{
    ad::Tape t;
    return t.scalar(cross_entropy(t.constant(logits), labels));
}

[[nodiscard]] inline double kl_to_uniform(const Matrix& logits)
{
    ad::Tape t;
    return t.scalar(kl_to_uniform(t.constant(logits)));
}

struct LossGraph {
    nn::BoundParams encoder, predictor, discriminator;
    ad::Var z, target_logits, disc_logits;
    std::optional<ad::Var> v1;
    ad::Var v2, v3, encoder_total;
};

[[nodiscard]] inline bool any_labeled(std::span<const int> labels)
{
    return std::any_of(labels.begin(), labels.end(), [](int s) { return s != data::kAbsent; });
}

/// Records the forward pass of all three players and their losses.
[[nodiscard]] inline LossGraph build_losses(ad::Tape& tape, const ArlConfig& cfg, const Players& players,
                                            const Matrix& x, std::span<const int> t, std::span<const int> s)
{
    if (cfg.variant == Variant::ml &&
        std::any_of(s.begin(), s.end(), [](int v) { return v == data::kAbsent; })) {
        throw std::invalid_argument("compute_losses: variant=ml requires a sensitive label on every row");
    }
    LossGraph g;
    g.encoder = players.encoder.bind(tape);
    g.predictor = players.predictor.bind(tape);
    g.discriminator = players.discriminator.bind(tape);
    const ad::Var input = tape.constant(x);
    g.z = players.encoder.forward(g.encoder, input);
    g.target_logits = players.predictor.forward(g.predictor, g.z);
    g.disc_logits = players.discriminator.forward(g.discriminator, g.z);
    if (any_labeled(s)) g.v1 = cross_entropy(g.disc_logits, s);
    g.v2 = cross_entropy(g.target_logits, t);
    g.v3 = kl_to_uniform(g.disc_logits);
    if (cfg.variant == Variant::maxent) {
        g.encoder_total = ad::add(g.v2, ad::scale(g.v3, cfg.alpha));
    } else {
        g.encoder_total = ad::sub(g.v2, ad::scale(*g.v1, cfg.alpha));
    }
    return g;
}

[[nodiscard]] inline LossBundle read_losses(const ad::Tape& tape, const LossGraph& g)
{
    LossBundle b;
    if (g.v1) b.v1 = tape.scalar(*g.v1);
    b.v2 = tape.scalar(g.v2);
    b.v3 = tape.scalar(g.v3);
    b.encoder_total = tape.scalar(g.encoder_total);
    return b;
}

[[nodiscard]] inline LossBundle compute_losses(const ArlConfig& cfg, const Players& players, const Matrix& x,
                                               std::span<const int> t, std::span<const int> s)
{
    ad::Tape tape;
    return read_losses(tape, build_losses(tape, cfg, players, x, t, s));
}

[[nodiscard]] inline LossBundle compute_losses(const ArlConfig& cfg, const Players& players, const data::Dataset& batch)
{
    return compute_losses(cfg, players, batch.features, batch.target, batch.sensitive);
}

// ---------------------------------------------------------------------------
// Training

struct ArlState {
    Players players;
    nn::Optimizer encoder_opt;
    nn::Optimizer predictor_opt;
    nn::Optimizer discriminator_opt;
};

[[nodiscard]] inline ArlState make_state(const ArlConfig& cfg, Players players)
{
    ArlState st{std::move(players), {}, {}, {}};
    st.encoder_opt = nn::Optimizer(cfg.encoder_opt, st.players.encoder.params());
    st.predictor_opt = nn::Optimizer(cfg.predictor_opt, st.players.predictor.params());
    st.discriminator_opt = nn::Optimizer(cfg.discriminator_opt, st.players.discriminator.params());
    return st;
}

namespace detail {
inline void check_finite(const LossBundle& b)
{
    const bool ok = std::isfinite(b.v2) && std::isfinite(b.v3) && std::isfinite(b.encoder_total) &&
                    (!b.v1 || std::isfinite(*b.v1));
    if (!ok) throw nn::NumericError("train_step: non-finite loss");
}
} // namespace detail

/// Per-player gradients of their own losses at one joint parameter point.
struct PlayerGrads {
    std::vector<Matrix> encoder, predictor;
    std::optional<std::vector<Matrix>> discriminator; // absent without sensitive labels
};

[[nodiscard]] inline PlayerGrads player_gradients(ad::Tape& tape, const LossGraph& g)
{
    PlayerGrads out;
    if (g.v1) {
        tape.backward(*g.v1);
        out.discriminator = nn::collect_grads(tape, g.discriminator);
        tape.zero_grad();
    }
    // T's gradient of encoder_total equals its gradient of v2: neither v1
    // nor v3 depends on T.
    tape.backward(g.encoder_total);
    out.encoder = nn::collect_grads(tape, g.encoder);
    out.predictor = nn::collect_grads(tape, g.predictor);
    return out;
}

/// All three gradients at the same parameter point, then all players step.
inline LossBundle train_step_simultaneous(const ArlConfig& cfg, ArlState& st, const Matrix& x,
                                          std::span<const int> t, std::span<const int> s)
{
    ad::Tape tape;
    const LossGraph g = build_losses(tape, cfg, st.players, x, t, s);
    const LossBundle losses = read_losses(tape, g);
    detail::check_finite(losses);
    PlayerGrads grads = player_gradients(tape, g);
    if (grads.discriminator) st.discriminator_opt.step(st.players.discriminator.params(), *grads.discriminator);
    st.predictor_opt.step(st.players.predictor.params(), grads.predictor);
    st.encoder_opt.step(st.players.encoder.params(), grads.encoder);
    return losses;
}

/// D steps first; E and T then step against the updated D.
inline LossBundle train_step_alternating(const ArlConfig& cfg, ArlState& st, const Matrix& x,
                                         std::span<const int> t, std::span<const int> s)
{
    LossBundle losses;
    {
        ad::Tape tape;
        const LossGraph g = build_losses(tape, cfg, st.players, x, t, s);
        losses = read_losses(tape, g);
        detail::check_finite(losses);
        if (g.v1) {
            tape.backward(*g.v1);
            st.discriminator_opt.step(st.players.discriminator.params(), nn::collect_grads(tape, g.discriminator));
        }
    }
    ad::Tape tape;
    const LossGraph g = build_losses(tape, cfg, st.players, x, t, s);
    detail::check_finite(read_losses(tape, g));
    tape.backward(g.encoder_total);
    st.predictor_opt.step(st.players.predictor.params(), nn::collect_grads(tape, g.predictor));
    st.encoder_opt.step(st.players.encoder.params(), nn::collect_grads(tape, g.encoder));
    return losses;
}

inline LossBundle train_step(const ArlConfig& cfg, ArlState& st, const data::Dataset& batch)
{
    return cfg.update == UpdateMode::simultaneous
               ? train_step_simultaneous(cfg, st, batch.features, batch.target, batch.sensitive)
               : train_step_alternating(cfg, st, batch.features, batch.target, batch.sensitive);
}

struct EpochMetrics {
    int epoch = 0;
    double v1 = std::numeric_limits<double>::quiet_NaN();
    double v2 = 0.0;
    double v3 = 0.0;
    double target_acc = 0.0;
    double disc_acc = std::numeric_limits<double>::quiet_NaN();
    double disc_entropy = 0.0; // nats
};

/// Full-dataset metrics of the current players (tape-free).
[[nodiscard]] inline EpochMetrics evaluate_players(const Players& p, const data::Dataset& ds)
{
    EpochMetrics m;
    const Matrix z = p.encoder.predict(ds.features);
    const Matrix tl = p.predictor.predict(z);
    const Matrix dl = p.discriminator.predict(z);
    m.v2 = cross_entropy(tl, ds.target);
    m.v3 = kl_to_uniform(dl);
    m.target_acc = eval::accuracy(eval::argmax_rows(tl), ds.target);
    m.disc_entropy = eval::mean_entropy(kernel::softmax(dl));
    if (any_labeled(ds.sensitive)) {
        m.v1 = cross_entropy(dl, ds.sensitive);
        std::vector<int> pred, lab;
        const auto d_pred = eval::argmax_rows(dl);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.sensitive[i] == data::kAbsent) continue;
            pred.push_back(d_pred[i]);
            lab.push_back(ds.sensitive[i]);
        }
        m.disc_acc = eval::accuracy(pred, lab);
    }
    return m;
}

inline void write_metrics_header(std::ostream& os) { os << "epoch,v1,v2,v3,target_acc,disc_acc,disc_entropy_nats\n"; }

inline void write_metrics_row(std::ostream& os, const EpochMetrics& m)
{
    auto cell = [&os](double v) {
        if (std::isfinite(v)) os << std::setprecision(17) << v;
    };
    os << m.epoch << ',';
    cell(m.v1);
    os << ',';
    cell(m.v2);
    os << ',';
    cell(m.v3);
    os << ',';
    cell(m.target_acc);
    os << ',';
    cell(m.disc_acc);
    os << ',';
    cell(m.disc_entropy);
    os << '\n';
}

struct TrainResult {
    ArlState state;
    std::vector<EpochMetrics> log; // entry 0 is the untrained state
};

/// Epochs of shuffled mini-batches; logs full-training-set metrics after
/// each epoch.
[[nodiscard]] inline TrainResult train_arl(const ArlConfig& cfg, const Architecture& arch, const data::Dataset& train,
                                           const std::function<void(const EpochMetrics&)>& on_epoch = {})
{
    cfg.validate();
    train.validate();
    if (train.size() == 0) throw std::invalid_argument("train_arl: empty dataset");
    if (train.n_classes > cfg.n_classes || train.m_classes > cfg.m_classes) {
        throw std::invalid_argument("train_arl: dataset class counts exceed ArlConfig n/m");
    }
    if (cfg.variant == Variant::ml && !train.has_all_sensitive()) {
        throw std::invalid_argument("train_arl: variant=ml requires sensitive labels on every row");
    }
    TrainResult r{make_state(cfg, make_players(arch, train.dim(), cfg)), {}};
    EpochMetrics m0 = evaluate_players(r.state.players, train);
    m0.epoch = 0;
    r.log.push_back(m0);
    if (on_epoch) on_epoch(m0);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto order = data::batches(train.size(), cfg.batch_size, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
        for (const auto& rows : order) {
            train_step(cfg, r.state, data::subset(train, rows));
        }
        EpochMetrics m = evaluate_players(r.state.players, train);
        m.epoch = epoch;
        if (!std::isfinite(m.v2) || !std::isfinite(m.v3)) throw nn::NumericError("train_arl: non-finite metrics");
        r.log.push_back(m);
        if (on_epoch) on_epoch(m);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Supervised classifier fitting with early stopping (post-hoc adversary and
// frozen-encoder discriminator).

struct ClassifierFit {
    nn::Mlp model;
    int epochs_run = 0;
    double best_validation_ce = std::numeric_limits<double>::infinity();
};

struct FitOptions {
    nn::OptimizerSettings optimizer{nn::OptimizerKind::adam, 1e-3};
    std::size_t batch_size = 64;
    int patience = 20;
    int max_epochs = 300;
    double validation_fraction = 0.2; // 0 disables early stopping
    std::uint64_t seed = 0;
};

/// Trains `model` on (x, labels) by descent on cross-entropy. With a
/// validation split, stops after `patience` epochs without improvement in
/// validation CE and restores the best weights.
[[nodiscard]] inline ClassifierFit fit_classifier(nn::Mlp model, const Matrix& x, std::span<const int> labels,
                                                  const FitOptions& opt)
{
    if (x.rows() != labels.size() || x.rows() == 0) throw std::invalid_argument("fit_classifier: bad inputs");
    data::Dataset all;
    all.features = x;
    all.target.assign(labels.begin(), labels.end());
    all.sensitive.assign(labels.size(), data::kAbsent);
    all.n_classes = static_cast<int>(model.spec().output_dim);
    data::Dataset train = all, val;
    const bool early = opt.validation_fraction > 0.0;
    if (early) {
        auto [tr, va] = data::split(all, 1.0 - opt.validation_fraction, derive_seed(opt.seed, 7));
        train = std::move(tr);
        val = std::move(va);
    }
    nn::Optimizer optim(opt.optimizer, model.params());
    ClassifierFit fit{model, 0, std::numeric_limits<double>::infinity()};
    int since_best = 0;
    for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
        for (const auto& rows : data::batches(train.size(), opt.batch_size, derive_seed(opt.seed, 100 + static_cast<std::uint64_t>(epoch)))) {
            const data::Dataset b = data::subset(train, rows);
            ad::Tape tape;
            const auto bound = model.bind(tape);
            const ad::Var loss = cross_entropy(model.forward(bound, tape.constant(b.features)), b.target);
            if (!std::isfinite(tape.scalar(loss))) throw nn::NumericError("fit_classifier: non-finite loss");
            tape.backward(loss);
            optim.step(model.params(), nn::collect_grads(tape, bound));
        }
        fit.epochs_run = epoch;
        if (!early) {
            fit.model = model;
            continue;
        }
        const double ce = cross_entropy(model.predict(val.features), val.target);
        if (ce < fit.best_validation_ce) {
            fit.best_validation_ce = ce;
            fit.model = model;
            since_best = 0;
        } else if (++since_best >= opt.patience) {
            break;
        }
    }
    return fit;
}

enum class AdversaryKind { mlp, logistic };

struct AdversarySpec {
    AdversaryKind kind = AdversaryKind::mlp;
    std::vector<std::size_t> hidden{64, 64};
    nn::Activation activation = nn::Activation::relu;
    FitOptions fit;
};

struct AdversaryResult {
    nn::Mlp adversary;
    double test_accuracy = 0.0; // percent
    double test_entropy = 0.0;  // nats
    int epochs_run = 0;
    double best_validation_ce = 0.0;
};

/// Trains a fresh classifier A on (E(x), s) with E frozen and evaluates it on
/// the held-out set.
[[nodiscard]] inline AdversaryResult train_adversary(const nn::Mlp& encoder, const AdversarySpec& spec,
                                                     const data::Dataset& train, const data::Dataset& test)
{
    if (!train.has_all_sensitive() || !test.has_all_sensitive()) {
        throw std::invalid_argument("train_adversary: sensitive labels required on every row");
    }
    if (train.size() == 0 || test.size() == 0) throw std::invalid_argument("train_adversary: empty dataset");
    const Matrix z_train = encoder.predict(train.features);
    const Matrix z_test = encoder.predict(test.features);
    nn::MlpSpec ms{encoder.spec().output_dim,
                   spec.kind == AdversaryKind::mlp ? spec.hidden : std::vector<std::size_t>{},
                   static_cast<std::size_t>(train.m_classes), spec.activation, derive_seed(spec.fit.seed, 11)};
    ClassifierFit fit = fit_classifier(nn::Mlp(nn::Role::adversary, ms), z_train, train.sensitive, spec.fit);
    const Matrix logits = fit.model.predict(z_test);
    AdversaryResult r;
    r.test_accuracy = eval::accuracy(eval::argmax_rows(logits), test.sensitive);
    r.test_entropy = eval::mean_entropy(kernel::softmax(logits));
    r.epochs_run = fit.epochs_run;
    r.best_validation_ce = fit.best_validation_ce;
    r.adversary = std::move(fit.model);
    return r;
}

/// Accuracy (percent) of the frozen T o E on a dataset.
[[nodiscard]] inline double target_accuracy(const Players& p, const data::Dataset& ds)
{
    return eval::accuracy(eval::argmax_rows(p.predictor.predict(p.encoder.predict(ds.features))), ds.target);
}

} // namespace arl
