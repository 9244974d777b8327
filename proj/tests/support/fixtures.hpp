#pragma once

// Shared builders for the unit and acceptance suites.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "arl/arl.hpp"
#include "support/oracles.hpp"

namespace arl::testing {

enum class LossTerm { v1, v2, v3, encoder_total };

inline const char* name(LossTerm l)
{
    switch (l) {
    case LossTerm::v1: return "cross_entropy(D)";
    case LossTerm::v2: return "cross_entropy(T)";
    case LossTerm::v3: return "kl_to_uniform";
    case LossTerm::encoder_total: return "encoder_total";
    }
    return "?";
}

struct RandomProblem {
    ArlConfig cfg;
    Players players;
    Matrix x;
    std::vector<int> t, s;
};

/// Small random players and batch. tanh hidden units (the default) keep the
/// losses smooth so central differences stay accurate.
inline RandomProblem random_problem(std::uint64_t seed, Variant variant,
                                    nn::Activation activation = nn::Activation::tanh)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> nd(2, 4), bd(3, 9);
    RandomProblem p;
    p.cfg.variant = variant;
    p.cfg.alpha = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    p.cfg.n_classes = nd(rng);
    p.cfg.m_classes = nd(rng);
    p.cfg.seed = seed;
    const std::size_t d = 3, b = static_cast<std::size_t>(bd(rng));
    Architecture arch;
    arch.encoder_hidden = {4};
    arch.embedding_dim = 3;
    arch.predictor_hidden = {};
    arch.discriminator_hidden = {4};
    arch.activation = activation;
    p.players = make_players(arch, d, p.cfg);
    p.x = Matrix(b, d, random_vector(rng, b * d, -1.5, 1.5));
    for (std::size_t i = 0; i < b; ++i) {
        p.t.push_back(std::uniform_int_distribution<int>(0, p.cfg.n_classes - 1)(rng));
        p.s.push_back(std::uniform_int_distribution<int>(0, p.cfg.m_classes - 1)(rng));
    }
    return p;
}

/// Smallest |pre-activation| of any hidden unit of the three players on the
/// problem's batch; ReLU kinks are at least this far away.
inline double min_hidden_margin(const RandomProblem& p)
{
    double margin = std::numeric_limits<double>::infinity();
    auto scan = [&](const nn::Mlp& m, const Matrix& in) {
        Matrix h = in;
        for (std::size_t l = 0; l < m.num_layers(); ++l) {
            Matrix pre(h.rows(), m.params()[2 * l].cols());
            for (std::size_t r = 0; r < h.rows(); ++r) {
                for (std::size_t c = 0; c < pre.cols(); ++c) {
                    double v = m.params()[2 * l + 1](0, c);
                    for (std::size_t k = 0; k < h.cols(); ++k) v += h(r, k) * m.params()[2 * l](k, c);
                    pre(r, c) = v;
                }
            }
            if (l + 1 == m.num_layers()) return pre;
            for (double& v : pre.values()) {
                margin = std::min(margin, std::abs(v));
                v = nn::apply_activation(m.spec().hidden_activation, v);
            }
            h = pre;
        }
        return h;
    };
    const Matrix z = scan(p.players.encoder, p.x);
    (void)scan(p.players.predictor, z);
    (void)scan(p.players.discriminator, z);
    return margin;
}

inline std::vector<double> flatten_players(const Players& p)
{
    std::vector<double> out;
    for (const nn::Mlp* m : {&p.encoder, &p.predictor, &p.discriminator}) {
        const auto f = m->flatten();
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

inline void assign_players(Players& p, const std::vector<double>& flat)
{
    std::size_t off = 0;
    for (nn::Mlp* m : {&p.encoder, &p.predictor, &p.discriminator}) {
        const std::size_t n = m->parameter_count();
        m->assign(std::span<const double>(flat.data() + off, n));
        off += n;
    }
}

inline ad::Var select(const LossGraph& g, LossTerm l)
{
    switch (l) {
    case LossTerm::v1: return *g.v1;
    case LossTerm::v2: return g.v2;
    case LossTerm::v3: return g.v3;
    case LossTerm::encoder_total: return g.encoder_total;
    }
    return g.v2;
}

inline double select(const LossBundle& b, LossTerm l)
{
    switch (l) {
    case LossTerm::v1: return *b.v1;
    case LossTerm::v2: return b.v2;
    case LossTerm::v3: return b.v3;
    case LossTerm::encoder_total: return b.encoder_total;
    }
    return b.v2;
}

/// Reverse-mode gradient of one loss over every parameter of all three players.
inline std::vector<double> analytic_gradient(const RandomProblem& p, LossTerm l)
{
    ad::Tape tape;
    const LossGraph g = build_losses(tape, p.cfg, p.players, p.x, p.t, p.s);
    tape.backward(select(g, l));
    std::vector<double> out;
    for (const auto* b : {&g.encoder, &g.predictor, &g.discriminator}) {
        for (const Matrix& m : nn::collect_grads(tape, *b)) out.insert(out.end(), m.values().begin(), m.values().end());
    }
    return out;
}

inline double gradient_relative_error(const RandomProblem& p, LossTerm l, double h = 1e-5)
{
    const auto analytic = analytic_gradient(p, l);
    Players work = p.players;
    auto f = [&](const std::vector<double>& flat) {
        assign_players(work, flat);
        return select(compute_losses(p.cfg, work, p.x, p.t, p.s), l);
    };
    const auto numeric = central_differences(f, flatten_players(p.players), h);
    return relative_error(analytic, numeric);
}

/// Players realizing the linear three-player game: scalar encoder weight,
/// and two-logit heads whose first logit is pinned at zero so the softmax
/// reduces to a sigmoid of the second.
inline Players linear_game_players(double w1, double w2, double w3)
{
    using nn::Mlp;
    using nn::Role;
    Players p;
    p.encoder = Mlp::from_params(Role::encoder, {1, {}, 1, nn::Activation::identity, 0},
                                 {Matrix(1, 1, w1), Matrix(1, 1, 0.0)});
    p.predictor = Mlp::from_params(Role::predictor, {1, {}, 2, nn::Activation::identity, 0},
                                   {Matrix::row_vector({0.0, w3}), Matrix(1, 2, 0.0)});
    p.discriminator = Mlp::from_params(Role::discriminator, {1, {}, 2, nn::Activation::identity, 0},
                                       {Matrix::row_vector({0.0, w2}), Matrix(1, 2, 0.0)});
    return p;
}

/// x = 1 with the four (t, s) label pairs.
inline data::Dataset linear_game_batch()
{
    data::Dataset ds;
    ds.features = Matrix(4, 1, 1.0);
    ds.target = {0, 0, 1, 1};
    ds.sensitive = {0, 1, 0, 1};
    ds.n_classes = 2;
    ds.m_classes = 2;
    return ds;
}

} // namespace arl::testing
