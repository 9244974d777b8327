#pragma once

// Linear three-player game and continuous-time gradient dynamics.
//
// State w = (w1, w2, w3): encoder, discriminator and predictor weights. The
// four samples share x = 1 and carry (t, s) in {00, 01, 10, 11}; z = w1.
//   bilinear form:  discriminator logit u = w2 * z
//   quadratic form: discriminator logit u = z^2 + w2
//   predictor logit v = w3 * z
// Each player descends its own binary cross-entropy averaged over the four
// samples; the encoder descends v2 - alpha * v1 (ml) or v2 + alpha * v3
// (maxent).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "arl/arl.hpp"
#include "arl/matrix.hpp"

namespace arl::dynamics {

using State = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;
using Field = std::function<State(const State&)>;

enum class GameForm { bilinear, quadratic };

[[nodiscard]] inline std::string to_string(GameForm f) { return f == GameForm::bilinear ? "bilinear" : "quadratic"; }

[[nodiscard]] inline GameForm parse_game_form(const std::string& s)
{
    if (s == "bilinear") return GameForm::bilinear;
    if (s == "quadratic") return GameForm::quadratic;
    throw std::invalid_argument("unknown game form '" + s + "' (expected bilinear|quadratic)");
}

struct LinearGame {
    Variant variant = Variant::maxent;
    double alpha = 1.0;
    GameForm form = GameForm::bilinear;
};

/// Player losses at w, averaged over the four samples.
struct GameLosses {
    double v1 = 0.0; // discriminator CE
    double v2 = 0.0; // predictor CE
    double v3 = 0.0; // KL(q_D || U)
    double encoder_total = 0.0;
};

namespace detail {
/// Binary CE averaged over balanced labels: -(ln sigma(a) + ln sigma(-a)) / 2.
inline double balanced_bce(double a)
{
    auto log_sigmoid = [](double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); };
    return -0.5 * (log_sigmoid(a) + log_sigmoid(-a));
}

inline double disc_logit(const LinearGame& g, const State& w)
{
    return g.form == GameForm::bilinear ? w[1] * w[0] : w[0] * w[0] + w[1];
}
} // namespace detail

[[nodiscard]] inline GameLosses losses(const LinearGame& g, const State& w)
{
    const double u = detail::disc_logit(g, w);
    const double v = w[2] * w[0];
    GameLosses l;
    l.v1 = detail::balanced_bce(u);
    l.v2 = detail::balanced_bce(v);
    const double p = kernel::sigmoid(u);
    const double q = kernel::sigmoid(-u);
    l.v3 = std::log(2.0) + (p > 0 ? p * std::log(p) : 0.0) + (q > 0 ? q * std::log(q) : 0.0);
    l.encoder_total = g.variant == Variant::maxent ? l.v2 + g.alpha * l.v3 : l.v2 - g.alpha * l.v1;
    return l;
}

/// Closed-form negative gradients (f_enc, f_disc, f_pred) of each player's
/// own loss.
[[nodiscard]] inline State field(const LinearGame& g, const State& w)
{
    const double w1 = w[0], w2 = w[1], w3 = w[2];
    const double u = detail::disc_logit(g, w);
    const double du_dw1 = g.form == GameForm::bilinear ? w2 : 2.0 * w1;
    const double du_dw2 = g.form == GameForm::bilinear ? w1 : 1.0;
    const double ps = kernel::sigmoid(u) - 0.5;
    const double pt = kernel::sigmoid(w1 * w3) - 0.5;
    double privacy;
    if (g.variant == Variant::ml) {
        privacy = -g.alpha * ps * du_dw1;
    } else {
        // d KL / du = sigma'(u) * ln(sigma(u) / (1 - sigma(u))) = sigma'(u) * u
        const double s = kernel::sigmoid(u);
        privacy = g.alpha * u * s * (1.0 - s) * du_dw1;
    }
    return {-(pt * w3 + privacy), -ps * du_dw2, -pt * w1};
}

[[nodiscard]] inline Field make_field(const LinearGame& g)
{
    return [g](const State& w) { return field(g, w); };
}

[[nodiscard]] inline double norm(const State& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

/// Central-difference Jacobian; column j holds d f / d w_j.
[[nodiscard]] inline Mat3 jacobian(const Field& f, const State& point, double h = 1e-6)
{
    if (!(h > 0.0)) throw std::invalid_argument("jacobian: step must be positive");
    Mat3 j{};
    for (std::size_t c = 0; c < 3; ++c) {
        State plus = point, minus = point;
        plus[c] += h;
        minus[c] -= h;
        const State fp = f(plus), fm = f(minus);
        for (std::size_t r = 0; r < 3; ++r) j[r][c] = (fp[r] - fm[r]) / (2.0 * h);
    }
    return j;
}

using Eigenvalues = std::array<std::complex<double>, 3>;

/// Roots of the characteristic cubic by Cardano's formula in complex
/// arithmetic, refined by two Newton steps, sorted by real part descending.
[[nodiscard]] inline Eigenvalues eigenvalues(const Mat3& m)
{
    using C = std::complex<double>;
    const double tr = m[0][0] + m[1][1] + m[2][2];
    const double minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] +
                          m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    // lambda^3 + a lambda^2 + b lambda + c
    const double a = -tr, b = minors, c = -det;
    // lambda = x - a/3  ->  x^3 + p x + q
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const C disc = std::sqrt(C(q * q / 4.0 + p * p * p / 27.0));
    C u3 = -q / 2.0 + disc;
    if (std::abs(u3) < std::abs(-q / 2.0 - disc)) u3 = -q / 2.0 - disc;
    Eigenvalues roots;
    const C omega(-0.5, std::sqrt(3.0) / 2.0);
    if (std::abs(u3) == 0.0) {
        roots = {C(0.0), C(0.0), C(0.0)};
    } else {
        C u = std::pow(u3, 1.0 / 3.0);
        for (auto& r : roots) {
            r = u - p / (3.0 * u);
            u *= omega;
        }
    }
    auto poly = [&](C l) { return ((l + a) * l + b) * l + c; };
    auto dpoly = [&](C l) { return (3.0 * l + 2.0 * a) * l + b; };
    for (auto& r : roots) {
        r -= a / 3.0;
        for (int it = 0; it < 2; ++it) {
            const C d = dpoly(r);
            if (std::abs(d) > 1e-300) {
                const C next = r - poly(r) / d;
                if (std::abs(poly(next)) < std::abs(poly(r))) r = next;
            }
        }
        if (std::abs(r.imag()) < 1e-14 * std::max(1.0, std::abs(r.real()))) r = C(r.real(), 0.0);
    }
    std::sort(roots.begin(), roots.end(), [](const C& x, const C& y) {
        return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag();
    });
    return roots;
}

enum class Stability { asymptotically_stable, unstable, inconclusive };

[[nodiscard]] inline std::string to_string(Stability s)
{
    switch (s) {
    case Stability::asymptotically_stable: return "asymptotically_stable";
    case Stability::unstable: return "unstable";
    case Stability::inconclusive: return "inconclusive";
    }
    return "?";
}

/// Linearization verdict: stable when every real part is below -tol,
/// unstable when any exceeds +tol, otherwise inconclusive.
[[nodiscard]] inline Stability classify_stability(const Eigenvalues& eigs, double tol = 1e-9)
{
    double max_re = -std::numeric_limits<double>::infinity();
    for (const auto& e : eigs) max_re = std::max(max_re, e.real());
    if (max_re > tol) return Stability::unstable;
    if (max_re < -tol) return Stability::asymptotically_stable;
    return Stability::inconclusive;
}

// ---------------------------------------------------------------------------
// Trajectories

struct IntegrateOptions {
    double dt = 0.1;
    long steps = 1000;
    std::array<bool, 3> frozen{false, false, false};
    long record_every = 1; // 0: record only start and end
    double divergence_radius = 1e3;
};

struct TrajectoryPoint {
    long step = 0;
    State w{};
    double field_norm = 0.0;
};

struct Trajectory {
    State start{};
    std::vector<TrajectoryPoint> path;
    State final_state{};
    double final_field_norm = 0.0;
    long steps_taken = 0;
    bool diverged = false;
};

using Observer = std::function<void(long step, const State& w, double field_norm)>;

/// Classical fixed-step RK4. Frozen coordinates keep their value and have
/// their field component zeroed. The observer, if any, sees every step.
[[nodiscard]] inline Trajectory integrate(const Field& f, const State& start, const IntegrateOptions& opt,
                                          const Observer& observer = {})
{
    if (!(opt.dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
    if (opt.steps < 0) throw std::invalid_argument("integrate: steps must be >= 0");
    auto masked = [&](const State& w) {
        State v = f(w);
        for (std::size_t i = 0; i < 3; ++i) {
            if (opt.frozen[i]) v[i] = 0.0;
        }
        return v;
    };
    auto axpy = [](const State& w, double h, const State& k) {
        return State{w[0] + h * k[0], w[1] + h * k[1], w[2] + h * k[2]};
    };
    Trajectory tr;
    tr.start = start;
    State w = start;
    const double dt = opt.dt;
    for (long step = 0;; ++step) {
        const State k1 = masked(w);
        const double fn = norm(k1);
        const bool last = step == opt.steps;
        if ((opt.record_every > 0 && step % opt.record_every == 0) || step == 0 || last) {
            tr.path.push_back({step, w, fn});
        }
        if (observer) observer(step, w, fn);
        if (norm(w) > opt.divergence_radius) {
            tr.diverged = true;
            tr.steps_taken = step;
            tr.final_state = w;
            tr.final_field_norm = fn;
            if (tr.path.back().step != step) tr.path.push_back({step, w, fn});
            return tr;
        }
        if (last) {
            tr.steps_taken = step;
            tr.final_state = w;
            tr.final_field_norm = fn;
            return tr;
        }
        const State k2 = masked(axpy(w, dt / 2.0, k1));
        const State k3 = masked(axpy(w, dt / 2.0, k2));
        const State k4 = masked(axpy(w, dt, k3));
        for (std::size_t i = 0; i < 3; ++i) {
            w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr)
{
    os << "step,w1,w2,w3,field_norm\n" << std::setprecision(17);
    for (const auto& p : tr.path) {
        os << p.step << ',' << p.w[0] << ',' << p.w[1] << ',' << p.w[2] << ',' << p.field_norm << '\n';
    }
}

/// Lattice coordinate i of n over [lo, hi].
[[nodiscard]] inline double lattice(double lo, double hi, int i, int n)
{
    return i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

/// Calls visit(w, f(w)) over the n^3 lattice, w1 outermost.
inline void for_each_grid_point(const Field& f, double lo, double hi, int n,
                                const std::function<void(const State&, const State&)>& visit)
{
    if (n < 2) throw std::invalid_argument("grid: n must be >= 2");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                const State w{lattice(lo, hi, i, n), lattice(lo, hi, j, n), lattice(lo, hi, k, n)};
                visit(w, f(w));
            }
        }
    }
}

/// CSV rows w1,w2,w3,f1,f2,f3 for external streamline plotting.
inline void grid_export(std::ostream& os, const Field& f, double lo = -0.01, double hi = 0.01, int n = 30)
{
    if (n < 2) throw std::invalid_argument("grid_export: n must be >= 2");
    os << "w1,w2,w3,f1,f2,f3\n" << std::setprecision(17);
    for_each_grid_point(f, lo, hi, n, [&os](const State& w, const State& v) {
        os << w[0] << ',' << w[1] << ',' << w[2] << ',' << v[0] << ',' << v[1] << ',' << v[2] << '\n';
    });
}

// ---------------------------------------------------------------------------
// Report

struct DynamicsReport {
    LinearGame game;
    State equilibrium{0.0, 0.0, 0.0};
    Mat3 jacobian{};
    Eigenvalues eigenvalues{};
    Stability verdict = Stability::inconclusive;
    Trajectory trajectory;
    IntegrateOptions integration;
    std::string grid_file;
    int grid_n = 30;
    double grid_lo = -0.01;
    double grid_hi = 0.01;
};

[[nodiscard]] inline DynamicsReport analyze(const LinearGame& game, const State& equilibrium, const State& start,
                                            const IntegrateOptions& opt)
{
    DynamicsReport r;
    r.game = game;
    r.equilibrium = equilibrium;
    const Field f = make_field(game);
    r.jacobian = jacobian(f, equilibrium);
    r.eigenvalues = eigenvalues(r.jacobian);
    r.verdict = classify_stability(r.eigenvalues);
    r.integration = opt;
    r.trajectory = integrate(f, start, opt);
    return r;
}

/// Key = value lines; vectors are space-separated, complex values "re im".
inline void write_report(std::ostream& os, const DynamicsReport& r)
{
    os << std::setprecision(17);
    auto vec = [&os](const State& v) { os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n'; };
    os << "format = arl-dynamics-report v1\n";
    os << "variant = " << to_string(r.game.variant) << '\n';
    os << "alpha = " << r.game.alpha << '\n';
    os << "game_form = " << to_string(r.game.form) << '\n';
    os << "equilibrium = ";
    vec(r.equilibrium);
    for (std::size_t i = 0; i < 3; ++i) {
        os << "jacobian.row" << i << " = ";
        vec(r.jacobian[i]);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        os << "eigenvalue" << i << " = " << r.eigenvalues[i].real() << ' ' << r.eigenvalues[i].imag() << '\n';
    }
    os << "verdict = " << to_string(r.verdict) << '\n';
    os << "trajectory.start = ";
    vec(r.trajectory.start);
    os << "trajectory.dt = " << r.integration.dt << '\n';
    os << "trajectory.steps = " << r.trajectory.steps_taken << '\n';
    os << "trajectory.frozen = " << (r.integration.frozen[0] ? "w1 " : "") << (r.integration.frozen[1] ? "w2 " : "")
       << (r.integration.frozen[2] ? "w3" : "") << '\n';
    os << "trajectory.final = ";
    vec(r.trajectory.final_state);
    os << "trajectory.final_field_norm = " << r.trajectory.final_field_norm << '\n';
    os << "trajectory.diverged = " << (r.trajectory.diverged ? "true" : "false") << '\n';
    os << "grid.file = " << r.grid_file << '\n';
    os << "grid.n = " << r.grid_n << '\n';
    os << "grid.range = " << r.grid_lo << ' ' << r.grid_hi << '\n';
}

} // namespace arl::dynamics
