#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arl/datasets.hpp"
#include "arl/matrix.hpp"

namespace arl::eval {

// ---------------------------------------------------------------------------
// Classification metrics

[[nodiscard]] inline std::vector<int> argmax_rows(const Matrix& scores)
{
    std::vector<int> out(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        const auto r = scores.row(i);
        out[i] = static_cast<int>(std::distance(r.begin(), std::max_element(r.begin(), r.end())));
    }
    return out;
}

/// Percentage of positions where prediction equals label.
[[nodiscard]] inline double accuracy(std::span<const int> predictions, std::span<const int> labels)
{
    if (predictions.empty()) throw std::invalid_argument("accuracy: empty input");
    if (predictions.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
    return 100.0 * static_cast<double>(hits) / static_cast<double>(labels.size());
}

/// Shannon entropy of one probability row, in nats (0 log 0 = 0).
[[nodiscard]] inline double entropy(std::span<const double> probs)
{
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

[[nodiscard]] inline double mean_entropy(const Matrix& probs)
{
    if (probs.rows() == 0) throw std::invalid_argument("mean_entropy: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) s += entropy(probs.row(i));
    return s / static_cast<double>(probs.rows());
}

// ---------------------------------------------------------------------------
// Trade-off points and fronts

enum class Direction { maximize, minimize };

struct Objectives {
    Direction x = Direction::maximize;
    Direction y = Direction::minimize;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

/// Percentages in [0, 100], entropy in nats. A quantity that was not
/// measured is NaN.
struct TradeoffPoint {
    double target_acc = std::numeric_limits<double>::quiet_NaN();
    double adv_acc = std::numeric_limits<double>::quiet_NaN();
    double adv_entropy = std::numeric_limits<double>::quiet_NaN();
    std::string variant;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
};

enum class ObjectivePair {
    accuracy, // maximize target_acc, minimize adv_acc
    entropy,  // maximize target_acc, maximize adv_entropy
};

[[nodiscard]] inline Objectives directions(ObjectivePair pair)
{
    return pair == ObjectivePair::accuracy ? Objectives{Direction::maximize, Direction::minimize}
                                           : Objectives{Direction::maximize, Direction::maximize};
}

[[nodiscard]] inline Point2 project(const TradeoffPoint& p, ObjectivePair pair)
{
    return {p.target_acc, pair == ObjectivePair::accuracy ? p.adv_acc : p.adv_entropy};
}

namespace detail {
inline double oriented(double v, Direction d) { return d == Direction::maximize ? v : -v; }
} // namespace detail

/// True when `a` is at least as good as `b` on both axes and strictly better
/// on one.
[[nodiscard]] inline bool dominates(const Point2& a, const Point2& b, Objectives dirs)
{
    const double ax = detail::oriented(a.x, dirs.x), bx = detail::oriented(b.x, dirs.x);
    const double ay = detail::oriented(a.y, dirs.y), by = detail::oriented(b.y, dirs.y);
    return ax >= bx && ay >= by && (ax > bx || ay > by);
}

/// Indices (in input order) of points not dominated by any other point.
/// Exact duplicates keep their first occurrence only.
[[nodiscard]] inline std::vector<std::size_t> nondominated_indices(std::span<const Point2> pts, Objectives dirs)
{
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool drop = false;
        for (std::size_t j = 0; j < pts.size() && !drop; ++j) {
            if (j == i) continue;
            drop = dominates(pts[j], pts[i], dirs) || (j < i && pts[j] == pts[i]);
        }
        if (!drop) keep.push_back(i);
    }
    return keep;
}

[[nodiscard]] inline std::vector<Point2> nondominated(std::span<const Point2> pts, Objectives dirs)
{
    std::vector<Point2> out;
    for (std::size_t i : nondominated_indices(pts, dirs)) out.push_back(pts[i]);
    return out;
}

struct Front {
    ObjectivePair pair = ObjectivePair::accuracy;
    int m_classes = 2;
    std::vector<TradeoffPoint> points;
};

[[nodiscard]] inline Front nondominated(std::span<const TradeoffPoint> pts, ObjectivePair pair, int m_classes)
{
    std::vector<Point2> proj;
    proj.reserve(pts.size());
    for (const auto& p : pts) proj.push_back(project(p, pair));
    Front f;
    f.pair = pair;
    f.m_classes = m_classes;
    for (std::size_t i : nondominated_indices(proj, directions(pair))) f.points.push_back(pts[i]);
    return f;
}

/// Maps accuracies onto [0, 1] (divide by 100) and entropy onto [0, 1]
/// (divide by ln m).
[[nodiscard]] inline std::vector<Point2> normalize(std::span<const TradeoffPoint> pts, ObjectivePair pair,
                                                   int m_classes)
{
    if (m_classes < 2) throw std::invalid_argument("normalize: m must be >= 2");
    const double ceiling = std::log(static_cast<double>(m_classes));
    std::vector<Point2> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
        Point2 q = project(p, pair);
        if (!std::isfinite(q.x) || !std::isfinite(q.y)) {
            throw std::invalid_argument("normalize: missing objective value");
        }
        q.x /= 100.0;
        if (pair == ObjectivePair::accuracy) {
            q.y /= 100.0;
        } else {
            if (q.y > ceiling + 1e-9) {
                throw std::invalid_argument("normalize: adversary entropy " + std::to_string(q.y) +
                                            " exceeds ln m = " + std::to_string(ceiling));
            }
            q.y = std::min(q.y / ceiling, 1.0);
        }
        out.push_back(q);
    }
    return out;
}

/// Area of the unit box dominated by the points, relative to the worst
/// corner (x = 0 for a maximized x; y = 1 for a minimized y, y = 0 for a
/// maximized y). Sorted staircase sweep.
[[nodiscard]] inline double hypervolume_2d(std::span<const Point2> pts, Objectives dirs)
{
    constexpr double slack = 1e-12;
    std::vector<Point2> up; // both axes oriented to "larger is better", reference (0, 0)
    up.reserve(pts.size());
    for (const auto& p : pts) {
        if (!(p.x >= -slack && p.x <= 1.0 + slack && p.y >= -slack && p.y <= 1.0 + slack)) {
            throw std::invalid_argument("hypervolume_2d: point (" + std::to_string(p.x) + ", " +
                                        std::to_string(p.y) + ") is not normalized to the unit box");
        }
        const double x = std::clamp(dirs.x == Direction::maximize ? p.x : 1.0 - p.x, 0.0, 1.0);
        const double y = std::clamp(dirs.y == Direction::maximize ? p.y : 1.0 - p.y, 0.0, 1.0);
        up.push_back({x, y});
    }
    std::sort(up.begin(), up.end(), [](const Point2& a, const Point2& b) {
        return a.x != b.x ? a.x > b.x : a.y > b.y;
    });
    double area = 0.0;
    double best_y = 0.0;
    for (const auto& p : up) {
        if (p.y > best_y) {
            area += p.x * (p.y - best_y);
            best_y = p.y;
        }
    }
    return area;
}

[[nodiscard]] inline double hypervolume(const Front& front)
{
    const auto norm = normalize(front.points, front.pair, front.m_classes);
    return hypervolume_2d(norm, directions(front.pair));
}

[[nodiscard]] inline std::string to_string(ObjectivePair p)
{
    return p == ObjectivePair::accuracy ? "accuracy" : "entropy";
}

[[nodiscard]] inline ObjectivePair parse_objective_pair(const std::string& s)
{
    if (s == "accuracy") return ObjectivePair::accuracy;
    if (s == "entropy") return ObjectivePair::entropy;
    throw std::invalid_argument("unknown objective pair '" + s + "' (expected accuracy|entropy)");
}

// ---------------------------------------------------------------------------
// Trade-off CSV: variant,alpha,seed,target_acc,adv_acc,adv_entropy
// Empty cells are unmeasured quantities.

inline void write_tradeoff_header(std::ostream& os) { os << "variant,alpha,seed,target_acc,adv_acc,adv_entropy\n"; }

inline void write_tradeoff_row(std::ostream& os, const TradeoffPoint& p)
{
    auto cell = [&os](double v) {
        if (std::isfinite(v)) os << std::setprecision(17) << v;
    };
    os << p.variant << ',';
    cell(p.alpha);
    os << ',' << p.seed << ',';
    cell(p.target_acc);
    os << ',';
    cell(p.adv_acc);
    os << ',';
    cell(p.adv_entropy);
    os << '\n';
}

/// Reads rows written by write_tradeoff_row. Columns are matched by header
/// name; extra columns are ignored. Malformed rows name file:line.
[[nodiscard]] inline std::vector<TradeoffPoint> read_tradeoff_csv(std::istream& is, const std::string& source)
{
    const data::CsvTable t = data::parse_csv(is, source);
    auto col = [&](const char* name, bool required) -> std::ptrdiff_t {
        const auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it == t.header.end()) {
            if (required) throw data::CsvError(source + ":1: missing column '" + name + "'");
            return -1;
        }
        return std::distance(t.header.begin(), it);
    };
    const auto c_var = col("variant", false), c_alpha = col("alpha", false), c_seed = col("seed", false);
    const auto c_t = col("target_acc", true), c_a = col("adv_acc", false), c_h = col("adv_entropy", false);
    if (c_a < 0 && c_h < 0) throw data::CsvError(source + ":1: need adv_acc or adv_entropy");
    std::vector<TradeoffPoint> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string where = source + ":" + std::to_string(t.line_numbers[r]);
        auto num = [&](std::ptrdiff_t c, const char* name) {
            if (c < 0 || row[static_cast<std::size_t>(c)].empty()) return std::numeric_limits<double>::quiet_NaN();
            const std::string& v = row[static_cast<std::size_t>(c)];
            char* end = nullptr;
            const double x = std::strtod(v.c_str(), &end);
            if (end == v.c_str() || *end != '\0' || !std::isfinite(x)) {
                throw data::CsvError(where + ": bad " + std::string(name) + " value '" + v + "'");
            }
            return x;
        };
        TradeoffPoint p;
        if (c_var >= 0) p.variant = row[static_cast<std::size_t>(c_var)];
        p.alpha = num(c_alpha, "alpha");
        if (const double sd = num(c_seed, "seed"); std::isfinite(sd)) {
            if (sd < 0 || sd != std::floor(sd)) throw data::CsvError(where + ": bad seed value");
            p.seed = static_cast<std::uint64_t>(sd);
        }
        p.target_acc = num(c_t, "target_acc");
        p.adv_acc = num(c_a, "adv_acc");
        p.adv_entropy = num(c_h, "adv_entropy");
        if (!std::isfinite(p.target_acc)) throw data::CsvError(where + ": target_acc is required");
        auto pct = [&](double v, const char* name) {
            if (std::isfinite(v) && (v < 0.0 || v > 100.0)) {
                throw data::CsvError(where + ": " + std::string(name) + " outside [0, 100]");
            }
        };
        pct(p.target_acc, "target_acc");
        pct(p.adv_acc, "adv_acc");
        if (std::isfinite(p.adv_entropy) && p.adv_entropy < 0.0) throw data::CsvError(where + ": negative adv_entropy");
        out.push_back(std::move(p));
    }
    return out;
}

/// Retained points followed by a summary line "# hv=<value> ...".
inline void write_front_report(std::ostream& os, const Front& front, double hv, std::size_t n_input)
{
    write_tradeoff_header(os);
    for (const auto& p : front.points) write_tradeoff_row(os, p);
    os << "# objective=" << to_string(front.pair) << " m=" << front.m_classes << " input_points=" << n_input
       << " retained=" << front.points.size() << " hv=" << std::setprecision(10) << hv << '\n';
}

} // namespace arl::eval
