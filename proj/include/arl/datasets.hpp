#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "arl/matrix.hpp"

namespace arl::data {

inline constexpr int kAbsent = -1;

enum class Split { train, test };

/// Feature matrix with per-row target label t in [0, n) and sensitive label
/// s in [0, m) or kAbsent.
struct Dataset {
    Matrix features;
    std::vector<int> target;
    std::vector<int> sensitive;
    int n_classes = 2;
    int m_classes = 2;
    Split split = Split::train;
    std::string provenance;
    std::vector<std::string> feature_names;

    [[nodiscard]] std::size_t size() const noexcept { return target.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return features.cols(); }

    [[nodiscard]] bool has_all_sensitive() const
    {
        return std::none_of(sensitive.begin(), sensitive.end(), [](int s) { return s == kAbsent; });
    }

    void validate() const
    {
        if (features.rows() != target.size() || sensitive.size() != target.size()) {
            throw std::invalid_argument("Dataset: row count mismatch between features and labels");
        }
        for (int t : target) {
            if (t < 0 || t >= n_classes) throw std::invalid_argument("Dataset: target label out of range");
        }
        for (int s : sensitive) {
            if (s != kAbsent && (s < 0 || s >= m_classes)) {
                throw std::invalid_argument("Dataset: sensitive label out of range");
            }
        }
        if (!all_finite(features)) throw std::invalid_argument("Dataset: non-finite feature value");
    }
};

[[nodiscard]] inline Dataset subset(const Dataset& ds, std::span<const std::size_t> rows)
{
    Dataset out;
    out.features = Matrix(rows.size(), ds.dim());
    out.target.reserve(rows.size());
    out.sensitive.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = ds.features.row(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.target.push_back(ds.target[rows[i]]);
        out.sensitive.push_back(ds.sensitive[rows[i]]);
    }
    out.n_classes = ds.n_classes;
    out.m_classes = ds.m_classes;
    out.split = ds.split;
    out.provenance = ds.provenance;
    out.feature_names = ds.feature_names;
    return out;
}

[[nodiscard]] inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Fisher-Yates with an explicit draw so the order does not depend on the
    // standard library's shuffle implementation.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

/// Random (train, test) row partition; train gets round(fraction * n) rows.
[[nodiscard]] inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, double fraction, std::uint64_t seed)
{
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("split: fraction must lie in (0, 1)");
    }
    auto idx = shuffled_indices(n, seed);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

[[nodiscard]] inline std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed)
{
    auto [tr, te] = split_indices(ds.size(), fraction, seed);
    Dataset train = subset(ds, tr);
    Dataset test = subset(ds, te);
    train.split = Split::train;
    test.split = Split::test;
    return {std::move(train), std::move(test)};
}

/// Shuffled mini-batches of row indices; the last partial batch is kept.
[[nodiscard]] inline std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                                                   std::uint64_t seed)
{
    if (batch_size == 0) throw std::invalid_argument("batches: batch_size must be >= 1");
    const auto idx = shuffled_indices(n, seed);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start),
                         idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian mixture

struct MixtureConfig {
    std::vector<std::array<double, 2>> means{{1.0, 1.0}, {2.0, 1.5}, {1.5, 2.5}, {2.5, 3.0}};
    double sigma = 0.3;
    std::size_t samples_per_component = 1000;
    std::uint64_t seed = 0;
    /// (shape, color) = (target, sensitive) per component.
    std::vector<std::array<int, 2>> attributes{{0, 0}, {1, 0}, {0, 1}, {1, 1}};

    void validate() const
    {
        if (!(sigma > 0.0)) throw std::invalid_argument("MixtureConfig: sigma must be positive");
        if (means.empty()) throw std::invalid_argument("MixtureConfig: no components");
        if (attributes.size() != means.size()) {
            throw std::invalid_argument("MixtureConfig: one (shape, color) pair per component required");
        }
        for (std::size_t i = 0; i < means.size(); ++i) {
            for (std::size_t j = i + 1; j < means.size(); ++j) {
                if (means[i] == means[j]) throw std::invalid_argument("MixtureConfig: duplicate means");
            }
        }
        for (const auto& a : attributes) {
            if (a[0] < 0 || a[1] < 0) throw std::invalid_argument("MixtureConfig: negative attribute label");
        }
    }
};

/// Draws samples_per_component points from each isotropic component, in a
/// seeded random order. t = shape, s = color.
[[nodiscard]] inline Dataset gen_mixture(const MixtureConfig& cfg)
{
    cfg.validate();
    const std::size_t k = cfg.means.size();
    const std::size_t n = k * cfg.samples_per_component;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, cfg.sigma);
    Matrix raw(n, 2);
    std::vector<std::size_t> comp(n);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < cfg.samples_per_component; ++i) {
            const std::size_t r = c * cfg.samples_per_component + i;
            raw(r, 0) = cfg.means[c][0] + noise(rng);
            raw(r, 1) = cfg.means[c][1] + noise(rng);
            comp[r] = c;
        }
    }
    const auto order = shuffled_indices(n, rng());
    Dataset ds;
    ds.features = Matrix(n, 2);
    int max_t = 0, max_s = 0;
    for (const auto& a : cfg.attributes) {
        max_t = std::max(max_t, a[0]);
        max_s = std::max(max_s, a[1]);
    }
    ds.n_classes = std::max(2, max_t + 1);
    ds.m_classes = std::max(2, max_s + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = order[i];
        ds.features(i, 0) = raw(r, 0);
        ds.features(i, 1) = raw(r, 1);
        ds.target.push_back(cfg.attributes[comp[r]][0]);
        ds.sensitive.push_back(cfg.attributes[comp[r]][1]);
    }
    ds.feature_names = {"x0", "x1"};
    ds.provenance = "mixture(seed=" + std::to_string(cfg.seed) + ")";
    return ds;
}

/// Writes the dataset as CSV with columns x0..x{d-1}, target, sensitive.
inline void write_csv(std::ostream& os, const Dataset& ds)
{
    os << std::setprecision(17);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        os << (j < ds.feature_names.size() ? ds.feature_names[j] : "x" + std::to_string(j)) << ',';
    }
    os << "target,sensitive\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.features.row(i)) os << v << ',';
        os << ds.target[i] << ',';
        if (ds.sensitive[i] != kAbsent) os << ds.sensitive[i];
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// CSV (RFC-4180 subset: comma separator, double-quote escaping, header row)

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line of each row
    std::string source;
};

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] inline CsvTable parse_csv(std::istream& is, const std::string& source = "<stream>")
{
    CsvTable table;
    table.source = source;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;
    std::size_t line = 1;
    std::size_t record_line = 1;
    bool header_done = false;

    auto finish_record = [&]() {
        record.push_back(std::move(field));
        field.clear();
        field_quoted = false;
        const bool blank = record.size() == 1 && record[0].empty();
        if (!blank) {
            if (!header_done) {
                table.header = std::move(record);
                header_done = true;
            } else {
                if (record.size() != table.header.size()) {
                    throw CsvError(source + ":" + std::to_string(record_line) + ": expected " +
                                   std::to_string(table.header.size()) + " fields, got " +
                                   std::to_string(record.size()));
                }
                table.rows.push_back(std::move(record));
                table.line_numbers.push_back(record_line);
            }
        }
        record.clear();
    };

    char c;
    while (is.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') {
                    is.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty() && !field_quoted) {
            in_quotes = true;
            field_quoted = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            field_quoted = false;
        } else if (c == '\r') {
            // tolerated before \n
        } else if (c == '\n') {
            finish_record();
            ++line;
            record_line = line;
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw CsvError(source + ":" + std::to_string(record_line) + ": unterminated quoted field");
    if (!field.empty() || !record.empty()) finish_record();
    if (!header_done) throw CsvError(source + ": missing header row");
    return table;
}

[[nodiscard]] inline CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError("cannot open CSV file '" + path + "'");
    return parse_csv(in, path);
}

// ---------------------------------------------------------------------------
// Schema
//
// One column per line:   <name> <role> [numeric|categorical] [c1,c2,...]
// roles: feature | target | sensitive | drop.  Options:
//   option missing <token>           (repeatable; default "?" and "")
//   option unknown error|zeros
//   option include_sensitive true|false
// '#' starts a comment.

enum class ColumnRole { feature, target, sensitive, drop };
enum class ColumnKind { numeric, categorical };
enum class UnknownCategory { error, zeros };

struct ColumnSpec {
    std::string name;
    ColumnRole role = ColumnRole::feature;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<std::string> categories; // empty: inferred from training rows
};

struct Schema {
    std::vector<ColumnSpec> columns;
    std::vector<std::string> missing_tokens{"?", ""};
    UnknownCategory unknown = UnknownCategory::error;
    bool include_sensitive = false;

    [[nodiscard]] const ColumnSpec* find(const std::string& name) const
    {
        for (const auto& c : columns) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
};

[[nodiscard]] inline std::vector<std::string> split_list(const std::string& s, char sep = ',')
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

[[nodiscard]] inline Schema parse_schema(std::istream& is, const std::string& source = "<schema>")
{
    Schema schema;
    bool missing_overridden = false;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok[0] == "option") {
            if (tok.size() < 2) fail("option needs a name");
            if (tok[1] == "missing") {
                if (!missing_overridden) {
                    schema.missing_tokens.clear();
                    missing_overridden = true;
                }
                schema.missing_tokens.push_back(tok.size() > 2 ? tok[2] : "");
            } else if (tok[1] == "unknown" && tok.size() == 3) {
                if (tok[2] == "error") schema.unknown = UnknownCategory::error;
                else if (tok[2] == "zeros") schema.unknown = UnknownCategory::zeros;
                else fail("unknown policy must be error|zeros");
            } else if (tok[1] == "include_sensitive" && tok.size() == 3) {
                schema.include_sensitive = tok[2] == "true";
            } else {
                fail("unrecognized option '" + tok[1] + "'");
            }
            continue;
        }
        ColumnSpec col;
        col.name = tok[0];
        if (tok.size() < 2) fail("column '" + col.name + "' has no role");
        if (tok[1] == "feature") col.role = ColumnRole::feature;
        else if (tok[1] == "target") col.role = ColumnRole::target;
        else if (tok[1] == "sensitive") col.role = ColumnRole::sensitive;
        else if (tok[1] == "drop") col.role = ColumnRole::drop;
        else fail("unknown role '" + tok[1] + "'");
        if (col.role == ColumnRole::target || col.role == ColumnRole::sensitive) {
            col.kind = ColumnKind::categorical;
        }
        if (tok.size() >= 3) {
            if (tok[2] == "numeric") col.kind = ColumnKind::numeric;
            else if (tok[2] == "categorical") col.kind = ColumnKind::categorical;
            else fail("unknown kind '" + tok[2] + "'");
        }
        if (tok.size() >= 4) col.categories = split_list(tok[3]);
        if (tok.size() > 4) fail("too many fields for column '" + col.name + "'");
        if ((col.role == ColumnRole::target || col.role == ColumnRole::sensitive) &&
            col.kind != ColumnKind::categorical) {
            fail("target/sensitive columns must be categorical");
        }
        if (schema.find(col.name)) fail("duplicate column '" + col.name + "'");
        schema.columns.push_back(std::move(col));
    }
    int n_target = 0, n_sensitive = 0;
    for (const auto& c : schema.columns) {
        n_target += c.role == ColumnRole::target;
        n_sensitive += c.role == ColumnRole::sensitive;
    }
    if (n_target != 1) throw std::invalid_argument(source + ": exactly one target column required");
    if (n_sensitive != 1) throw std::invalid_argument(source + ": exactly one sensitive column required");
    return schema;
}

[[nodiscard]] inline Schema read_schema(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open schema file '" + path + "'");
    return parse_schema(in, path);
}

// ---------------------------------------------------------------------------
// Preprocessing

/// Encoding parameters fitted on training rows only: category lists for every
/// categorical column and mean/std for every numeric feature column.
struct Preprocessor {
    struct Column {
        std::size_t csv_index = 0;
        ColumnSpec spec;
        double mean = 0.0;
        double stddev = 1.0;
    };
    std::vector<Column> features;
    Column target;
    Column sensitive;
    UnknownCategory unknown = UnknownCategory::error;
    std::vector<std::size_t> fitted_rows; // table rows used for fitting, for audit

    [[nodiscard]] std::size_t width() const
    {
        std::size_t w = 0;
        for (const auto& c : features) w += c.spec.kind == ColumnKind::numeric ? 1 : c.spec.categories.size();
        return w;
    }
};

namespace detail {

inline double parse_number(const std::string& s, const std::string& where)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw CsvError(where + ": not a number '" + s + "'");
    }
    return v;
}

inline std::ptrdiff_t category_index(const std::vector<std::string>& cats, const std::string& v)
{
    const auto it = std::find(cats.begin(), cats.end(), v);
    return it == cats.end() ? -1 : std::distance(cats.begin(), it);
}

inline std::string where(const CsvTable& t, std::size_t row, const std::string& col)
{
    return t.source + ":" + std::to_string(t.line_numbers[row]) + " column '" + col + "'";
}

} // namespace detail

/// Rows of `table` with no missing value in any non-dropped column.
[[nodiscard]] inline std::vector<std::size_t> complete_rows(const CsvTable& table, const Schema& schema)
{
    std::vector<std::size_t> used;
    for (const auto& c : schema.columns) {
        if (c.role == ColumnRole::drop) continue;
        const auto it = std::find(table.header.begin(), table.header.end(), c.name);
        used.push_back(static_cast<std::size_t>(std::distance(table.header.begin(), it)));
    }
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        bool ok = true;
        for (std::size_t ci : used) {
            const auto& v = table.rows[r][ci];
            if (std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), v) !=
                schema.missing_tokens.end()) {
                ok = false;
                break;
            }
        }
        if (ok) keep.push_back(r);
    }
    return keep;
}

inline void check_schema_covers(const CsvTable& table, const Schema& schema)
{
    for (const auto& h : table.header) {
        if (!schema.find(h)) throw std::invalid_argument(table.source + ": column '" + h + "' not in schema");
    }
    for (const auto& c : schema.columns) {
        if (std::find(table.header.begin(), table.header.end(), c.name) == table.header.end()) {
            throw std::invalid_argument(table.source + ": schema column '" + c.name + "' missing from header");
        }
    }
}

/// Fits the preprocessor on the given (complete) rows of `table`.
[[nodiscard]] inline Preprocessor fit_preprocessor(const CsvTable& table, const Schema& schema,
                                                   std::span<const std::size_t> rows)
{
    check_schema_covers(table, schema);
    Preprocessor pre;
    pre.unknown = schema.unknown;
    pre.fitted_rows.assign(rows.begin(), rows.end());
    for (const auto& spec : schema.columns) {
        if (spec.role == ColumnRole::drop) continue;
        Preprocessor::Column col;
        col.csv_index = static_cast<std::size_t>(
            std::distance(table.header.begin(), std::find(table.header.begin(), table.header.end(), spec.name)));
        col.spec = spec;
        if (spec.kind == ColumnKind::categorical && col.spec.categories.empty()) {
            for (std::size_t r : rows) {
                const auto& v = table.rows[r][col.csv_index];
                if (detail::category_index(col.spec.categories, v) < 0) col.spec.categories.push_back(v);
            }
        }
        if (spec.kind == ColumnKind::numeric) {
            double sum = 0.0;
            for (std::size_t r : rows) sum += detail::parse_number(table.rows[r][col.csv_index], detail::where(table, r, spec.name));
            col.mean = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
            double ss = 0.0;
            for (std::size_t r : rows) {
                const double d = detail::parse_number(table.rows[r][col.csv_index], detail::where(table, r, spec.name)) - col.mean;
                ss += d * d;
            }
            col.stddev = rows.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(rows.size()));
        }
        switch (spec.role) {
        case ColumnRole::target: pre.target = col; break;
        case ColumnRole::sensitive:
            pre.sensitive = col;
            if (schema.include_sensitive) pre.features.push_back(col);
            break;
        case ColumnRole::feature: pre.features.push_back(col); break;
        case ColumnRole::drop: break;
        }
    }
    return pre;
}

/// Encodes rows: one-hot categoricals, standardized numerics (constant
/// columns map to 0).
[[nodiscard]] inline Dataset encode(const CsvTable& table, const Preprocessor& pre,
                                    std::span<const std::size_t> rows, Split split)
{
    Dataset ds;
    ds.features = Matrix(rows.size(), pre.width());
    ds.n_classes = static_cast<int>(std::max<std::size_t>(2, pre.target.spec.categories.size()));
    ds.m_classes = static_cast<int>(std::max<std::size_t>(2, pre.sensitive.spec.categories.size()));
    ds.split = split;
    ds.provenance = table.source;
    for (const auto& c : pre.features) {
        if (c.spec.kind == ColumnKind::numeric) {
            ds.feature_names.push_back(c.spec.name);
        } else {
            for (const auto& cat : c.spec.categories) ds.feature_names.push_back(c.spec.name + "=" + cat);
        }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        const auto& rec = table.rows[r];
        std::size_t off = 0;
        for (const auto& c : pre.features) {
            const auto& v = rec[c.csv_index];
            if (c.spec.kind == ColumnKind::numeric) {
                const double x = detail::parse_number(v, detail::where(table, r, c.spec.name));
                ds.features(i, off++) = c.stddev > 0.0 ? (x - c.mean) / c.stddev : 0.0;
            } else {
                const auto k = detail::category_index(c.spec.categories, v);
                if (k < 0 && pre.unknown == UnknownCategory::error) {
                    throw CsvError(detail::where(table, r, c.spec.name) + ": unknown category '" + v + "'");
                }
                if (k >= 0) ds.features(i, off + static_cast<std::size_t>(k)) = 1.0;
                off += c.spec.categories.size();
            }
        }
        auto label = [&](const Preprocessor::Column& c) {
            const auto k = detail::category_index(c.spec.categories, rec[c.csv_index]);
            if (k < 0) {
                throw CsvError(detail::where(table, r, c.spec.name) + ": unknown label '" + rec[c.csv_index] + "'");
            }
            return static_cast<int>(k);
        };
        ds.target.push_back(label(pre.target));
        ds.sensitive.push_back(label(pre.sensitive));
    }
    ds.validate();
    return ds;
}

struct PreparedData {
    Dataset train;
    Dataset test;
    Preprocessor preprocessor;
};

/// Whole file as one dataset, preprocessing fitted on all complete rows.
[[nodiscard]] inline Dataset load_csv(const std::string& path, const Schema& schema)
{
    const CsvTable table = read_csv(path);
    check_schema_covers(table, schema);
    const auto rows = complete_rows(table, schema);
    const Preprocessor pre = fit_preprocessor(table, schema, rows);
    return encode(table, pre, rows, Split::train);
}

/// Random split of one file; preprocessing fitted on the train rows only.
[[nodiscard]] inline PreparedData load_csv_split(const std::string& path, const Schema& schema, double fraction,
                                                 std::uint64_t seed)
{
    const CsvTable table = read_csv(path);
    check_schema_covers(table, schema);
    const auto rows = complete_rows(table, schema);
    auto [tr, te] = split_indices(rows.size(), fraction, seed);
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i : tr) train_rows.push_back(rows[i]);
    for (std::size_t i : te) test_rows.push_back(rows[i]);
    PreparedData out;
    out.preprocessor = fit_preprocessor(table, schema, train_rows);
    out.train = encode(table, out.preprocessor, train_rows, Split::train);
    out.test = encode(table, out.preprocessor, test_rows, Split::test);
    return out;
}

/// Published train/test partition in two files; preprocessing fitted on the
/// train file only.
[[nodiscard]] inline PreparedData load_csv_train_test(const std::string& train_path, const std::string& test_path,
                                                      const Schema& schema)
{
    const CsvTable train_table = read_csv(train_path);
    const CsvTable test_table = read_csv(test_path);
    check_schema_covers(train_table, schema);
    check_schema_covers(test_table, schema);
    if (train_table.header != test_table.header) {
        throw std::invalid_argument(test_path + ": header differs from " + train_path);
    }
    const auto train_rows = complete_rows(train_table, schema);
    const auto test_rows = complete_rows(test_table, schema);
    PreparedData out;
    out.preprocessor = fit_preprocessor(train_table, schema, train_rows);
    out.train = encode(train_table, out.preprocessor, train_rows, Split::train);
    out.test = encode(test_table, out.preprocessor, test_rows, Split::test);
    return out;
}

} // namespace arl::data
