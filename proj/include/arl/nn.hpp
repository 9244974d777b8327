#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "arl/autodiff.hpp"
#include "arl/matrix.hpp"

namespace arl::nn {

enum class Activation { relu, tanh, sigmoid, identity };
enum class Role { encoder, predictor, discriminator, adversary };

[[nodiscard]] inline std::string to_string(Activation a)
{
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
    }
    return "?";
}

[[nodiscard]] inline Activation parse_activation(const std::string& s)
{
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

[[nodiscard]] inline std::string to_string(Role r)
{
    switch (r) {
    case Role::encoder: return "encoder";
    case Role::predictor: return "predictor";
    case Role::discriminator: return "discriminator";
    case Role::adversary: return "adversary";
    }
    return "?";
}

[[nodiscard]] inline Role parse_role(const std::string& s)
{
    if (s == "encoder") return Role::encoder;
    if (s == "predictor") return Role::predictor;
    if (s == "discriminator") return Role::discriminator;
    if (s == "adversary") return Role::adversary;
    throw std::invalid_argument("unknown role '" + s + "'");
}

struct MlpSpec {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden_dims;
    std::size_t output_dim = 1;
    Activation hidden_activation = Activation::relu;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<std::size_t> layer_dims() const
    {
        std::vector<std::size_t> d{input_dim};
        d.insert(d.end(), hidden_dims.begin(), hidden_dims.end());
        d.push_back(output_dim);
        return d;
    }

    void validate() const
    {
        for (std::size_t d : layer_dims()) {
            if (d == 0) {
                throw std::invalid_argument("MlpSpec: all dimensions must be >= 1");
            }
        }
    }

    bool operator==(const MlpSpec&) const = default;
};

[[nodiscard]] inline double apply_activation(Activation a, double v)
{
    switch (a) {
    case Activation::relu: return kernel::relu(v);
    case Activation::tanh: return std::tanh(v);
    case Activation::sigmoid: return kernel::sigmoid(v);
    case Activation::identity: return v;
    }
    return v;
}

[[nodiscard]] inline ad::Var apply_activation(Activation a, ad::Var v)
{
    switch (a) {
    case Activation::relu: return ad::relu(v);
    case Activation::tanh: return ad::tanh(v);
    case Activation::sigmoid: return ad::sigmoid(v);
    case Activation::identity: return v;
    }
    return v;
}

/// Parameters of an MLP registered as leaves on one tape, in params() order.
struct BoundParams {
    std::vector<ad::Var> vars;
};

/// Layered affine + activation network; the last layer emits raw logits.
/// Parameters are stored as [W0, b0, W1, b1, ...] with W_i of shape
/// [in x out] and b_i of shape [1 x out].
class Mlp {
public:
    Mlp() = default;

    Mlp(Role role, MlpSpec spec) : role_(role), spec_(std::move(spec))
    {
        spec_.validate();
        std::mt19937_64 rng(spec_.seed);
        const auto dims = spec_.layer_dims();
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
            std::uniform_real_distribution<double> dist(-limit, limit);
            Matrix w(dims[l], dims[l + 1]);
            for (double& v : w.values()) v = dist(rng);
            params_.push_back(std::move(w));
            params_.emplace_back(1, dims[l + 1]);
        }
    }

    /// Builds a model from explicit tensors (checkpoint loading, tests).
    static Mlp from_params(Role role, MlpSpec spec, std::vector<Matrix> params)
    {
        Mlp m(role, spec);
        if (params.size() != m.params_.size()) {
            throw std::invalid_argument("Mlp::from_params: expected " + std::to_string(m.params_.size()) +
                                        " tensors, got " + std::to_string(params.size()));
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            kernel::require_same_shape("Mlp::from_params", m.params_[i], params[i]);
        }
        m.params_ = std::move(params);
        return m;
    }

    [[nodiscard]] Role role() const noexcept { return role_; }
    [[nodiscard]] const MlpSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t num_layers() const noexcept { return params_.size() / 2; }
    [[nodiscard]] std::vector<Matrix>& params() noexcept { return params_; }
    [[nodiscard]] const std::vector<Matrix>& params() const noexcept { return params_; }

    [[nodiscard]] std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (const Matrix& p : params_) n += p.size();
        return n;
    }

    [[nodiscard]] std::vector<double> flatten() const
    {
        std::vector<double> out;
        out.reserve(parameter_count());
        for (const Matrix& p : params_) out.insert(out.end(), p.values().begin(), p.values().end());
        return out;
    }

    void assign(std::span<const double> flat)
    {
        if (flat.size() != parameter_count()) {
            throw std::invalid_argument("Mlp::assign: expected " + std::to_string(parameter_count()) +
                                        " values, got " + std::to_string(flat.size()));
        }
        std::size_t off = 0;
        for (Matrix& p : params_) {
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                      flat.begin() + static_cast<std::ptrdiff_t>(off + p.size()), p.values().begin());
            off += p.size();
        }
    }

    BoundParams bind(ad::Tape& tape) const
    {
        BoundParams b;
        b.vars.reserve(params_.size());
        for (const Matrix& p : params_) b.vars.push_back(tape.leaf(p));
        return b;
    }

    /// Forward on the tape using previously bound parameters.
    [[nodiscard]] ad::Var forward(const BoundParams& bound, ad::Var input) const
    {
        check_input(input.tape->value(input));
        ad::Var h = input;
        const std::size_t layers = num_layers();
        for (std::size_t l = 0; l < layers; ++l) {
            h = ad::add_bias(ad::matmul(h, bound.vars[2 * l]), bound.vars[2 * l + 1]);
            if (l + 1 < layers) {
                h = apply_activation(spec_.hidden_activation, h);
            }
        }
        return h;
    }

    /// Tape-free forward; bitwise-identical to forward() on the tape.
    [[nodiscard]] Matrix predict(const Matrix& batch) const
    {
        check_input(batch);
        Matrix h = batch;
        const std::size_t layers = num_layers();
        for (std::size_t l = 0; l < layers; ++l) {
            h = kernel::add_bias(kernel::matmul(h, params_[2 * l]), params_[2 * l + 1]);
            if (l + 1 < layers) {
                const Activation a = spec_.hidden_activation;
                h = kernel::map(h, [a](double v) { return apply_activation(a, v); });
            }
        }
        return h;
    }

private:
    void check_input(const Matrix& x) const
    {
        if (x.cols() != spec_.input_dim) {
            throw std::invalid_argument(to_string(role_) + " forward: shape mismatch " + shape_string(x) +
                                        " vs input_dim " + std::to_string(spec_.input_dim));
        }
    }

    Role role_ = Role::encoder;
    MlpSpec spec_;
    std::vector<Matrix> params_;
};

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { sgd_momentum, adam };

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// First-order optimizer with per-parameter moment buffers. Weight decay is
/// decoupled: parameters are multiplied by (1 - lr * wd) before the update.
class Optimizer {
public:
    Optimizer() = default;
    Optimizer(OptimizerSettings settings, const std::vector<Matrix>& params) : settings_(settings)
    {
        for (const Matrix& p : params) {
            first_.emplace_back(p.rows(), p.cols());
            if (settings_.kind == OptimizerKind::adam) {
                second_.emplace_back(p.rows(), p.cols());
            }
        }
    }

    [[nodiscard]] const OptimizerSettings& settings() const noexcept { return settings_; }
    [[nodiscard]] long steps() const noexcept { return steps_; }

    void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads)
    {
        if (params.size() != first_.size() || grads.size() != params.size()) {
            throw std::invalid_argument("Optimizer::step: parameter/gradient count mismatch");
        }
        for (std::size_t i = 0; i < grads.size(); ++i) {
            kernel::require_same_shape("Optimizer::step", params[i], grads[i]);
            if (!all_finite(grads[i])) {
                throw NumericError("Optimizer::step: non-finite gradient in tensor " + std::to_string(i));
            }
        }
        ++steps_;
        const double lr = settings_.learning_rate;
        const double decay = 1.0 - lr * settings_.weight_decay;
        const double bc1 = 1.0 - std::pow(settings_.beta1, static_cast<double>(steps_));
        const double bc2 = 1.0 - std::pow(settings_.beta2, static_cast<double>(steps_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto p = params[i].values();
            auto g = grads[i].values();
            auto m = first_[i].values();
            if (settings_.weight_decay != 0.0) {
                for (double& v : p) v *= decay;
            }
            if (settings_.kind == OptimizerKind::sgd_momentum) {
                for (std::size_t k = 0; k < p.size(); ++k) {
                    m[k] = settings_.momentum * m[k] + g[k];
                    p[k] -= lr * m[k];
                }
            } else {
                auto v = second_[i].values();
                for (std::size_t k = 0; k < p.size(); ++k) {
                    m[k] = settings_.beta1 * m[k] + (1.0 - settings_.beta1) * g[k];
                    v[k] = settings_.beta2 * v[k] + (1.0 - settings_.beta2) * g[k] * g[k];
                    const double mhat = m[k] / bc1;
                    const double vhat = v[k] / bc2;
                    p[k] -= lr * mhat / (std::sqrt(vhat) + settings_.epsilon);
                }
            }
        }
    }

private:
    OptimizerSettings settings_;
    std::vector<Matrix> first_;
    std::vector<Matrix> second_;
    long steps_ = 0;
};

/// Gradients of the bound parameters, in params() order.
[[nodiscard]] inline std::vector<Matrix> collect_grads(const ad::Tape& tape, const BoundParams& bound)
{
    std::vector<Matrix> out;
    out.reserve(bound.vars.size());
    for (const ad::Var& v : bound.vars) out.push_back(tape.grad(v));
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
//   ARLCKPT v1
//   models <count>
//   model <role>
//   input_dim <n>
//   hidden_dims <k> <d1> ... <dk>
//   output_dim <n>
//   activation <name>
//   seed <n>
//   tensors <count>
//   tensor <rows> <cols> <v0> <v1> ...        (17 significant digits)
//   end

inline void write_checkpoint(std::ostream& os, const std::vector<const Mlp*>& models)
{
    os << "ARLCKPT v1\n";
    os << "models " << models.size() << '\n';
    os << std::setprecision(17);
    for (const Mlp* m : models) {
        const MlpSpec& s = m->spec();
        os << "model " << to_string(m->role()) << '\n';
        os << "input_dim " << s.input_dim << '\n';
        os << "hidden_dims " << s.hidden_dims.size();
        for (std::size_t d : s.hidden_dims) os << ' ' << d;
        os << '\n';
        os << "output_dim " << s.output_dim << '\n';
        os << "activation " << to_string(s.hidden_activation) << '\n';
        os << "seed " << s.seed << '\n';
        os << "tensors " << m->params().size() << '\n';
        for (const Matrix& p : m->params()) {
            os << "tensor " << p.rows() << ' ' << p.cols();
            for (double v : p.values()) os << ' ' << v;
            os << '\n';
        }
        os << "end\n";
    }
}

namespace detail {
inline void expect_key(std::istream& is, const std::string& key)
{
    std::string got;
    if (!(is >> got) || got != key) {
        throw std::runtime_error("checkpoint: expected '" + key + "', got '" + got + "'");
    }
}
template <class T>
T read_value(std::istream& is, const std::string& what)
{
    T v{};
    if (!(is >> v)) {
        throw std::runtime_error("checkpoint: malformed " + what);
    }
    return v;
}
} // namespace detail

[[nodiscard]] inline std::vector<Mlp> read_checkpoint(std::istream& is)
{
    std::string magic, version;
    std::getline(is, magic);
    if (magic != "ARLCKPT v1") {
        throw std::runtime_error("checkpoint: bad header '" + magic + "'");
    }
    detail::expect_key(is, "models");
    const auto count = detail::read_value<std::size_t>(is, "model count");
    std::vector<Mlp> out;
    for (std::size_t i = 0; i < count; ++i) {
        detail::expect_key(is, "model");
        const Role role = parse_role(detail::read_value<std::string>(is, "role"));
        MlpSpec spec;
        detail::expect_key(is, "input_dim");
        spec.input_dim = detail::read_value<std::size_t>(is, "input_dim");
        detail::expect_key(is, "hidden_dims");
        const auto k = detail::read_value<std::size_t>(is, "hidden_dims");
        for (std::size_t j = 0; j < k; ++j) spec.hidden_dims.push_back(detail::read_value<std::size_t>(is, "hidden_dims"));
        detail::expect_key(is, "output_dim");
        spec.output_dim = detail::read_value<std::size_t>(is, "output_dim");
        detail::expect_key(is, "activation");
        spec.hidden_activation = parse_activation(detail::read_value<std::string>(is, "activation"));
        detail::expect_key(is, "seed");
        spec.seed = detail::read_value<std::uint64_t>(is, "seed");
        detail::expect_key(is, "tensors");
        const auto nt = detail::read_value<std::size_t>(is, "tensor count");
        std::vector<Matrix> params;
        for (std::size_t t = 0; t < nt; ++t) {
            detail::expect_key(is, "tensor");
            const auto r = detail::read_value<std::size_t>(is, "tensor rows");
            const auto c = detail::read_value<std::size_t>(is, "tensor cols");
            Matrix m(r, c);
            for (double& v : m.values()) {
                // operator>> rejects subnormals on some libstdc++ versions; strtod does not.
                const auto tok = detail::read_value<std::string>(is, "tensor value");
                char* end = nullptr;
                v = std::strtod(tok.c_str(), &end);
                if (end == tok.c_str() || *end != '\0') {
                    throw std::runtime_error("checkpoint: malformed tensor value '" + tok + "'");
                }
            }
            params.push_back(std::move(m));
        }
        detail::expect_key(is, "end");
        out.push_back(Mlp::from_params(role, spec, std::move(params)));
    }
    return out;
}

} // namespace arl::nn
