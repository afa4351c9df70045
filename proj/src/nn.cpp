#include "dfm/nn.hpp"

#include "dfm/error.hpp"
#include "dfm/kernels.hpp"

#include <cmath>
#include <random>
#include <string>

namespace dfm::nn {

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) throw Error("mlp needs at least input and output dims");
    for (auto d : dims) {
        if (d == 0) throw Error("mlp layer dims must be positive");
    }
}

template <class F>
void for_each_tensor(MlpParams& p, F&& f) {
    for (std::size_t l = 0; l < p.layers(); ++l) {
        f(p.weights[l]);
        f(p.biases[l]);
    }
}

void check_same_layout(const MlpParams& a, const MlpParams& b, const char* what) {
    if (a.dims != b.dims) throw ShapeError(std::string(what) + ": layer dims differ");
}

} // namespace

std::size_t MlpParams::param_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t l = 0; l < layers(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

std::vector<double> MlpParams::flatten() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (std::size_t l = 0; l < layers(); ++l) {
        out.insert(out.end(), weights[l].values().begin(), weights[l].values().end());
        out.insert(out.end(), biases[l].values().begin(), biases[l].values().end());
    }
    return out;
}

void MlpParams::unflatten(std::span<const double> flat) {
    if (flat.size() != param_count()) {
        throw ShapeError("flat parameter length " + std::to_string(flat.size()) + " does not match " +
                         std::to_string(param_count()));
    }
    std::size_t pos = 0;
    for_each_tensor(*this, [&](Tensor& t) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), t.size(), t.data());
        pos += t.size();
    });
}

MlpParams mlp_zeros(const std::vector<std::size_t>& dims) {
    check_dims(dims);
    MlpParams p;
    p.dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        p.weights.emplace_back(dims[l + 1], dims[l]);
        p.biases.emplace_back(1, dims[l + 1]);
    }
    return p;
}

MlpParams mlp_init(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    MlpParams p = mlp_zeros(dims);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < p.layers(); ++l) {
        std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dims[l])));
        for (double& w : p.weights[l].values()) w = normal(rng);
    }
    return p;
}

BoundMlp bind(ad::Tape& tape, const MlpParams& params, bool requires_grad) {
    BoundMlp b;
    b.dims = params.dims;
    for (std::size_t l = 0; l < params.layers(); ++l) {
        b.weights.push_back(tape.leaf(params.weights[l], requires_grad));
        b.biases.push_back(tape.leaf(params.biases[l], requires_grad));
    }
    return b;
}

ad::Var mlp_forward(const BoundMlp& net, ad::Var input) {
    if (input.value().cols() != net.dims.front()) {
        throw ShapeError("mlp input has " + std::to_string(input.value().cols()) + " columns, expected " +
                         std::to_string(net.dims.front()));
    }
    ad::Var h = input;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        h = ad::linear(h, net.weights[l], net.biases[l]);
        if (l + 1 < net.weights.size()) h = ad::selu(h);
    }
    return h;
}

Tensor mlp_eval(const MlpParams& params, const Tensor& input) {
    if (input.cols() != params.input_dim()) {
        throw ShapeError("mlp input has " + std::to_string(input.cols()) + " columns, expected " +
                         std::to_string(params.input_dim()));
    }
    Tensor h = input;
    for (std::size_t l = 0; l < params.layers(); ++l) {
        const Tensor& w = params.weights[l];
        Tensor out(h.rows(), w.rows());
        kernels::gemm_nt({h.data(), h.rows(), h.cols()}, {w.data(), w.rows(), w.cols()},
                         {out.data(), out.rows(), out.cols()});
        const bool hidden = l + 1 < params.layers();
        for (std::size_t r = 0; r < out.rows(); ++r) {
            auto row = out.row_span(r);
            for (std::size_t c = 0; c < row.size(); ++c) {
                row[c] += params.biases[l][c];
                if (hidden) row[c] = ad::selu_value(row[c]);
            }
        }
        h = std::move(out);
    }
    return h;
}

MlpParams gradients(const BoundMlp& net) {
    MlpParams g;
    g.dims = net.dims;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        g.weights.push_back(net.weights[l].grad());
        g.biases.push_back(net.biases[l].grad());
    }
    return g;
}

AdamState adam_init(const MlpParams& params, const AdamConfig& config) {
    if (!(config.lr > 0.0) || !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
        !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.eps > 0.0) || config.weight_decay < 0.0) {
        throw ConfigError("invalid Adam hyperparameters");
    }
    AdamState s;
    s.config = config;
    s.m = mlp_zeros(params.dims);
    s.v = mlp_zeros(params.dims);
    return s;
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, std::string_view loss_term) {
    check_same_layout(params, grads, "adam_step gradients");
    check_same_layout(params, state.m, "adam_step state");
    for (std::size_t l = 0; l < grads.layers(); ++l) {
        if (!grads.weights[l].all_finite() || !grads.biases[l].all_finite()) {
            throw NonFiniteError("non-finite gradient from loss term '" + std::string(loss_term) + "' in layer " +
                                 std::to_string(l));
        }
    }
    const AdamConfig& c = state.config;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    auto update = [&](Tensor& p, const Tensor& g, Tensor& m, Tensor& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            if (c.weight_decay > 0.0) p[i] -= c.lr * c.weight_decay * p[i];
            p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    };
    for (std::size_t l = 0; l < params.layers(); ++l) {
        update(params.weights[l], grads.weights[l], state.m.weights[l], state.v.weights[l]);
        update(params.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l]);
    }
}

EmaState ema_init(const MlpParams& params, double decay) {
    if (!(decay >= 0.0 && decay <= 1.0)) throw ConfigError("EMA decay must lie in [0,1]");
    return EmaState{params, decay};
}

void ema_update(EmaState& ema, const MlpParams& params) {
    check_same_layout(ema.shadow, params, "ema_update");
    for (std::size_t l = 0; l < params.layers(); ++l) {
        auto blend = [&](Tensor& s, const Tensor& p) {
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = ema.decay * s[i] + (1.0 - ema.decay) * p[i];
        };
        blend(ema.shadow.weights[l], params.weights[l]);
        blend(ema.shadow.biases[l], params.biases[l]);
    }
}

} // namespace dfm::nn
