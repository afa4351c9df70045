#pragma once

#include "dfm/autodiff.hpp"
#include "dfm/tensor.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace dfm::nn {

/// Feedforward net: affine -> SeLU on hidden layers, identity on the output.
/// weights[i] is [dims[i+1], dims[i]], biases[i] is [1, dims[i+1]].
struct MlpParams {
    std::vector<std::size_t> dims;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    std::size_t layers() const noexcept { return weights.size(); }
    std::size_t input_dim() const { return dims.front(); }
    std::size_t output_dim() const { return dims.back(); }
    std::size_t param_count() const noexcept;

    /// Parameters in layer order: w0, b0, w1, b1, ...
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);

    friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// LeCun-normal weights (std = 1/sqrt(fan_in)), zero biases.
MlpParams mlp_init(const std::vector<std::size_t>& dims, std::uint64_t seed);

/// All-zero network of the given shape.
MlpParams mlp_zeros(const std::vector<std::size_t>& dims);

/// Parameters placed on a tape as leaves.
struct BoundMlp {
    std::vector<std::size_t> dims;
    std::vector<ad::Var> weights;
    std::vector<ad::Var> biases;
};

BoundMlp bind(ad::Tape& tape, const MlpParams& params, bool requires_grad = true);

ad::Var mlp_forward(const BoundMlp& net, ad::Var input);

/// Tape-free batched evaluation; same arithmetic as mlp_forward.
Tensor mlp_eval(const MlpParams& params, const Tensor& input);

/// Gradients of a bound net after backward(), in MlpParams layout.
MlpParams gradients(const BoundMlp& net);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Decoupled (AdamW-style) decay, applied as p -= lr * weight_decay * p.
    double weight_decay = 0.0;
};

struct AdamState {
    AdamConfig config;
    MlpParams m;
    MlpParams v;
    std::uint64_t step = 0;
};

AdamState adam_init(const MlpParams& params, const AdamConfig& config);

/// One bias-corrected Adam update. `loss_term` names the loss in the error
/// raised for non-finite gradients.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, std::string_view loss_term);

struct EmaState {
    MlpParams shadow;
    double decay = 0.9999;
};

EmaState ema_init(const MlpParams& params, double decay);
void ema_update(EmaState& ema, const MlpParams& params);

} // namespace dfm::nn
