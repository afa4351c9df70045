#pragma once

#include "dfm/autodiff.hpp"
#include "dfm/nn.hpp"
#include "dfm/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace dfm {

/// Repulsion kernel settings: spatial bandwidth sigma1, temporal bandwidth
/// sigma2, kernel floor eta.
struct KernelParams {
    double sigma1 = 0.1;
    double sigma2 = 1.5;
    double eta = 1e-4;

    void validate() const;
};

/// max(exp(-a^2 / (2 sigma^2)), eta)
double kernel_gamma(double a, double sigma, double eta);

/// I(x, y, t) = (1 - t) x + t y + t (1 - t) gamma(x, y, t).
/// The t(1-t) factor makes both endpoints exact for any gamma.
struct LearnableInterpolant {
    nn::MlpParams gamma;
    std::size_t dim = 0;
    /// When false gamma sees only (x, y) and its time derivative is zero.
    bool time_input = true;
};

LearnableInterpolant interpolant_init(std::size_t dim, const std::vector<std::size_t>& hidden,
                                      std::uint64_t seed, bool time_input = true);

/// Times are a column [n, 1] with one entry per sample row.
void check_times(const Tensor& t, std::size_t rows);

Tensor linear_interp(const Tensor& x, const Tensor& y, const Tensor& t);
Tensor linear_interp_dt(const Tensor& x, const Tensor& y);

struct BoundInterpolant {
    const LearnableInterpolant* spec = nullptr;
    nn::BoundMlp net;
};

BoundInterpolant bind(ad::Tape& tape, const LearnableInterpolant& interp, bool requires_grad = true);

ad::Var interp_eval(const BoundInterpolant& interp, ad::Var x, ad::Var y, ad::Var t);

/// y - x + (1 - 2t) gamma(t) + t (1 - t) (gamma(t+) - gamma(t-)) / (t+ - t-),
/// t+- = clip(t +- h, 0, 1). Differentiable with respect to the gamma net.
ad::Var interp_dt(const BoundInterpolant& interp, ad::Var x, ad::Var y, const Tensor& t, double h);

struct InterpPath {
    ad::Var z;
    ad::Var dz;
};

/// interp_eval and interp_dt sharing the gamma(t) evaluation.
InterpPath interp_path(const BoundInterpolant& interp, ad::Var x, ad::Var y, const Tensor& t, double h);

struct InterpValues {
    Tensor z;
    Tensor dz;
};

/// Tape-free version of interp_path.
InterpValues interp_path_values(const LearnableInterpolant& interp, const Tensor& x, const Tensor& y,
                                const Tensor& t, double h);

/// One condition's batch for the repulsion objective.
struct CondBatch {
    ad::Var x;
    ad::Var y;
    Tensor t;
};

/// Sum over condition pairs i < j of the batch mean of
/// gamma_sigma2(|t_i - t_j|) * gamma_sigma1(|z_i - z_j|), pairing rows by index.
ad::Var repulsion_loss(const BoundInterpolant& interp, std::span<const CondBatch> batches,
                       const KernelParams& kernel);

/// Same objective on precomputed paths z_q (used when the paths come from
/// elsewhere, e.g. a batch shared with the surface term).
ad::Var repulsion_from_paths(std::span<const ad::Var> z, std::span<const Tensor> t, const KernelParams& kernel);

} // namespace dfm
