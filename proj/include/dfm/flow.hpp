#pragma once

#include "dfm/autodiff.hpp"
#include "dfm/coupling.hpp"
#include "dfm/interpolant.hpp"
#include "dfm/nn.hpp"
#include "dfm/ode.hpp"
#include "dfm/surface.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace dfm {

/// v(z, t): network input is [z, t], output has the state dimension.
struct VelocityField {
    nn::MlpParams net;
    std::size_t dim = 0;
};

VelocityField velocity_init(std::size_t dim, const std::vector<std::size_t>& hidden, std::uint64_t seed);
Tensor velocity_eval(const VelocityField& v, const Tensor& z, double t);
VelocityFn velocity_fn(const VelocityField& v);

Trajectory integrate(const VelocityField& v, const Tensor& x, std::size_t steps, OdeMethod method);
Tensor translate(const VelocityField& v, const Tensor& x, std::size_t steps, OdeMethod method = OdeMethod::Euler);

enum class TrainMode { DfmTwoPhase, DfmInterleaved, Fm, FmCond, FmOt, FmCondOt, Split };

TrainMode parse_train_mode(std::string_view name);
std::string_view train_mode_name(TrainMode mode);
bool mode_learns_interpolant(TrainMode mode);

struct TrainConfig {
    TrainMode mode = TrainMode::DfmTwoPhase;
    /// Velocity updates (phase 2, interleaved steps, FM baselines, split).
    std::size_t iterations = 2000;
    /// Phase-1 interpolant updates of the two-phase trainer.
    std::size_t interp_iterations = 2000;
    std::size_t batch = 512;
    double lr_velocity = 1e-3;
    double lr_interp = 1e-4;
    double weight_decay = 0.0;
    KernelParams kernel;
    double fd_step = 1e-3;
    std::size_t ode_steps = 100;
    OdeMethod ode_method = OdeMethod::Euler;
    std::uint64_t seed = 0;
    /// Consensus weight of the split trainer.
    double lambda = 1.0;
    /// Weights of the repulsion and surface terms in the interpolant objective.
    double lambda1 = 1.0;
    double lambda2 = 0.0;
    LandParams land;
    std::vector<std::size_t> hidden{64, 64};
    bool interp_time_input = true;
    /// 0 disables the weight average; otherwise the returned nets are the EMA shadows.
    double ema_decay = 0.0;
    /// Condition sampling weights; empty means the dataset's weights.
    std::vector<double> condition_weights;

    void validate() const;
};

struct TrainLogRow {
    std::size_t iter = 0;
    /// NaN when the row has no such term.
    double loss_interp = 0.0;
    double loss_fm = 0.0;
};

struct SplitModels {
    std::vector<VelocityField> velocities;
    std::vector<LearnableInterpolant> interpolants;
};

struct TrainResult {
    VelocityField velocity;
    nn::AdamState velocity_opt;
    std::optional<LearnableInterpolant> interpolant;
    std::optional<nn::AdamState> interp_opt;
    std::optional<SplitModels> split;
    std::vector<TrainLogRow> log;
};

/// Batch mean of |v(z, t) - target|^2. Gradient reaches only v's parameters
/// and whatever z and target depend on on the tape.
ad::Var fm_loss_on_path(const nn::BoundMlp& v, ad::Var z, ad::Var target, const Tensor& t);

/// FM loss with the interpolant (linear when `interp` is null) evaluated off
/// the tape, so its parameters receive no gradient.
ad::Var fm_loss(ad::Tape& tape, const nn::BoundMlp& v, const LearnableInterpolant* interp, const PairBatch& pairs,
                const Tensor& t, double h);

TrainResult train_fm(const TrainConfig& cfg, const ConditionalDataset& data);
TrainResult train_dfm_two_phase(const TrainConfig& cfg, const ConditionalDataset& data,
                                const XyGrid* surface = nullptr);
TrainResult train_dfm_interleaved(const TrainConfig& cfg, const ConditionalDataset& data,
                                  const XyGrid* surface = nullptr);
TrainResult train_split(const TrainConfig& cfg, const ConditionalDataset& data);

/// Dispatch on cfg.mode.
TrainResult train(const TrainConfig& cfg, const ConditionalDataset& data, const XyGrid* surface = nullptr);

void write_training_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log);

/// Independent seed stream derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace dfm
