#pragma once

#include "dfm/tensor.hpp"

#include <filesystem>
#include <functional>
#include <string_view>
#include <vector>

namespace dfm {

enum class OdeMethod { Euler, Rk4 };

OdeMethod parse_ode_method(std::string_view name);
std::string_view ode_method_name(OdeMethod m);

/// Velocity of a batch of states (one per row) at time t.
using VelocityFn = std::function<Tensor(const Tensor& z, double t)>;

/// States of a batch on the uniform grid t_k = k / steps, k = 0..steps.
struct Trajectory {
    std::vector<double> times;
    std::vector<Tensor> states;

    const Tensor& start() const { return states.front(); }
    const Tensor& end() const { return states.back(); }
    std::size_t batch() const { return states.front().rows(); }
};

/// Fixed-step integration from t = 0 to t = 1. Throws NonFiniteError naming
/// the step index if a state stops being finite.
Trajectory integrate(const VelocityFn& v, const Tensor& x, std::size_t steps, OdeMethod method);

/// Endpoint only, without storing the grid.
Tensor integrate_endpoint(const VelocityFn& v, const Tensor& x, std::size_t steps, OdeMethod method);

/// CSV `sample_id,t,dim_0,...` with rows ordered by sample, then time.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

} // namespace dfm
