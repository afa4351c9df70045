#pragma once

#include "dfm/autodiff.hpp"
#include "dfm/coupling.hpp"
#include "dfm/interpolant.hpp"
#include "dfm/kernels.hpp"
#include "dfm/ode.hpp"
#include "dfm/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

namespace dfm {

/// Surface measurements, one (x, y, height) per row.
struct PointCloud {
    Tensor points;

    std::size_t size() const noexcept { return points.rows(); }
};

/// Reads `x y z` per line (whitespace or comma separated, '#' comments).
PointCloud load_point_cloud(const std::filesystem::path& path);
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);

/// Uniform (x, y) bucketing of a point cloud for neighbor queries.
class XyGrid {
public:
    /// cell <= 0 picks a cell holding about four points on average.
    explicit XyGrid(PointCloud cloud, double cell = 0.0);

    const PointCloud& cloud() const noexcept { return cloud_; }
    kernels::XyGridView view() const noexcept;

private:
    PointCloud cloud_;
    double x0_ = 0.0;
    double y0_ = 0.0;
    double cell_ = 1.0;
    std::size_t nx_ = 1;
    std::size_t ny_ = 1;
    std::vector<std::size_t> cell_start_;
    std::vector<std::size_t> items_;
};

struct LandParams {
    double sigma = 0.125;
    double eps = 1e-2;
    /// Points farther than cutoff_sigmas * sigma horizontally are skipped;
    /// at 8 sigma their weight is below 1e-13. Infinity sums every point.
    double cutoff_sigmas = 8.0;

    void validate() const;
    double cutoff() const noexcept { return cutoff_sigmas * sigma; }
};

/// Cloud point with the smallest horizontal distance; ties go to the lowest index.
std::array<double, 3> nearest_neighbor_xy(std::span<const double> point, const XyGrid& grid);
std::vector<std::size_t> nearest_xy_indices(const XyGrid& grid, const Tensor& queries);

/// Diagonal LAND metric G_dd = 1 / (sum_i w_i (z_d - m_id)^2 + eps),
/// w_i = exp(-|z - m_i|^2 / (2 sigma^2)).
std::array<double, 3> land_metric(std::span<const double> z, const XyGrid& grid, const LandParams& p);
Tensor land_metric_batch(const Tensor& z, const XyGrid& grid, const LandParams& p);

/// Per-row dz^T G(z) dz as an [n, 1] node, differentiable in z and dz.
ad::Var land_quadratic(ad::Var z, ad::Var dz, const XyGrid& grid, const LandParams& p);

/// Mean of the LAND quadratic form over every row of every condition's path.
ad::Var mfm_from_paths(std::span<const ad::Var> z, std::span<const ad::Var> dz, const XyGrid& grid,
                       const LandParams& p);

/// Surface term on interpolant paths of the given per-condition batches.
ad::Var mfm_loss(const BoundInterpolant& interp, std::span<const CondBatch> batches, const XyGrid& grid,
                 const LandParams& p, double h);

/// Mean over trajectories of sum over steps tau = 1..T of
/// |height(z_tau) - height(NN_xy(z_tau))|.
double surface_adherence(const Trajectory& traj, const XyGrid& grid);

struct BumpSpec {
    double x_min = -1.5;
    double x_max = 1.5;
    double y_min = -1.5;
    double y_max = 1.5;
    double spacing = 0.05;
    double amplitude = 0.6;
    double width = 0.45;
    double cx = 0.0;
    double cy = 0.0;
};

/// Grid samples of height = amplitude * exp(-|p - c|^2 / (2 width^2)).
PointCloud bump_surface(const BumpSpec& spec);
double bump_height(const BumpSpec& spec, double x, double y);

struct SwarmSpec {
    /// Horizontal centers, one (x, y) per condition.
    std::vector<std::array<double, 2>> source_centers{{-1.0, 0.5}, {-1.0, -0.5}};
    std::vector<std::array<double, 2>> target_centers{{1.0, -0.5}, {1.0, 0.5}};
    double source_variance = 0.02;
    double target_variance = 0.03;
    std::size_t samples = 4000;
    std::uint64_t seed = 0;
};

/// Gaussian swarms around each center with heights snapped to the surface.
ConditionalDataset swarm_scenario(const XyGrid& grid, const SwarmSpec& spec);

} // namespace dfm
