#include "dfm/surface.hpp"

#include "dfm/error.hpp"
#include "dfm/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <string>

namespace dfm {

PointCloud load_point_cloud(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read point cloud " + path.string());
    std::vector<double> data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::replace(line.begin(), line.end(), '\t', ' ');
        std::vector<std::string> fields;
        for (auto& f : split_fields(line, ' ')) {
            if (!f.empty()) fields.push_back(std::move(f));
        }
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (fields.size() != 3) {
            throw IoError(where + ": expected 3 values, found " + std::to_string(fields.size()));
        }
        for (const auto& f : fields) {
            const double v = parse_double(f, where);
            if (!std::isfinite(v)) throw IoError(where + ": non-finite coordinate");
            data.push_back(v);
        }
    }
    if (data.empty()) throw IoError("point cloud " + path.string() + " has no points");
    const std::size_t n = data.size() / 3;
    return PointCloud{Tensor({n, 3}, std::move(data))};
}

void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write point cloud " + path.string());
    out << "# x y z\n";
    for (std::size_t r = 0; r < cloud.size(); ++r) {
        out << format_double(cloud.points(r, 0)) << ' ' << format_double(cloud.points(r, 1)) << ' '
            << format_double(cloud.points(r, 2)) << '\n';
    }
    if (!out) throw IoError("failed writing point cloud " + path.string());
}

XyGrid::XyGrid(PointCloud cloud, double cell) : cloud_(std::move(cloud)) {
    if (cloud_.points.empty()) throw Error("point cloud is empty");
    if (cloud_.points.cols() != 3) throw ShapeError("point cloud must have 3 columns");
    if (!cloud_.points.all_finite()) throw NonFiniteError("point cloud has non-finite coordinates");
    const Tensor& p = cloud_.points;
    double x1 = p(0, 0), y1 = p(0, 1);
    x0_ = x1;
    y0_ = y1;
    for (std::size_t r = 0; r < p.rows(); ++r) {
        x0_ = std::min(x0_, p(r, 0));
        x1 = std::max(x1, p(r, 0));
        y0_ = std::min(y0_, p(r, 1));
        y1 = std::max(y1, p(r, 1));
    }
    if (!(cell > 0.0)) {
        const double area = std::max(x1 - x0_, 1e-12) * std::max(y1 - y0_, 1e-12);
        cell = 2.0 * std::sqrt(area / static_cast<double>(p.rows()));
        if (!(cell > 1e-9)) cell = 1.0;
    }
    cell_ = cell;
    nx_ = static_cast<std::size_t>(std::floor((x1 - x0_) / cell_)) + 1;
    ny_ = static_cast<std::size_t>(std::floor((y1 - y0_) / cell_)) + 1;
    std::vector<std::size_t> cell_of(p.rows());
    std::vector<std::size_t> counts(nx_ * ny_ + 1, 0);
    for (std::size_t r = 0; r < p.rows(); ++r) {
        const auto ix = std::min(static_cast<std::size_t>((p(r, 0) - x0_) / cell_), nx_ - 1);
        const auto iy = std::min(static_cast<std::size_t>((p(r, 1) - y0_) / cell_), ny_ - 1);
        cell_of[r] = iy * nx_ + ix;
        ++counts[cell_of[r] + 1];
    }
    cell_start_.assign(nx_ * ny_ + 1, 0);
    for (std::size_t c = 0; c < nx_ * ny_; ++c) cell_start_[c + 1] = cell_start_[c] + counts[c + 1];
    items_.resize(p.rows());
    std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t r = 0; r < p.rows(); ++r) items_[fill[cell_of[r]]++] = r;
}

kernels::XyGridView XyGrid::view() const noexcept {
    return {x0_, y0_, cell_, nx_, ny_, cell_start_.data(), items_.data(), cloud_.points.data(), cloud_.size()};
}

void LandParams::validate() const {
    if (!(sigma > 0.0) || !(eps > 0.0)) throw ConfigError("LAND sigma and eps must be positive");
    if (!(cutoff_sigmas > 0.0)) throw ConfigError("LAND cutoff must be positive");
}

namespace {

kernels::ConstMat cview(const Tensor& t) { return {t.data(), t.rows(), t.cols()}; }

void require_3d(const Tensor& t, const char* what) {
    if (t.cols() != 3) throw ShapeError(std::string(what) + " must have 3 columns, got " + t.shape_string());
}

} // namespace

std::vector<std::size_t> nearest_xy_indices(const XyGrid& grid, const Tensor& queries) {
    if (queries.cols() < 2) throw ShapeError("nearest-neighbor queries need at least x and y");
    std::vector<std::size_t> out(queries.rows());
    kernels::nearest_xy(grid.view(), cview(queries), out.data());
    return out;
}

std::array<double, 3> nearest_neighbor_xy(std::span<const double> point, const XyGrid& grid) {
    if (point.size() < 2) throw ShapeError("nearest-neighbor query needs x and y");
    const Tensor q({1, point.size()}, std::vector<double>(point.begin(), point.end()));
    const std::size_t i = nearest_xy_indices(grid, q)[0];
    const Tensor& p = grid.cloud().points;
    return {p(i, 0), p(i, 1), p(i, 2)};
}

Tensor land_metric_batch(const Tensor& z, const XyGrid& grid, const LandParams& p) {
    p.validate();
    require_3d(z, "LAND query");
    Tensor g(z.rows(), 3);
    kernels::land_diag(grid.view(), {p.sigma, p.eps, p.cutoff()}, cview(z), {g.data(), g.rows(), g.cols()});
    return g;
}

std::array<double, 3> land_metric(std::span<const double> z, const XyGrid& grid, const LandParams& p) {
    if (z.size() != 3) throw ShapeError("LAND query must be 3-dimensional");
    const Tensor g = land_metric_batch(Tensor({1, 3}, std::vector<double>(z.begin(), z.end())), grid, p);
    return {g[0], g[1], g[2]};
}

ad::Var land_quadratic(ad::Var z, ad::Var dz, const XyGrid& grid, const LandParams& p) {
    p.validate();
    const Tensor& zv = z.value();
    const Tensor& dv = dz.value();
    require_3d(zv, "LAND state");
    if (!zv.same_shape(dv)) throw ShapeError("LAND state and velocity shapes differ");
    const std::size_t n = zv.rows();
    Tensor value(n, 1);
    Tensor gz(n, 3);
    Tensor gdz(n, 3);
    kernels::land_quadratic(grid.view(), {p.sigma, p.eps, p.cutoff()}, cview(zv), cview(dv), value.data(),
                            gz.data(), gdz.data());
    return z.tape->custom("land-quadratic", {z, dz}, std::move(value),
                          [gz = std::move(gz), gdz = std::move(gdz)](const Tensor& g,
                                                                     std::span<Tensor* const> grads) {
                              for (std::size_t k = 0; k < 2; ++k) {
                                  if (!grads[k]) continue;
                                  const Tensor& local = k == 0 ? gz : gdz;
                                  Tensor& dst = *grads[k];
                                  for (std::size_t r = 0; r < local.rows(); ++r) {
                                      for (std::size_t c = 0; c < 3; ++c) dst(r, c) += g[r] * local(r, c);
                                  }
                              }
                          });
}

ad::Var mfm_from_paths(std::span<const ad::Var> z, std::span<const ad::Var> dz, const XyGrid& grid,
                       const LandParams& p) {
    if (z.empty() || z.size() != dz.size()) throw ShapeError("surface loss needs one velocity per path");
    std::optional<ad::Var> total;
    for (std::size_t q = 0; q < z.size(); ++q) {
        const ad::Var term = ad::mean(land_quadratic(z[q], dz[q], grid, p));
        total = total ? ad::add(*total, term) : term;
    }
    return ad::scale(*total, 1.0 / static_cast<double>(z.size()));
}

ad::Var mfm_loss(const BoundInterpolant& interp, std::span<const CondBatch> batches, const XyGrid& grid,
                 const LandParams& p, double h) {
    std::vector<ad::Var> z, dz;
    for (const CondBatch& b : batches) {
        const InterpPath path = interp_path(interp, b.x, b.y, b.t, h);
        z.push_back(path.z);
        dz.push_back(path.dz);
    }
    return mfm_from_paths(z, dz, grid, p);
}

double surface_adherence(const Trajectory& traj, const XyGrid& grid) {
    if (traj.states.size() < 2) throw Error("surface adherence needs a trajectory with at least one step");
    const std::size_t n = traj.batch();
    std::vector<double> per_sample(n, 0.0);
    const Tensor& cloud = grid.cloud().points;
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        const Tensor& z = traj.states[k];
        require_3d(z, "trajectory state");
        const auto nn = nearest_xy_indices(grid, z);
        for (std::size_t s = 0; s < n; ++s) per_sample[s] += std::abs(z(s, 2) - cloud(nn[s], 2));
    }
    double total = 0.0;
    for (double v : per_sample) total += v;
    return total / static_cast<double>(n);
}

double bump_height(const BumpSpec& s, double x, double y) {
    const double dx = x - s.cx;
    const double dy = y - s.cy;
    return s.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * s.width * s.width));
}

PointCloud bump_surface(const BumpSpec& s) {
    if (!(s.spacing > 0.0) || !(s.x_max >= s.x_min) || !(s.y_max >= s.y_min) || !(s.width > 0.0)) {
        throw ConfigError("invalid bump surface spec");
    }
    const auto nx = static_cast<std::size_t>(std::floor((s.x_max - s.x_min) / s.spacing + 1e-9)) + 1;
    const auto ny = static_cast<std::size_t>(std::floor((s.y_max - s.y_min) / s.spacing + 1e-9)) + 1;
    Tensor pts(nx * ny, 3);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double x = s.x_min + static_cast<double>(ix) * s.spacing;
            const double y = s.y_min + static_cast<double>(iy) * s.spacing;
            const std::size_t r = iy * nx + ix;
            pts(r, 0) = x;
            pts(r, 1) = y;
            pts(r, 2) = bump_height(s, x, y);
        }
    }
    return PointCloud{std::move(pts)};
}

ConditionalDataset swarm_scenario(const XyGrid& grid, const SwarmSpec& spec) {
    if (spec.source_centers.size() != spec.target_centers.size() || spec.source_centers.empty()) {
        throw ConfigError("swarm scenario needs matching, non-empty source and target center lists");
    }
    if (spec.source_variance < 0.0 || spec.target_variance < 0.0 || spec.samples == 0) {
        throw ConfigError("swarm variances must be non-negative and sample count positive");
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto swarm = [&](const std::array<double, 2>& c, double variance) {
        Tensor pts(spec.samples, 3);
        const double sd = std::sqrt(variance);
        for (std::size_t r = 0; r < spec.samples; ++r) {
            pts(r, 0) = c[0] + sd * normal(rng);
            pts(r, 1) = c[1] + sd * normal(rng);
        }
        const auto nn = nearest_xy_indices(grid, pts);
        for (std::size_t r = 0; r < spec.samples; ++r) pts(r, 2) = grid.cloud().points(nn[r], 2);
        return pts;
    };
    std::vector<Tensor> src, tgt;
    for (std::size_t q = 0; q < spec.source_centers.size(); ++q) {
        src.push_back(swarm(spec.source_centers[q], spec.source_variance));
        tgt.push_back(swarm(spec.target_centers[q], spec.target_variance));
    }
    return make_dataset(std::move(src), std::move(tgt));
}

} // namespace dfm
