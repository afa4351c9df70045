#include "dfm/svg.hpp"

#include "dfm/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace dfm {

std::string time_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(40 + 200 * t));
    const int g = static_cast<int>(std::lround(60 + 40 * (1.0 - std::abs(2.0 * t - 1.0))));
    const int b = static_cast<int>(std::lround(220 - 190 * t));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

SvgPlot::SvgPlot(std::string title, std::array<std::size_t, 2> axes) : title_(std::move(title)), axes_(axes) {}

std::array<double, 2> SvgPlot::project(const Tensor& m, std::size_t row) const {
    if (axes_[0] >= m.cols() || axes_[1] >= m.cols()) {
        throw ShapeError("plot axes exceed the state dimension " + std::to_string(m.cols()));
    }
    return {m(row, axes_[0]), m(row, axes_[1])};
}

void SvgPlot::points(const Tensor& pts, const std::string& color, double radius) {
    PointLayer layer{{}, color, radius};
    for (std::size_t r = 0; r < pts.rows(); ++r) layer.pts.push_back(project(pts, r));
    layers_.push_back(std::move(layer));
}

void SvgPlot::trajectories(const Trajectory& traj, std::size_t max_paths) {
    const std::size_t n = std::min(max_paths, traj.batch());
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        const double t = 0.5 * (traj.times[k - 1] + traj.times[k]);
        for (std::size_t s = 0; s < n; ++s) {
            segments_.push_back({project(traj.states[k - 1], s), project(traj.states[k], s), t});
        }
    }
}

std::string SvgPlot::render(double width, double height) const {
    double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    double hi[2] = {-lo[0], -lo[1]};
    auto grow = [&](const std::array<double, 2>& p) {
        for (int i = 0; i < 2; ++i) {
            lo[i] = std::min(lo[i], p[i]);
            hi[i] = std::max(hi[i], p[i]);
        }
    };
    for (const auto& l : layers_) std::for_each(l.pts.begin(), l.pts.end(), grow);
    for (const auto& s : segments_) {
        grow(s.a);
        grow(s.b);
    }
    if (!std::isfinite(lo[0])) lo[0] = lo[1] = -1.0, hi[0] = hi[1] = 1.0;
    for (int i = 0; i < 2; ++i) {
        const double pad = 0.05 * std::max(hi[i] - lo[i], 1e-9);
        lo[i] -= pad;
        hi[i] += pad;
    }
    const double margin = 24.0;
    const double sx = (width - 2 * margin) / (hi[0] - lo[0]);
    const double sy = (height - 2 * margin) / (hi[1] - lo[1]);
    auto px = [&](double x) { return margin + (x - lo[0]) * sx; };
    auto py = [&](double y) { return height - margin - (y - lo[1]) * sy; };

    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << margin << "\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">" << title_
       << " (axes " << axes_[0] << ", " << axes_[1] << ")</text>\n";
    os << "<g stroke-width=\"0.6\" stroke-opacity=\"0.7\">\n";
    for (const auto& s : segments_) {
        os << "<line x1=\"" << px(s.a[0]) << "\" y1=\"" << py(s.a[1]) << "\" x2=\"" << px(s.b[0]) << "\" y2=\""
           << py(s.b[1]) << "\" stroke=\"" << time_color(s.t) << "\"/>\n";
    }
    os << "</g>\n";
    for (const auto& l : layers_) {
        os << "<g fill=\"" << l.color << "\" fill-opacity=\"0.6\">\n";
        for (const auto& p : l.pts) {
            os << "<circle cx=\"" << px(p[0]) << "\" cy=\"" << py(p[1]) << "\" r=\"" << l.radius << "\"/>\n";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void SvgPlot::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << render();
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace dfm
