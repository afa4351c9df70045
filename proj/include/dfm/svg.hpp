#pragma once

#include "dfm/ode.hpp"
#include "dfm/tensor.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace dfm {

/// Minimal 2-D SVG plot: point layers plus trajectory polylines whose
/// segments are colored by time (blue at t=0 to red at t=1).
class SvgPlot {
public:
    /// axes picks the two state columns drawn as x and y.
    explicit SvgPlot(std::string title, std::array<std::size_t, 2> axes = {0, 1});

    void points(const Tensor& pts, const std::string& color, double radius = 1.5);
    void trajectories(const Trajectory& traj, std::size_t max_paths = 200);

    std::string render(double width = 480, double height = 480) const;
    void save(const std::filesystem::path& path) const;

private:
    struct PointLayer {
        std::vector<std::array<double, 2>> pts;
        std::string color;
        double radius;
    };
    struct Segment {
        std::array<double, 2> a;
        std::array<double, 2> b;
        double t;
    };

    std::array<double, 2> project(const Tensor& m, std::size_t row) const;

    std::string title_;
    std::array<std::size_t, 2> axes_;
    std::vector<PointLayer> layers_;
    std::vector<Segment> segments_;
};

/// Hex color on the blue-to-red ramp, t clamped to [0, 1].
std::string time_color(double t);

} // namespace dfm
