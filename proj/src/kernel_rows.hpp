#pragma once

// Per-row bodies shared by the serial and OpenMP kernel variants. Keeping a
// single body per kernel is what makes the two variants bitwise identical.

#include "dfm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dfm::kernels::detail {

inline void gemm_nn_row(ConstMat a, ConstMat b, Mat c, std::size_t i) {
    double* out = c.data + i * c.cols;
    std::fill(out, out + c.cols, 0.0);
    const double* arow = a.data + i * a.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
        const double aik = arow[k];
        const double* brow = b.data + k * b.cols;
        for (std::size_t j = 0; j < c.cols; ++j) out[j] += aik * brow[j];
    }
}

inline void gemm_nt_row(ConstMat a, ConstMat b, Mat c, std::size_t i) {
    double* out = c.data + i * c.cols;
    const double* arow = a.data + i * a.cols;
    for (std::size_t j = 0; j < c.cols; ++j) {
        const double* brow = b.data + j * b.cols;
        double s = 0.0;
        for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
        out[j] = s;
    }
}

inline void gemm_tn_row(ConstMat a, ConstMat b, Mat c, std::size_t i) {
    double* out = c.data + i * c.cols;
    std::fill(out, out + c.cols, 0.0);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double aki = a.data[k * a.cols + i];
        const double* brow = b.data + k * b.cols;
        for (std::size_t j = 0; j < c.cols; ++j) out[j] += aki * brow[j];
    }
}

inline void pairwise_sq_dist_row(ConstMat a, ConstMat b, Mat c, std::size_t i) {
    const double* arow = a.data + i * a.cols;
    double* out = c.data + i * c.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
        const double* brow = b.data + j * b.cols;
        double s = 0.0;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double d = arow[k] - brow[k];
            s += d * d;
        }
        out[j] = s;
    }
}

inline void pairwise_dist_row(ConstMat a, ConstMat b, Mat c, std::size_t i) {
    pairwise_sq_dist_row(a, b, c, i);
    double* out = c.data + i * c.cols;
    for (std::size_t j = 0; j < b.rows; ++j) out[j] = std::sqrt(out[j]);
}

struct CellRange {
    std::size_t ix0, ix1, iy0, iy1; // inclusive
    bool empty;
};

inline CellRange cells_within(const XyGridView& g, double x, double y, double radius) {
    if (!std::isfinite(radius)) {
        return {0, g.nx - 1, 0, g.ny - 1, false};
    }
    const double fx0 = std::floor((x - radius - g.x0) / g.cell);
    const double fx1 = std::floor((x + radius - g.x0) / g.cell);
    const double fy0 = std::floor((y - radius - g.y0) / g.cell);
    const double fy1 = std::floor((y + radius - g.y0) / g.cell);
    const double nx = static_cast<double>(g.nx);
    const double ny = static_cast<double>(g.ny);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 >= nx || fy0 >= ny) {
        return {0, 0, 0, 0, true};
    }
    auto clamp = [](double v, double hi) { return static_cast<std::size_t>(std::clamp(v, 0.0, hi - 1.0)); };
    return {clamp(fx0, nx), clamp(fx1, nx), clamp(fy0, ny), clamp(fy1, ny), false};
}

// Accumulates the LAND sums for one query point.
//   s[d]    = sum_i w_i (z_d - m_id)^2
//   lin[d]  = sum_i w_i (z_d - m_id)
//   a[d][k] = sum_i w_i (z_k - m_ik) (z_d - m_id)^2
struct LandSums {
    double s[3] = {0, 0, 0};
    double lin[3] = {0, 0, 0};
    double a[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
};

inline LandSums land_sums(const XyGridView& g, const LandKernelParams& p, const double* z,
                          bool with_derivative) {
    LandSums out;
    const CellRange r = cells_within(g, z[0], z[1], p.cutoff);
    if (r.empty) return out;
    const double inv2s2 = 1.0 / (2.0 * p.sigma * p.sigma);
    const double cut2 = p.cutoff * p.cutoff;
    for (std::size_t iy = r.iy0; iy <= r.iy1; ++iy) {
        for (std::size_t ix = r.ix0; ix <= r.ix1; ++ix) {
            const std::size_t cell = iy * g.nx + ix;
            for (std::size_t t = g.cell_start[cell]; t < g.cell_start[cell + 1]; ++t) {
                const double* m = g.points + 3 * g.items[t];
                const double d0 = z[0] - m[0];
                const double d1 = z[1] - m[1];
                const double xy2 = d0 * d0 + d1 * d1;
                if (xy2 > cut2) continue;
                const double d2 = z[2] - m[2];
                const double diff[3] = {d0, d1, d2};
                const double w = std::exp(-(xy2 + d2 * d2) * inv2s2);
                for (int d = 0; d < 3; ++d) {
                    const double sq = diff[d] * diff[d];
                    out.s[d] += w * sq;
                    if (with_derivative) {
                        out.lin[d] += w * diff[d];
                        for (int k = 0; k < 3; ++k) out.a[d][k] += w * diff[k] * sq;
                    }
                }
            }
        }
    }
    return out;
}

inline void land_diag_row(const XyGridView& g, const LandKernelParams& p, ConstMat z, Mat out,
                          std::size_t i) {
    const LandSums s = land_sums(g, p, z.data + i * z.cols, false);
    for (int d = 0; d < 3; ++d) out.data[i * out.cols + static_cast<std::size_t>(d)] = 1.0 / (s.s[d] + p.eps);
}

inline void land_quadratic_row(const XyGridView& g, const LandKernelParams& p, ConstMat z,
                               ConstMat dz, double* value, double* grad_z, double* grad_dz,
                               std::size_t i) {
    const bool deriv = grad_z != nullptr;
    const double* zi = z.data + i * z.cols;
    const double* vi = dz.data + i * dz.cols;
    const LandSums s = land_sums(g, p, zi, deriv);
    double gdiag[3];
    double v = 0.0;
    for (int d = 0; d < 3; ++d) {
        gdiag[d] = 1.0 / (s.s[d] + p.eps);
        v += vi[d] * vi[d] * gdiag[d];
    }
    value[i] = v;
    if (grad_dz) {
        for (int d = 0; d < 3; ++d) grad_dz[3 * i + static_cast<std::size_t>(d)] = 2.0 * vi[d] * gdiag[d];
    }
    if (deriv) {
        const double inv_s2 = 1.0 / (p.sigma * p.sigma);
        for (int k = 0; k < 3; ++k) {
            double gk = 0.0;
            for (int d = 0; d < 3; ++d) {
                double ds = -s.a[d][k] * inv_s2;
                if (d == k) ds += 2.0 * s.lin[d];
                gk -= vi[d] * vi[d] * gdiag[d] * gdiag[d] * ds;
            }
            grad_z[3 * i + static_cast<std::size_t>(k)] = gk;
        }
    }
}

inline std::size_t nearest_xy_row(const XyGridView& g, const double* q) {
    const double qx = q[0];
    const double qy = q[1];
    const auto clamp_cell = [](double v, std::size_t n) {
        const double c = std::floor(v);
        if (!(c >= 0.0)) return std::size_t{0};
        return std::min(static_cast<std::size_t>(c), n - 1);
    };
    const std::size_t cx = clamp_cell((qx - g.x0) / g.cell, g.nx);
    const std::size_t cy = clamp_cell((qy - g.y0) / g.cell, g.ny);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = std::numeric_limits<std::size_t>::max();
    const std::size_t max_ring = std::max(g.nx, g.ny);
    auto visit = [&](std::size_t ix, std::size_t iy) {
        const std::size_t cell = iy * g.nx + ix;
        for (std::size_t t = g.cell_start[cell]; t < g.cell_start[cell + 1]; ++t) {
            const std::size_t idx = g.items[t];
            const double* m = g.points + 3 * idx;
            const double dx = qx - m[0];
            const double dy = qy - m[1];
            const double d2 = dx * dx + dy * dy;
            if (d2 < best || (d2 == best && idx < best_idx)) {
                best = d2;
                best_idx = idx;
            }
        }
    };
    for (std::size_t r = 0; r <= max_ring; ++r) {
        const long lo_x = static_cast<long>(cx) - static_cast<long>(r);
        const long hi_x = static_cast<long>(cx) + static_cast<long>(r);
        const long lo_y = static_cast<long>(cy) - static_cast<long>(r);
        const long hi_y = static_cast<long>(cy) + static_cast<long>(r);
        for (long iy = lo_y; iy <= hi_y; ++iy) {
            if (iy < 0 || iy >= static_cast<long>(g.ny)) continue;
            const bool edge_row = (iy == lo_y || iy == hi_y);
            for (long ix = lo_x; ix <= hi_x; ++ix) {
                if (ix < 0 || ix >= static_cast<long>(g.nx)) continue;
                if (!edge_row && ix != lo_x && ix != hi_x) continue;
                visit(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
            }
        }
        if (best_idx != std::numeric_limits<std::size_t>::max()) {
            // Distance from q to the outside of the searched block of cells.
            const double bx0 = g.x0 + static_cast<double>(lo_x) * g.cell;
            const double bx1 = g.x0 + static_cast<double>(hi_x + 1) * g.cell;
            const double by0 = g.y0 + static_cast<double>(lo_y) * g.cell;
            const double by1 = g.y0 + static_cast<double>(hi_y + 1) * g.cell;
            const double margin = std::min({qx - bx0, bx1 - qx, qy - by0, by1 - qy});
            if (margin > 0.0 && best < margin * margin) break;
        }
    }
    return best_idx;
}

} // namespace dfm::kernels::detail
