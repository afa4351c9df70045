#include "dfm/interpolant.hpp"

#include "dfm/error.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace dfm {

void KernelParams::validate() const {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw ConfigError("kernel bandwidths sigma1, sigma2 must be positive");
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("kernel floor eta must lie in (0,1)");
}

double kernel_gamma(double a, double sigma, double eta) {
    return std::max(std::exp(-a * a / (2.0 * sigma * sigma)), eta);
}

LearnableInterpolant interpolant_init(std::size_t dim, const std::vector<std::size_t>& hidden,
                                      std::uint64_t seed, bool time_input) {
    std::vector<std::size_t> dims{2 * dim + (time_input ? 1 : 0)};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(dim);
    return LearnableInterpolant{nn::mlp_init(dims, seed), dim, time_input};
}

void check_times(const Tensor& t, std::size_t rows) {
    if (t.cols() != 1 || t.rows() != rows) {
        throw ShapeError("time column must be [" + std::to_string(rows) + ",1], got " + t.shape_string());
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] >= 0.0 && t[i] <= 1.0)) {
            throw Error("time " + std::to_string(t[i]) + " at row " + std::to_string(i) + " is outside [0,1]");
        }
    }
}

namespace {

void check_pair(const Tensor& x, const Tensor& y) {
    if (!x.same_shape(y)) {
        throw ShapeError("interpolant endpoints differ in shape: " + x.shape_string() + " vs " + y.shape_string());
    }
}

void check_step(double h) {
    if (!(h > 0.0)) throw Error("finite-difference step h must be positive");
}

// Per-row coefficient repeated across d columns.
template <class F>
Tensor row_coeff(const Tensor& t, std::size_t d, F&& f) {
    Tensor out(t.rows(), d);
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const double c = f(t[r]);
        for (std::size_t j = 0; j < d; ++j) out(r, j) = c;
    }
    return out;
}

Tensor clipped(const Tensor& t, double h) {
    Tensor out = t;
    for (double& v : out.values()) v = std::clamp(v + h, 0.0, 1.0);
    return out;
}

ad::Var gamma_at(const BoundInterpolant& in, ad::Var x, ad::Var y, ad::Var t) {
    if (in.spec->time_input) {
        const std::vector<ad::Var> parts{x, y, t};
        return nn::mlp_forward(in.net, ad::concat(parts));
    }
    const std::vector<ad::Var> parts{x, y};
    return nn::mlp_forward(in.net, ad::concat(parts));
}

Tensor gamma_values(const LearnableInterpolant& in, const Tensor& x, const Tensor& y, const Tensor& t) {
    const std::size_t d = x.cols();
    const std::size_t w = 2 * d + (in.time_input ? 1 : 0);
    Tensor input(x.rows(), w);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = input.row_span(r);
        std::copy_n(x.row_span(r).begin(), d, row.begin());
        std::copy_n(y.row_span(r).begin(), d, row.begin() + static_cast<std::ptrdiff_t>(d));
        if (in.time_input) row[2 * d] = t[r];
    }
    return nn::mlp_eval(in.gamma, input);
}

// dz = (y - x) + c1 * g + c2 * (g+ - g-), shared by both paths.
ad::Var dt_from_gammas(ad::Var x, ad::Var y, ad::Var g, const ad::Var* gp, const ad::Var* gm, const Tensor& t,
                       double h) {
    ad::Tape& tape = *x.tape;
    const std::size_t d = x.value().cols();
    ad::Var dz = ad::sub(y, x);
    dz = ad::add(dz, ad::mul(tape.constant(row_coeff(t, d, [](double s) { return 1.0 - 2.0 * s; })), g));
    if (gp) {
        auto c2 = row_coeff(t, d, [h](double s) {
            const double hi = std::min(s + h, 1.0);
            const double lo = std::max(s - h, 0.0);
            return s * (1.0 - s) / (hi - lo);
        });
        dz = ad::add(dz, ad::mul(tape.constant(std::move(c2)), ad::sub(*gp, *gm)));
    }
    return dz;
}

} // namespace

Tensor linear_interp(const Tensor& x, const Tensor& y, const Tensor& t) {
    check_pair(x, y);
    check_times(t, x.rows());
    Tensor z(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double s = t[r];
        for (std::size_t c = 0; c < x.cols(); ++c) z(r, c) = (1.0 - s) * x(r, c) + s * y(r, c);
    }
    return z;
}

Tensor linear_interp_dt(const Tensor& x, const Tensor& y) {
    check_pair(x, y);
    Tensor dz = y;
    for (std::size_t i = 0; i < dz.size(); ++i) dz[i] -= x[i];
    return dz;
}

BoundInterpolant bind(ad::Tape& tape, const LearnableInterpolant& interp, bool requires_grad) {
    return BoundInterpolant{&interp, nn::bind(tape, interp.gamma, requires_grad)};
}

namespace {

void check_inputs(const BoundInterpolant& in, const Tensor& x, const Tensor& y) {
    check_pair(x, y);
    if (x.cols() != in.spec->dim) {
        throw ShapeError("interpolant of dim " + std::to_string(in.spec->dim) + " got inputs " + x.shape_string());
    }
}

ad::Var z_from_gamma(ad::Var x, ad::Var y, ad::Var t, ad::Var g, std::size_t d) {
    const ad::Var a = ad::repeat_cols(t, d);
    const ad::Var one_minus = ad::add_scalar(ad::scale(a, -1.0), 1.0);
    return ad::add(ad::add(ad::mul(one_minus, x), ad::mul(a, y)), ad::mul(ad::mul(a, one_minus), g));
}

} // namespace

ad::Var interp_eval(const BoundInterpolant& in, ad::Var x, ad::Var y, ad::Var t) {
    check_inputs(in, x.value(), y.value());
    check_times(t.value(), x.value().rows());
    return z_from_gamma(x, y, t, gamma_at(in, x, y, t), in.spec->dim);
}

ad::Var interp_dt(const BoundInterpolant& in, ad::Var x, ad::Var y, const Tensor& t, double h) {
    return interp_path(in, x, y, t, h).dz;
}

InterpPath interp_path(const BoundInterpolant& in, ad::Var x, ad::Var y, const Tensor& t, double h) {
    check_step(h);
    ad::Tape& tape = *x.tape;
    check_times(t, x.value().rows());
    check_inputs(in, x.value(), y.value());
    const ad::Var tv = tape.constant(t);
    const ad::Var g = gamma_at(in, x, y, tv);
    const ad::Var z = z_from_gamma(x, y, tv, g, in.spec->dim);
    if (!in.spec->time_input) return {z, dt_from_gammas(x, y, g, nullptr, nullptr, t, h)};
    const ad::Var gp = gamma_at(in, x, y, tape.constant(clipped(t, h)));
    const ad::Var gm = gamma_at(in, x, y, tape.constant(clipped(t, -h)));
    return {z, dt_from_gammas(x, y, g, &gp, &gm, t, h)};
}

InterpValues interp_path_values(const LearnableInterpolant& in, const Tensor& x, const Tensor& y, const Tensor& t,
                                double h) {
    check_pair(x, y);
    check_step(h);
    check_times(t, x.rows());
    if (x.cols() != in.dim) {
        throw ShapeError("interpolant of dim " + std::to_string(in.dim) + " got inputs " + x.shape_string());
    }
    const Tensor g = gamma_values(in, x, y, t);
    Tensor gdiff;
    if (in.time_input) {
        gdiff = gamma_values(in, x, y, clipped(t, h));
        const Tensor gm = gamma_values(in, x, y, clipped(t, -h));
        for (std::size_t i = 0; i < gdiff.size(); ++i) gdiff[i] -= gm[i];
    }
    InterpValues out{Tensor(x.rows(), x.cols()), Tensor(x.rows(), x.cols())};
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double s = t[r];
        const double c2 = in.time_input ? s * (1.0 - s) / (std::min(s + h, 1.0) - std::max(s - h, 0.0)) : 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double gv = g(r, c);
            out.z(r, c) = (1.0 - s) * x(r, c) + s * y(r, c) + s * (1.0 - s) * gv;
            double dz = y(r, c) - x(r, c) + (1.0 - 2.0 * s) * gv;
            if (in.time_input) dz += c2 * gdiff(r, c);
            out.dz(r, c) = dz;
        }
    }
    return out;
}

ad::Var repulsion_from_paths(std::span<const ad::Var> z, std::span<const Tensor> t, const KernelParams& kernel) {
    kernel.validate();
    if (z.size() < 2) throw Error("repulsion loss needs at least two conditions");
    if (t.size() != z.size()) throw ShapeError("repulsion loss: one time column per condition required");
    const std::size_t n = z[0].value().rows();
    for (std::size_t q = 0; q < z.size(); ++q) {
        if (!z[q].value().same_shape(z[0].value()) || t[q].rows() != n) {
            throw ShapeError("repulsion loss requires equal batch sizes across conditions");
        }
    }
    ad::Tape& tape = *z[0].tape;
    const double spatial = -1.0 / (2.0 * kernel.sigma1 * kernel.sigma1);
    std::optional<ad::Var> total;
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t j = i + 1; j < z.size(); ++j) {
            Tensor temporal(n, 1);
            for (std::size_t r = 0; r < n; ++r) {
                temporal[r] = kernel_gamma(std::abs(t[i][r] - t[j][r]), kernel.sigma2, kernel.eta);
            }
            const ad::Var d2 = ad::squared_norm(ad::sub(z[i], z[j]), ad::Axis::Rows);
            const ad::Var ks = ad::max_const(ad::exp(ad::scale(d2, spatial)), kernel.eta);
            const ad::Var term = ad::mean(ad::mul(ks, tape.constant(std::move(temporal))));
            total = total ? ad::add(*total, term) : term;
        }
    }
    return *total;
}

ad::Var repulsion_loss(const BoundInterpolant& in, std::span<const CondBatch> batches, const KernelParams& kernel) {
    if (batches.size() < 2) throw Error("repulsion loss needs at least two conditions");
    std::vector<ad::Var> z;
    std::vector<Tensor> t;
    for (const CondBatch& b : batches) {
        z.push_back(interp_eval(in, b.x, b.y, b.x.tape->constant(b.t)));
        t.push_back(b.t);
    }
    return repulsion_from_paths(z, t, kernel);
}

} // namespace dfm
