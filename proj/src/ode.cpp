#include "dfm/ode.hpp"

#include "dfm/error.hpp"
#include "dfm/io.hpp"

#include <fstream>
#include <string>

namespace dfm {

OdeMethod parse_ode_method(std::string_view name) {
    if (name == "euler") return OdeMethod::Euler;
    if (name == "rk4") return OdeMethod::Rk4;
    throw ConfigError("unknown ODE method '" + std::string(name) + "' (expected euler or rk4)");
}

std::string_view ode_method_name(OdeMethod m) { return m == OdeMethod::Euler ? "euler" : "rk4"; }

namespace {

// z + s * k, elementwise.
Tensor axpy(const Tensor& z, double s, const Tensor& k) {
    if (!z.same_shape(k)) {
        throw ShapeError("velocity shape " + k.shape_string() + " does not match state " + z.shape_string());
    }
    Tensor out = z;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * k[i];
    return out;
}

Tensor step(const VelocityFn& v, const Tensor& z, double t, double dt, OdeMethod method) {
    if (method == OdeMethod::Euler) return axpy(z, dt, v(z, t));
    const Tensor k1 = v(z, t);
    const Tensor k2 = v(axpy(z, 0.5 * dt, k1), t + 0.5 * dt);
    const Tensor k3 = v(axpy(z, 0.5 * dt, k2), t + 0.5 * dt);
    const Tensor k4 = v(axpy(z, dt, k3), t + dt);
    Tensor out = z;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

template <class OnState>
void run(const VelocityFn& v, const Tensor& x, std::size_t steps, OdeMethod method, OnState&& on_state) {
    if (steps == 0) throw ConfigError("ODE steps must be at least 1");
    if (!x.all_finite()) throw NonFiniteError("ODE initial state is not finite");
    const double dt = 1.0 / static_cast<double>(steps);
    Tensor z = x;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(steps);
        z = step(v, z, t, dt, method);
        if (!z.all_finite()) {
            throw NonFiniteError("ODE state became non-finite at step " + std::to_string(k + 1) + " of " +
                                 std::to_string(steps));
        }
        on_state(k + 1, z);
    }
}

} // namespace

Trajectory integrate(const VelocityFn& v, const Tensor& x, std::size_t steps, OdeMethod method) {
    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    run(v, x, steps, method, [&](std::size_t k, const Tensor& z) {
        traj.times.push_back(static_cast<double>(k) / static_cast<double>(steps));
        traj.states.push_back(z);
    });
    return traj;
}

Tensor integrate_endpoint(const VelocityFn& v, const Tensor& x, std::size_t steps, OdeMethod method) {
    Tensor end = x;
    run(v, x, steps, method, [&](std::size_t, const Tensor& z) { end = z; });
    return end;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trajectory " + path.string());
    const std::size_t d = traj.start().cols();
    out << "sample_id,t";
    for (std::size_t c = 0; c < d; ++c) out << ",dim_" << c;
    out << '\n';
    for (std::size_t s = 0; s < traj.batch(); ++s) {
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            out << s << ',' << format_double(traj.times[k]);
            for (double v : traj.states[k].row_span(s)) out << ',' << format_double(v);
            out << '\n';
        }
    }
    if (!out) throw IoError("failed writing trajectory " + path.string());
}

} // namespace dfm
