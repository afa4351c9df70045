#include "dfm/error.hpp"
#include "dfm/ode.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace dfm;

namespace {

Tensor identity_field(const Tensor& z, double) { return z; }

double endpoint(std::size_t steps, OdeMethod m) {
    return integrate_endpoint(identity_field, Tensor(1, 1, 1.0), steps, m)[0];
}

} // namespace

TEST_CASE("Euler and RK4 match their closed forms on dz/dt = z") {
    CHECK(endpoint(100, OdeMethod::Euler) == doctest::Approx(std::pow(1.01, 100)).epsilon(1e-13));
    const double k = 1.0 + 0.01 + 0.01 * 0.01 / 2 + std::pow(0.01, 3) / 6 + std::pow(0.01, 4) / 24;
    CHECK(endpoint(100, OdeMethod::Rk4) == doctest::Approx(std::pow(k, 100)).epsilon(1e-13));
}

TEST_CASE("Euler is first order and RK4 is accurate") {
    const double e100 = std::abs(endpoint(100, OdeMethod::Euler) - std::exp(1.0));
    const double e200 = std::abs(endpoint(200, OdeMethod::Euler) - std::exp(1.0));
    CHECK(e100 / e200 == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::abs(endpoint(100, OdeMethod::Rk4) - std::exp(1.0)) < 1e-6);
}

TEST_CASE("time-dependent field uses the right stage times") {
    // dz/dt = t gives z(1) = 1/2; RK4 is exact on polynomials of degree <= 3.
    const VelocityFn f = [](const Tensor& z, double t) { return Tensor(z.rows(), z.cols(), t); };
    CHECK(integrate_endpoint(f, Tensor(2, 1, 0.0), 7, OdeMethod::Rk4)[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(integrate_endpoint(f, Tensor(2, 1, 0.0), 4, OdeMethod::Euler)[0] == doctest::Approx(0.375));
}

TEST_CASE("trajectory grid and CSV layout") {
    const Trajectory tr = integrate(identity_field, Tensor::from_rows({{1, 2}, {3, 4}}), 5, OdeMethod::Euler);
    REQUIRE(tr.states.size() == 6);
    CHECK(tr.times.front() == 0.0);
    CHECK(tr.times.back() == 1.0);
    CHECK(tr.start() == Tensor::from_rows({{1, 2}, {3, 4}}));
    CHECK(tr.end() == integrate_endpoint(identity_field, tr.start(), 5, OdeMethod::Euler));
    const auto path = std::filesystem::temp_directory_path() / "dfm_traj.csv";
    write_trajectory_csv(path, tr);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "sample_id,t,dim_0,dim_1");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2 * 6);
    std::filesystem::remove(path);
}

TEST_CASE("zero steps, bad methods and blow-ups are reported") {
    CHECK_THROWS(integrate(identity_field, Tensor(1, 1, 1.0), 0, OdeMethod::Euler));
    CHECK_THROWS_AS(parse_ode_method("midpoint"), ConfigError);
    const VelocityFn bad = [](const Tensor& z, double t) {
        Tensor v = z;
        if (t > 0.4) v[0] = std::numeric_limits<double>::infinity();
        return v;
    };
    try {
        integrate(bad, Tensor(1, 1, 1.0), 10, OdeMethod::Euler);
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}
