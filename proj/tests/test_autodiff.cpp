#include "dfm/autodiff.hpp"
#include "dfm/error.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

using namespace dfm;
using dfm::test::check_op;
using dfm::test::random_tensor;

TEST_CASE("elementary ops match central differences") {
    const Tensor a = random_tensor(3, 4, 1);
    const Tensor b = random_tensor(3, 4, 2);
    const double tol = 1e-4;
    CHECK(check_op({a, b}, [](ad::Tape&, const auto& v) { return ad::add(v[0], v[1]); }) < tol);
    CHECK(check_op({a, b}, [](ad::Tape&, const auto& v) { return ad::sub(v[0], v[1]); }) < tol);
    CHECK(check_op({a, b}, [](ad::Tape&, const auto& v) { return ad::mul(v[0], v[1]); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::scale(v[0], -2.5); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::add_scalar(v[0], 0.7); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::selu(v[0]); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::exp(v[0]); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::square(v[0]); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::sum(v[0]); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::sum(v[0], ad::Axis::Rows); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::mean(v[0]); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::mean(v[0], ad::Axis::Rows); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::squared_norm(v[0]); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::squared_norm(v[0], ad::Axis::Rows); }) < tol);
    CHECK(check_op({a}, [](ad::Tape&, const auto& v) { return ad::max_const(v[0], 0.1); }) < tol);
    CHECK(check_op({a, b}, [](ad::Tape&, const auto& v) { return ad::concat(std::vector{v[0], v[1]}); }) < tol);
    CHECK(check_op({random_tensor(3, 1, 3)}, [](ad::Tape&, const auto& v) { return ad::repeat_cols(v[0], 4); }) <
          tol);
    const Tensor m = random_tensor(4, 2, 4);
    CHECK(check_op({a, m}, [](ad::Tape&, const auto& v) { return ad::matmul(v[0], v[1]); }) < tol);
    const Tensor w = random_tensor(5, 4, 5);
    const Tensor bias = random_tensor(1, 5, 6);
    CHECK(check_op({a, w, bias}, [](ad::Tape&, const auto& v) { return ad::linear(v[0], v[1], v[2]); }) < tol);
}

TEST_CASE("every registered op has a name and forward accepts it") {
    std::set<std::string_view> names;
    for (auto k : ad::registered_ops()) names.insert(ad::op_name(k));
    CHECK(names.size() == ad::registered_ops().size());
    CHECK(ad::registered_ops().size() == 15);
}

TEST_CASE("gradients accumulate over fan-out") {
    ad::Tape tape;
    const ad::Var x = tape.leaf(Tensor::scalar(3.0));
    const ad::Var y = ad::add(ad::mul(x, x), x); // x^2 + x
    tape.backward(y);
    CHECK(x.grad().item() == doctest::Approx(7.0));
    // A second backward on the same tape starts from zero again.
    tape.backward(y);
    CHECK(x.grad().item() == doctest::Approx(7.0));
}

TEST_CASE("constants and detached values receive no gradient") {
    ad::Tape tape;
    const ad::Var x = tape.leaf(Tensor::scalar(2.0));
    const ad::Var d = tape.detach(x);
    const ad::Var y = ad::mul(x, d);
    tape.backward(y);
    CHECK(x.grad().item() == doctest::Approx(2.0));
    CHECK_FALSE(tape.requires_grad(d));
}

TEST_CASE("shape errors name the op") {
    ad::Tape tape;
    const ad::Var a = tape.leaf(Tensor(2, 3));
    const ad::Var b = tape.leaf(Tensor(3, 2));
    try {
        ad::add(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("add") != std::string::npos);
    }
    CHECK_THROWS_AS(ad::matmul(a, a), ShapeError);
}

TEST_CASE("non-finite values are rejected") {
    ad::Tape tape;
    const ad::Var a = tape.leaf(Tensor::scalar(800.0));
    CHECK_THROWS_AS(ad::exp(a), NonFiniteError);
    CHECK_THROWS_AS(tape.leaf(Tensor::scalar(std::numeric_limits<double>::quiet_NaN())), NonFiniteError);
}

TEST_CASE("backward needs a single-element root") {
    ad::Tape tape;
    const ad::Var a = tape.leaf(Tensor(2, 2, 1.0));
    CHECK_THROWS_AS(tape.backward(a), ShapeError);
}

TEST_CASE("selu matches its closed form") {
    CHECK(ad::selu_value(1.0) == doctest::Approx(ad::kSeluLambda));
    CHECK(ad::selu_value(-1.0) == doctest::Approx(ad::kSeluLambda * ad::kSeluAlpha * (std::exp(-1.0) - 1.0)));
    CHECK(ad::selu_value(0.0) == 0.0);
}

TEST_CASE("finite difference check flags a wrong gradient") {
    const std::vector<double> p{0.3, -1.2};
    auto wrong = [](std::span<const double> x, std::span<double> g) {
        if (!g.empty()) {
            g[0] = 3.0 * x[0];
            g[1] = 2.0 * x[1];
        }
        return x[0] * x[0] + x[1] * x[1];
    };
    CHECK(ad::finite_diff_check(wrong, p, 1e-6) > 0.1);
}
