#include "dfm/error.hpp"
#include "dfm/flow.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace dfm;
using dfm::test::random_tensor;

namespace {

ConditionalDataset small_blobs(std::uint64_t seed) {
    auto shift = [](Tensor t, double a, double b) {
        for (std::size_t r = 0; r < t.rows(); ++r) {
            t(r, 0) += a;
            t(r, 1) += b;
        }
        return t;
    };
    return make_dataset({shift(random_tensor(64, 2, seed), 1, 1), shift(random_tensor(64, 2, seed + 1), 1, -1)},
                        {shift(random_tensor(64, 2, seed + 2), -1, -1), shift(random_tensor(64, 2, seed + 3), -1, 1)});
}

TrainConfig tiny(TrainMode mode) {
    TrainConfig c;
    c.mode = mode;
    c.iterations = 12;
    c.interp_iterations = 8;
    c.batch = 16;
    c.hidden = {8, 8};
    c.kernel.sigma1 = 0.5;
    return c;
}

Tensor column(std::size_t n, double start) {
    Tensor t(n, 1);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::fmod(start + 0.137 * static_cast<double>(i), 1.0);
    return t;
}

} // namespace

TEST_CASE("FM loss gradient in the velocity parameters matches finite differences") {
    const VelocityField v = velocity_init(2, {5, 5}, 1);
    const Tensor z = random_tensor(6, 2, 2);
    const Tensor target = random_tensor(6, 2, 3);
    const Tensor t = column(6, 0.1);
    auto f = [&](std::span<const double> flat, std::span<double> g) {
        nn::MlpParams p = v.net;
        p.unflatten(flat);
        ad::Tape tape;
        const auto b = nn::bind(tape, p);
        const ad::Var loss = fm_loss_on_path(b, tape.constant(z), tape.constant(target), t);
        if (!g.empty()) {
            tape.backward(loss);
            const auto gr = nn::gradients(b).flatten();
            std::copy(gr.begin(), gr.end(), g.begin());
        }
        return loss.value().item();
    };
    CHECK(ad::finite_diff_check(f, v.net.flatten(), 1e-6) < 1e-3);
}

TEST_CASE("FM loss on a learned path differentiates through the interpolant") {
    const VelocityField v = velocity_init(2, {5}, 1);
    const LearnableInterpolant g = interpolant_init(2, {5}, 2);
    const Tensor x = random_tensor(6, 2, 3), y = random_tensor(6, 2, 4);
    const Tensor t = column(6, 0.05);
    auto f = [&](std::span<const double> flat, std::span<double> grad) {
        LearnableInterpolant h = g;
        h.gamma.unflatten(flat);
        ad::Tape tape;
        const auto bv = nn::bind(tape, v.net, false);
        const auto bi = bind(tape, h);
        const auto p = interp_path(bi, tape.constant(x), tape.constant(y), t, 1e-3);
        const ad::Var loss = fm_loss_on_path(bv, p.z, p.dz, t);
        if (!grad.empty()) {
            tape.backward(loss);
            const auto gr = nn::gradients(bi.net).flatten();
            std::copy(gr.begin(), gr.end(), grad.begin());
        }
        return loss.value().item();
    };
    CHECK(ad::finite_diff_check(f, g.gamma.flatten(), 1e-6) < 1e-3);
}

TEST_CASE("the velocity phase gives the interpolant exactly zero gradient") {
    const VelocityField v = velocity_init(2, {5}, 1);
    const LearnableInterpolant g = interpolant_init(2, {5}, 2);
    PairBatch pairs{random_tensor(8, 2, 3), random_tensor(8, 2, 4), std::vector<std::size_t>(8, 0), 0};
    ad::Tape tape;
    const auto bi = bind(tape, g);
    const auto bv = nn::bind(tape, v.net);
    tape.backward(fm_loss(tape, bv, &g, pairs, column(8, 0.2), 1e-3));
    for (double d : nn::gradients(bi.net).flatten()) CHECK(d == 0.0);
    double norm = 0.0;
    for (double d : nn::gradients(bv).flatten()) norm += d * d;
    CHECK(norm > 0.0);
}

TEST_CASE("linear FM targets are y - x") {
    const VelocityField v = velocity_init(2, {4}, 1);
    PairBatch pairs{Tensor::from_rows({{0, 0}}), Tensor::from_rows({{1, 2}}), {0}, 0};
    ad::Tape tape;
    const auto bv = nn::bind(tape, v.net, false);
    const Tensor t(1, 1, 0.25);
    const double loss = fm_loss(tape, bv, nullptr, pairs, t, 1e-3).value().item();
    const Tensor pred = velocity_eval(v, Tensor::from_rows({{0.25, 0.5}}), 0.25);
    CHECK(loss == doctest::Approx(std::pow(pred[0] - 1, 2) + std::pow(pred[1] - 2, 2)).epsilon(1e-12));
}

TEST_CASE("training is deterministic for every mode") {
    const auto data = small_blobs(10);
    for (auto mode : {TrainMode::DfmTwoPhase, TrainMode::DfmInterleaved, TrainMode::Fm, TrainMode::FmCond,
                      TrainMode::FmOt, TrainMode::FmCondOt, TrainMode::Split}) {
        CAPTURE(train_mode_name(mode));
        const auto a = train(tiny(mode), data);
        const auto b = train(tiny(mode), data);
        CHECK(a.velocity.net == b.velocity.net);
        CHECK(a.log.size() == b.log.size());
        const bool shared_interp = mode == TrainMode::DfmTwoPhase || mode == TrainMode::DfmInterleaved;
        CHECK(a.interpolant.has_value() == shared_interp);
        auto other = tiny(mode);
        other.seed = 1;
        CHECK_FALSE(train(other, data).velocity.net == a.velocity.net);
    }
}

TEST_CASE("two-phase training leaves the interpolant alone in phase two") {
    const auto data = small_blobs(20);
    auto c1 = tiny(TrainMode::DfmTwoPhase);
    auto c2 = c1;
    c2.iterations = 30;
    const auto a = train(c1, data);
    const auto b = train(c2, data);
    REQUIRE(a.interpolant);
    CHECK(a.interpolant->gamma == b.interpolant->gamma);
    CHECK(a.log.size() == c1.interp_iterations + c1.iterations);
    CHECK(std::isnan(a.log.back().loss_interp));
    CHECK(std::isnan(a.log.front().loss_fm));
}

TEST_CASE("interleaved training updates both networks every step") {
    const auto data = small_blobs(30);
    auto c = tiny(TrainMode::DfmInterleaved);
    const auto a = train(c, data);
    c.iterations = 13;
    const auto b = train(c, data);
    CHECK_FALSE(a.interpolant->gamma == b.interpolant->gamma);
    for (const auto& row : a.log) {
        CHECK(std::isfinite(row.loss_interp));
        CHECK(std::isfinite(row.loss_fm));
    }
}

TEST_CASE("split training keeps one private model pair per condition") {
    const auto data = small_blobs(40);
    const auto r = train(tiny(TrainMode::Split), data);
    REQUIRE(r.split);
    CHECK(r.split->velocities.size() == 2);
    CHECK(r.split->interpolants.size() == 2);
    const auto one = make_dataset({data.source[0]}, {data.target[0]});
    CHECK_NOTHROW(train(tiny(TrainMode::Split), one));
    CHECK_THROWS(train(tiny(TrainMode::DfmTwoPhase), one));
}

TEST_CASE("non-finite training data stops with a diagnostic") {
    auto data = small_blobs(50);
    for (double& v : data.target[0].values()) v *= 1e200;
    try {
        train(tiny(TrainMode::FmCond), data);
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(std::string(e.what()).size() > 10);
    }
}

TEST_CASE("config validation and mode names") {
    for (auto name : {"dfm-two-phase", "dfm-interleaved", "fm", "fm-cond", "fm-ot", "fm-cond-ot", "split"}) {
        CHECK(train_mode_name(parse_train_mode(name)) == name);
    }
    CHECK_THROWS_AS(parse_train_mode("dfm"), ConfigError);
    auto c = tiny(TrainMode::FmCond);
    c.batch = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny(TrainMode::FmCond);
    c.condition_weights = {1.0};
    CHECK_THROWS_AS(train(c, small_blobs(1)), ConfigError);
}

TEST_CASE("derived seeds are distinct across streams") {
    CHECK(derive_seed(0, 1) != derive_seed(0, 2));
    CHECK(derive_seed(0, 1) != derive_seed(1, 1));
    CHECK(derive_seed(5, 7) == derive_seed(5, 7));
}
