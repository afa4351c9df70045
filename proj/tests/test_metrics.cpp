#include "dfm/coupling.hpp"
#include "dfm/error.hpp"
#include "dfm/evaluate.hpp"
#include "dfm/metrics.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace dfm;
using dfm::test::random_tensor;

namespace {

double brute_emd(const Tensor& a, const Tensor& b) {
    std::vector<std::size_t> p(a.rows());
    std::iota(p.begin(), p.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            double d = 0.0;
            for (std::size_t c = 0; c < a.cols(); ++c) d += std::pow(a(i, c) - b(p[i], c), 2);
            s += std::sqrt(d);
        }
        best = std::min(best, s);
    } while (std::next_permutation(p.begin(), p.end()));
    return best / static_cast<double>(a.rows());
}

} // namespace

TEST_CASE("EMD equals the exhaustive optimum on small sets") {
    for (std::uint64_t s = 0; s < 40; ++s) {
        const std::size_t n = 1 + s % 7;
        const Tensor a = random_tensor(n, 2, 10 + s);
        const Tensor b = random_tensor(n, 2, 20 + s);
        CHECK(emd(a, b) == doctest::Approx(brute_emd(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("EMD basics") {
    const Tensor a = random_tensor(30, 3, 1);
    CHECK(emd(a, a) == 0.0);
    Tensor shifted = a;
    for (std::size_t r = 0; r < 30; ++r) shifted(r, 0) += 2.0;
    // A pure translation is optimally matched to itself.
    CHECK(emd(a, shifted) == doctest::Approx(2.0));
    CHECK(emd(a, random_tensor(30, 3, 2)) == doctest::Approx(emd(random_tensor(30, 3, 2), a)));
    const Tensor big = random_tensor(50, 3, 3);
    CHECK(emd(a, big, 4) == emd(a, big, 4));
    CHECK_THROWS_AS(emd(a, random_tensor(5, 2, 1)), ShapeError);
}

TEST_CASE("translation error and cross-cluster rate") {
    const Tensor t = Tensor::from_rows({{0, 0}, {1, 1}});
    CHECK(translation_error(Tensor::from_rows({{3, 4}, {1, 1}}), t) == doctest::Approx(2.5));
    CHECK_THROWS_AS(translation_error(Tensor(3, 2), t), ShapeError);
    const Tensor centers = Tensor::from_rows({{-1, -1}, {-1, 1}});
    const Tensor pred = Tensor::from_rows({{-1, -0.5}, {-1, 0.2}, {-1, 3}, {0, -2}});
    CHECK(cross_cluster_rate(pred, {0, 0, 1, 1}, centers) == doctest::Approx(0.5));
}

TEST_CASE("reflection oracle: blobs at (1,1),(1,-1), z = 0 gives (-2, 0)") {
    const std::vector<double> mean{1.0, 0.0};
    const Tensor v = reflection_velocity_oracle(mean, Tensor::from_rows({{0, 0}}));
    CHECK(v == Tensor::from_rows({{-2, 0}}));
}

TEST_CASE("reports round-trip and validate") {
    EvalReport r;
    r.mode = "dfm-two-phase";
    r.seed = 3;
    r.emd_per_condition = {0.25, 1.0 / 3.0};
    r.emd_mean = (0.25 + 1.0 / 3.0) / 2;
    r.translation_error = 2.0;
    r.cross_cluster_rate = 0.1;
    r.samples_per_condition = {500, 500};
    const EvalReport back = report_from_json(report_to_json(r));
    CHECK(back.emd_per_condition == r.emd_per_condition);
    CHECK(back.translation_error == r.translation_error);
    CHECK_FALSE(back.surface_adherence.has_value());
    r.cross_cluster_rate = 1.5;
    CHECK_THROWS(r.validate());

    r.cross_cluster_rate = 0.0;
    const auto csv = std::filesystem::temp_directory_path() / "dfm_reports.csv";
    std::filesystem::remove(csv);
    append_report_csv(csv, r);
    append_report_csv(csv, r);
    std::ifstream in(csv);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    CHECK(n == 3);
    std::filesystem::remove(csv);
}

TEST_CASE("an oracle velocity field scores TE near zero") {
    // v(z, t) = -2 x along the straight path z = (1 - 2t) x, i.e. v = -2 z / (1 - 2t),
    // is singular at t = 1/2; use the equivalent rotation through 180 degrees instead.
    // Rotation by pi t: v = pi J z with J = [[0,-1],[1,0]] maps x to -x.
    VelocityField v;
    v.dim = 2;
    v.net = nn::mlp_zeros({3, 2, 2});
    // Hidden SeLU units are linear for positive inputs; shift them positive and back.
    v.net.weights[0] = Tensor::from_rows({{1, 0, 0}, {0, 1, 0}});
    v.net.biases[0] = Tensor::row({50, 50});
    const double l = ad::kSeluLambda;
    v.net.weights[1] = Tensor::from_rows({{0, -M_PI / l}, {M_PI / l, 0}});
    v.net.biases[1] = Tensor::row({M_PI * 50, -M_PI * 50});
    const auto data = make_dataset({random_tensor(200, 2, 1)}, {random_tensor(200, 2, 2)});
    PairedSplit split{{random_tensor(200, 2, 3)}, {}};
    split.y.push_back(split.x[0]);
    for (double& x : split.y[0].values()) x = -x;
    EvalOptions opt;
    opt.steps = 200;
    opt.method = OdeMethod::Rk4;
    const EvalReport r = evaluate_model(v, data, &split, nullptr, opt);
    REQUIRE(r.translation_error);
    CHECK(*r.translation_error < 0.05);
    CHECK_THROWS_AS(evaluate_model(v, data, nullptr, nullptr, opt), ConfigError);
    opt.want_te = false;
    CHECK_FALSE(evaluate_model(v, data, nullptr, nullptr, opt).translation_error.has_value());
}
