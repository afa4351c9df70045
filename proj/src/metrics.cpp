#include "dfm/metrics.hpp"

#include "dfm/coupling.hpp"
#include "dfm/error.hpp"
#include "dfm/io.hpp"
#include "dfm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace dfm {

namespace {

Tensor subsample(const Tensor& a, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(a.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return a.gather_rows(idx);
}

} // namespace

double emd(const Tensor& a, const Tensor& b, std::uint64_t seed) {
    if (a.empty() || b.empty()) throw Error("emd of an empty set");
    if (a.cols() != b.cols()) throw ShapeError("emd sets differ in dimension");
    const std::size_t n = std::min(a.rows(), b.rows());
    const Tensor as = a.rows() > n ? subsample(a, n, seed) : a;
    const Tensor bs = b.rows() > n ? subsample(b, n, seed) : b;
    Tensor cost(n, n);
    kernels::pairwise_dist({as.data(), n, as.cols()}, {bs.data(), n, bs.cols()}, {cost.data(), n, n});
    const auto perm = hungarian(cost);
    return assignment_cost(cost, perm) / static_cast<double>(n);
}

double translation_error(const Tensor& predicted, const Tensor& truth) {
    if (!predicted.same_shape(truth)) {
        throw ShapeError("translation error needs paired sets of equal shape, got " + predicted.shape_string() +
                         " and " + truth.shape_string());
    }
    double total = 0.0;
    for (std::size_t r = 0; r < truth.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < truth.cols(); ++c) {
            const double d = predicted(r, c) - truth(r, c);
            s += d * d;
        }
        total += std::sqrt(s);
    }
    return total / static_cast<double>(truth.rows());
}

double cross_cluster_rate(const Tensor& predicted, const std::vector<std::size_t>& cond, const Tensor& centers) {
    if (cond.size() != predicted.rows()) throw ShapeError("cross_cluster_rate needs one condition per row");
    if (centers.cols() != predicted.cols()) throw ShapeError("cluster centers differ in dimension");
    std::size_t wrong = 0;
    for (std::size_t r = 0; r < predicted.rows(); ++r) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < centers.rows(); ++q) {
            double s = 0.0;
            for (std::size_t c = 0; c < centers.cols(); ++c) {
                const double d = predicted(r, c) - centers(q, c);
                s += d * d;
            }
            if (s < best_d) {
                best_d = s;
                best = q;
            }
        }
        if (best != cond[r]) ++wrong;
    }
    return predicted.rows() ? static_cast<double>(wrong) / static_cast<double>(predicted.rows()) : 0.0;
}

Tensor reflection_velocity_oracle(std::span<const double> mean_x, const Tensor& z) {
    if (mean_x.size() != z.cols()) throw ShapeError("reflection oracle mean has the wrong dimension");
    Tensor out(z.rows(), z.cols());
    for (std::size_t r = 0; r < z.rows(); ++r) {
        for (std::size_t c = 0; c < z.cols(); ++c) out(r, c) = 2.0 * (z(r, c) - mean_x[c]);
    }
    return out;
}

void EvalReport::validate() const {
    auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    for (double v : emd_per_condition) {
        if (!nonneg(v)) throw Error("EMD must be finite and non-negative");
    }
    if (translation_error && !nonneg(*translation_error)) throw Error("TE must be finite and non-negative");
    if (cross_cluster_rate && !(*cross_cluster_rate >= 0.0 && *cross_cluster_rate <= 1.0)) {
        throw Error("cross-cluster rate must lie in [0,1]");
    }
    if (surface_adherence && !nonneg(*surface_adherence)) throw Error("SA must be finite and non-negative");
}

nlohmann::json report_to_json(const EvalReport& r) {
    r.validate();
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return json{{"mode", r.mode},
                {"seed", r.seed},
                {"emd_per_condition", r.emd_per_condition},
                {"emd_mean", r.emd_mean},
                {"translation_error", opt(r.translation_error)},
                {"cross_cluster_rate", opt(r.cross_cluster_rate)},
                {"surface_adherence", opt(r.surface_adherence)},
                {"samples_per_condition", r.samples_per_condition},
                {"config", r.config}};
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    auto opt = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<double>();
    };
    r.mode = j.at("mode").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.emd_per_condition = j.at("emd_per_condition").get<std::vector<double>>();
    r.emd_mean = j.at("emd_mean").get<double>();
    r.translation_error = opt("translation_error");
    r.cross_cluster_rate = opt("cross_cluster_rate");
    r.surface_adherence = opt("surface_adherence");
    r.samples_per_condition = j.at("samples_per_condition").get<std::vector<std::size_t>>();
    r.config = j.value("config", nlohmann::json::object());
    return r;
}

void save_report(const std::filesystem::path& path, const EvalReport& r) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path.string());
    out << report_to_json(r).dump(2) << '\n';
    if (!out) throw IoError("failed writing report " + path.string());
}

void append_report_csv(const std::filesystem::path& path, const EvalReport& r) {
    r.validate();
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot append to " + path.string());
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    if (fresh) out << "mode,seed,emd_mean,translation_error,cross_cluster_rate,surface_adherence\n";
    out << r.mode << ',' << r.seed << ',' << format_double(r.emd_mean) << ',' << opt(r.translation_error) << ','
        << opt(r.cross_cluster_rate) << ',' << opt(r.surface_adherence) << '\n';
}

} // namespace dfm
