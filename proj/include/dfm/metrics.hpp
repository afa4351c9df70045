#pragma once

#include "dfm/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dfm {

/// Minimum over bijections of the mean Euclidean pair distance. When sizes
/// differ the larger set is subsampled without replacement using `seed`.
double emd(const Tensor& a, const Tensor& b, std::uint64_t seed = 0);

/// Mean Euclidean distance between rows paired by index.
double translation_error(const Tensor& predicted, const Tensor& truth);

/// Fraction of rows whose nearest center (Euclidean) belongs to another
/// condition than the row's own. centers[q] is condition q's target center.
double cross_cluster_rate(const Tensor& predicted, const std::vector<std::size_t>& cond, const Tensor& centers);

/// 2 (z - E[x]) per row of z.
Tensor reflection_velocity_oracle(std::span<const double> mean_x, const Tensor& z);

struct EvalReport {
    std::string mode;
    std::uint64_t seed = 0;
    std::vector<double> emd_per_condition;
    double emd_mean = 0.0;
    std::optional<double> translation_error;
    std::optional<double> cross_cluster_rate;
    std::optional<double> surface_adherence;
    std::vector<std::size_t> samples_per_condition;
    nlohmann::json config = nlohmann::json::object();

    void validate() const;
};

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);
void save_report(const std::filesystem::path& path, const EvalReport& r);

/// Appends one CSV row (header written when the file is new or empty).
void append_report_csv(const std::filesystem::path& path, const EvalReport& r);

} // namespace dfm
