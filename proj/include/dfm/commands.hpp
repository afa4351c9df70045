#pragma once

#include "dfm/checkpoint.hpp"
#include "dfm/config.hpp"
#include "dfm/data.hpp"
#include "dfm/evaluate.hpp"
#include "dfm/flow.hpp"
#include "dfm/surface.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dfm {

/// Dataset, optional paired split and optional surface for one run.
struct RunData {
    ConditionalDataset train;
    std::optional<PairedSplit> paired;
    std::optional<PointCloud> surface;
};

/// Loads cfg.dataset (plus cfg.paired / cfg.surface), or generates the
/// preset's data with cfg.data_seed when no dataset path is set.
RunData load_run_data(const RunConfig& cfg);

Checkpoint velocity_checkpoint(const VelocityField& v, const nn::AdamState* opt, const TrainConfig& cfg);
Checkpoint interpolant_checkpoint(const LearnableInterpolant& g, const nn::AdamState* opt, const TrainConfig& cfg);
VelocityField velocity_from_checkpoint(const Checkpoint& ck);
LearnableInterpolant interpolant_from_checkpoint(const Checkpoint& ck);

/// Writes velocity.json, interpolant.json (when learned), per-condition
/// split checkpoints, train_log.csv and config.echo into `dir`.
void write_train_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const TrainResult& res);

struct GenOptions {
    /// blobs2d, blobs3d or swarm; ignored when spec_file is set.
    std::string preset = "blobs2d";
    /// JSON blob spec {dim, means, variance, samples}.
    std::filesystem::path spec_file;
    std::filesystem::path out_dir = "data";
    std::uint64_t seed = 0;
    /// 0 keeps the preset's sample count.
    std::size_t samples = 0;
    std::size_t eval_size = 500;
};

/// dataset.csv, eval_paired.csv (blobs) or surface.xyz (swarm), manifest.json.
void cmd_gen(const GenOptions& opt);

/// Trains per cfg and writes outputs under resolve_output(cfg.output_dir).
TrainResult cmd_train(const RunConfig& cfg);

struct TranslateOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path input;
    std::filesystem::path output;
    std::filesystem::path trajectory;
    /// 0 uses the checkpoint's ode_steps.
    std::size_t steps = 0;
    std::optional<OdeMethod> method;
};

/// Replaces the dim_* columns of each input row by its translation; other
/// columns pass through unchanged.
void cmd_translate(const TranslateOptions& opt);

struct EvalCommandOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path dataset;
    std::filesystem::path paired;
    std::filesystem::path surface;
    std::filesystem::path report = "report.json";
    std::filesystem::path csv;
    bool skip_te = false;
    std::size_t eval_size = 500;
    std::size_t steps = 0;
    std::optional<OdeMethod> method;
    std::uint64_t seed = 0;
};

EvalReport cmd_eval(const EvalCommandOptions& opt);

struct ReproduceOptions {
    /// table1-2d, table1-3d, fig-reflection or swarm.
    std::string experiment;
    std::filesystem::path out_dir = "results";
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    /// key=value settings applied to every run after the preset.
    std::vector<std::string> overrides;
    /// Method labels to run; empty runs the experiment's full list.
    std::vector<std::string> methods;
    bool verbose = true;
};

struct MethodSummary {
    std::string label;
    std::vector<EvalReport> reports;
};

/// Runs the experiment's methods over the seeds; writes runs.csv, table.csv,
/// trajectory CSVs and SVG figures under out_dir/experiment.
std::vector<MethodSummary> cmd_reproduce(const ReproduceOptions& opt);

/// Method labels available to an experiment.
std::vector<std::string> experiment_methods(const std::string& experiment);

} // namespace dfm
