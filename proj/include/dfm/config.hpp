#pragma once

#include "dfm/flow.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace dfm {

/// Everything a train/eval run needs. Values come from, in increasing
/// precedence: built-in defaults, the preset's defaults, the config file,
/// then command-line overrides.
struct RunConfig {
    TrainConfig train;
    /// blobs2d, blobs3d or swarm; empty when `dataset` is given.
    std::string preset;
    std::filesystem::path dataset;
    std::filesystem::path paired;
    std::filesystem::path surface;
    std::filesystem::path output_dir = "run";
    std::size_t eval_size = 500;
    /// Generation settings used when the dataset comes from a preset.
    std::size_t samples = 2000;
    std::uint64_t data_seed = 0;
};

/// Applies the preset's training defaults (bandwidths, network size, weights).
void apply_preset_defaults(RunConfig& cfg, std::string_view preset);

/// Sets one key. Unknown keys and malformed values throw ConfigError.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Reads `key = value` lines ('#' comments, blank lines ignored). A `preset`
/// key, wherever it appears, is applied first so file values override it.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Parses "key=value" (used for --set flags).
void apply_override(RunConfig& cfg, std::string_view assignment);

/// Complete canonical listing; feeding it back reproduces the config.
std::string config_echo(const RunConfig& cfg);

/// Resolves a relative output path under $DFM_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& p);

} // namespace dfm
