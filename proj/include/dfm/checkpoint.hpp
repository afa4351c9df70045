#pragma once

#include "dfm/nn.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace dfm {

inline constexpr int kCheckpointVersion = 1;

/// JSON checkpoint. Doubles are written in shortest round-trip form, so
/// save followed by load reproduces parameters bit for bit.
struct Checkpoint {
    int version = kCheckpointVersion;
    std::string role; // "velocity" or "interpolant"
    nn::MlpParams net;
    std::optional<nn::AdamState> optimizer;
    std::uint64_t seed = 0;
    std::uint64_t iteration = 0;
    /// Role-specific settings (state dimension, interpolant time input, ...).
    nlohmann::json meta = nlohmann::json::object();
};

nlohmann::json checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace dfm
