#pragma once

#include "dfm/coupling.hpp"
#include "dfm/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace dfm {

/// Isotropic Gaussian blobs, one per condition.
struct BlobSpec {
    std::size_t dim = 2;
    std::vector<std::vector<double>> means;
    double variance = 1.0;
    std::size_t samples = 2000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// "blobs2d": means (1,1), (1,-1); "blobs3d": (1,1,0), (1,-1,0); unit variance.
BlobSpec blob_preset(std::string_view name);

/// samples x dim draws per condition.
std::vector<Tensor> gen_blobs(const BlobSpec& spec);

/// Ground-truth translation y = -x.
Tensor apply_gstar(const Tensor& x);

/// Source rows with their ground-truth images, per condition.
struct PairedSplit {
    std::vector<Tensor> x;
    std::vector<Tensor> y;

    friend bool operator==(const PairedSplit&, const PairedSplit&) = default;
};

struct SyntheticData {
    ConditionalDataset train;
    PairedSplit eval;
};

/// Training sources, unpaired targets (g* applied to an independent source
/// draw) and a separate paired evaluation split.
SyntheticData make_blob_data(const BlobSpec& spec, std::size_t eval_per_condition = 500);

enum class BoxPairing {
    All,    // every unordered pair of distinct grid cells
    Mirror, // each cell with its point reflection through the grid center
};

struct SdcReport {
    std::size_t pairs = 0;
    std::size_t distinguished = 0;
    double fraction = 0.0;
};

/// Finite-box heuristic for the sufficiently-diverse condition: over a grid
/// of `resolution` cells per axis spanning the pooled source samples, counts
/// box pairs (A, B) for which some condition's empirical masses of A and B
/// differ by more than `tol`. Pairs with no pooled mass are skipped.
SdcReport sdc_check(const ConditionalDataset& data, std::size_t resolution, double tol = 0.02,
                    BoxPairing pairing = BoxPairing::All);

/// CSV `cond,domain,dim_0,...` with domain source or target.
void save_dataset(const std::filesystem::path& path, const ConditionalDataset& data);
ConditionalDataset load_dataset(const std::filesystem::path& path);

/// CSV `cond,x_0,...,y_0,...`.
void save_paired(const std::filesystem::path& path, const PairedSplit& split);
PairedSplit load_paired(const std::filesystem::path& path);

} // namespace dfm
