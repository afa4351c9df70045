#pragma once

#include "dfm/data.hpp"
#include "dfm/flow.hpp"
#include "dfm/metrics.hpp"
#include "dfm/surface.hpp"

#include <cstdint>

namespace dfm {

struct EvalOptions {
    std::size_t eval_size = 500;
    std::size_t steps = 100;
    OdeMethod method = OdeMethod::Euler;
    std::uint64_t seed = 0;
    /// Throw when no paired split is supplied instead of skipping TE.
    bool want_te = true;
};

/// Translates up to eval_size sources per condition (the paired split's x
/// when given, otherwise a seeded subsample of the dataset's sources) and
/// scores them against the dataset targets. SA needs 3-D states and a surface.
EvalReport evaluate_model(const VelocityField& v, const ConditionalDataset& data, const PairedSplit* paired,
                          const XyGrid* surface, const EvalOptions& opt);

/// Per-condition target means, one row per condition.
Tensor target_centers(const ConditionalDataset& data);

} // namespace dfm
