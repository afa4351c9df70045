#pragma once

#include "dfm/tensor.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace dfm {

/// Per-condition source and target samples. source[q] is [n_q, d],
/// target[q] is [m_q, d]; weights[q] is the probability of condition q.
struct ConditionalDataset {
    std::size_t dim = 0;
    std::vector<Tensor> source;
    std::vector<Tensor> target;
    std::vector<double> weights;

    std::size_t conditions() const noexcept { return source.size(); }
    /// Throws on empty conditions, mismatched dims, or weights not summing to 1.
    void validate() const;

    friend bool operator==(const ConditionalDataset&, const ConditionalDataset&) = default;
};

/// Builds a dataset with uniform condition weights and validates it.
ConditionalDataset make_dataset(std::vector<Tensor> source, std::vector<Tensor> target);

struct PairBatch {
    Tensor x;
    Tensor y;
    std::vector<std::size_t> cond;
    std::uint64_t seed = 0;
};

/// Rows drawn independently, with replacement, from X_q and Y_q.
PairBatch independent_coupling(const ConditionalDataset& data, std::size_t q, std::size_t batch,
                               std::mt19937_64& rng);

/// Unconditional product coupling: x from the source mixture and y from the
/// target mixture, each picking its condition by the dataset weights.
/// cond records the condition of x.
PairBatch marginal_coupling(const ConditionalDataset& data, std::size_t batch, std::mt19937_64& rng);

/// Minimum-cost assignment: result[i] is the column assigned to row i.
/// Among optimal assignments the lexicographically smallest is returned.
std::vector<std::size_t> hungarian(const Tensor& cost);

/// Sum of cost(i, perm[i]) accumulated in row order.
double assignment_cost(const Tensor& cost, const std::vector<std::size_t>& perm);

/// Re-pairs y against x by exact assignment on squared Euclidean cost.
/// With `per_condition` set, matching happens separately inside each
/// condition so that pairs never mix conditions.
PairBatch ot_coupling(const PairBatch& batch, bool per_condition = false);

/// Total squared Euclidean cost of the pairing as given.
double pairing_cost(const Tensor& x, const Tensor& y);

/// Owns the sampling RNG of one training loop.
class PairSampler {
public:
    PairSampler(const ConditionalDataset& data, std::uint64_t seed);

    PairBatch independent(std::size_t q, std::size_t batch);
    PairBatch marginal(std::size_t batch);
    /// Condition index drawn by the dataset weights.
    std::size_t condition();
    /// Column of n times i.i.d. uniform on [0,1].
    Tensor times(std::size_t n);
    std::mt19937_64& rng() noexcept { return rng_; }

private:
    const ConditionalDataset* data_;
    std::uint64_t seed_;
    std::mt19937_64 rng_;
};

} // namespace dfm
