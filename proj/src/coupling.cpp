#include "dfm/coupling.hpp"

#include "dfm/error.hpp"
#include "dfm/kernels.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace dfm {

void ConditionalDataset::validate() const {
    if (source.empty()) throw Error("dataset has no conditions");
    if (source.size() != target.size()) throw Error("dataset needs one source and one target set per condition");
    if (weights.size() != source.size()) throw Error("dataset needs one weight per condition");
    for (std::size_t q = 0; q < source.size(); ++q) {
        for (const Tensor* t : {&source[q], &target[q]}) {
            if (t->empty()) throw Error("condition " + std::to_string(q) + " has an empty sample set");
            if (t->cols() != dim) {
                throw ShapeError("condition " + std::to_string(q) + " samples have dim " + std::to_string(t->cols()) +
                                 ", dataset dim is " + std::to_string(dim));
            }
        }
        if (!(weights[q] >= 0.0)) throw Error("condition weights must be non-negative");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw Error("condition weights must sum to 1");
}

ConditionalDataset make_dataset(std::vector<Tensor> source, std::vector<Tensor> target) {
    ConditionalDataset d;
    d.dim = source.empty() ? 0 : source.front().cols();
    d.weights.assign(source.size(), source.empty() ? 0.0 : 1.0 / static_cast<double>(source.size()));
    d.source = std::move(source);
    d.target = std::move(target);
    d.validate();
    return d;
}

namespace {

void copy_row(const Tensor& from, std::size_t r, Tensor& to, std::size_t dst) {
    std::copy_n(from.data() + r * from.cols(), from.cols(), to.data() + dst * to.cols());
}

std::size_t draw_index(std::size_t n, std::mt19937_64& rng) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::size_t draw_condition(const std::vector<double>& weights, std::mt19937_64& rng) {
    return std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);
}

} // namespace

PairBatch independent_coupling(const ConditionalDataset& data, std::size_t q, std::size_t batch,
                               std::mt19937_64& rng) {
    if (q >= data.conditions()) throw Error("condition index " + std::to_string(q) + " out of range");
    if (batch == 0) throw Error("batch size must be positive");
    const Tensor& xs = data.source[q];
    const Tensor& ys = data.target[q];
    if (xs.empty() || ys.empty()) throw Error("condition " + std::to_string(q) + " is empty");
    PairBatch b{Tensor(batch, data.dim), Tensor(batch, data.dim), std::vector<std::size_t>(batch, q), 0};
    for (std::size_t i = 0; i < batch; ++i) {
        copy_row(xs, draw_index(xs.rows(), rng), b.x, i);
        copy_row(ys, draw_index(ys.rows(), rng), b.y, i);
    }
    return b;
}

PairBatch marginal_coupling(const ConditionalDataset& data, std::size_t batch, std::mt19937_64& rng) {
    if (batch == 0) throw Error("batch size must be positive");
    PairBatch b{Tensor(batch, data.dim), Tensor(batch, data.dim), std::vector<std::size_t>(batch), 0};
    for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t qx = draw_condition(data.weights, rng);
        copy_row(data.source[qx], draw_index(data.source[qx].rows(), rng), b.x, i);
        const std::size_t qy = draw_condition(data.weights, rng);
        copy_row(data.target[qy], draw_index(data.target[qy].rows(), rng), b.y, i);
        b.cond[i] = qx;
    }
    return b;
}

double pairing_cost(const Tensor& x, const Tensor& y) {
    if (!x.same_shape(y)) throw ShapeError("pairing cost needs equal shapes");
    double total = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = x(r, c) - y(r, c);
            s += d * d;
        }
        total += s;
    }
    return total;
}

PairBatch ot_coupling(const PairBatch& batch, bool per_condition) {
    if (batch.x.rows() != batch.y.rows()) {
        throw ShapeError("ot_coupling needs equal batch sizes, got " + std::to_string(batch.x.rows()) + " and " +
                         std::to_string(batch.y.rows()));
    }
    if (batch.x.cols() != batch.y.cols()) throw ShapeError("ot_coupling dims differ");
    const std::size_t n = batch.x.rows();
    std::vector<std::vector<std::size_t>> groups;
    if (per_condition) {
        std::size_t q_max = 0;
        for (auto q : batch.cond) q_max = std::max(q_max, q);
        groups.resize(q_max + 1);
        for (std::size_t i = 0; i < n; ++i) groups[batch.cond[i]].push_back(i);
    } else {
        groups.emplace_back(n);
        std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
    }
    PairBatch out = batch;
    for (const auto& rows : groups) {
        if (rows.empty()) continue;
        const Tensor xs = batch.x.gather_rows(rows);
        const Tensor ys = batch.y.gather_rows(rows);
        Tensor cost(rows.size(), rows.size());
        kernels::pairwise_sq_dist({xs.data(), xs.rows(), xs.cols()}, {ys.data(), ys.rows(), ys.cols()},
                                  {cost.data(), cost.rows(), cost.cols()});
        const auto perm = hungarian(cost);
        for (std::size_t k = 0; k < rows.size(); ++k) copy_row(ys, perm[k], out.y, rows[k]);
    }
    return out;
}

PairSampler::PairSampler(const ConditionalDataset& data, std::uint64_t seed)
    : data_(&data), seed_(seed), rng_(seed) {
    data.validate();
}

PairBatch PairSampler::independent(std::size_t q, std::size_t batch) {
    PairBatch b = independent_coupling(*data_, q, batch, rng_);
    b.seed = seed_;
    return b;
}

PairBatch PairSampler::marginal(std::size_t batch) {
    PairBatch b = marginal_coupling(*data_, batch, rng_);
    b.seed = seed_;
    return b;
}

std::size_t PairSampler::condition() { return draw_condition(data_->weights, rng_); }

Tensor PairSampler::times(std::size_t n) {
    Tensor t(n, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : t.values()) v = u(rng_);
    return t;
}

} // namespace dfm
