#include "dfm/evaluate.hpp"

#include "dfm/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace dfm {

namespace {

Tensor take(const Tensor& a, std::size_t n, std::uint64_t seed) {
    if (a.rows() <= n) return a;
    std::vector<std::size_t> idx(a.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return a.gather_rows(idx);
}

} // namespace

Tensor target_centers(const ConditionalDataset& data) {
    Tensor c(data.conditions(), data.dim, 0.0);
    for (std::size_t q = 0; q < data.conditions(); ++q) {
        const Tensor& y = data.target[q];
        for (std::size_t r = 0; r < y.rows(); ++r) {
            for (std::size_t k = 0; k < data.dim; ++k) c(q, k) += y(r, k);
        }
        for (std::size_t k = 0; k < data.dim; ++k) c(q, k) /= static_cast<double>(y.rows());
    }
    return c;
}

EvalReport evaluate_model(const VelocityField& v, const ConditionalDataset& data, const PairedSplit* paired,
                          const XyGrid* surface, const EvalOptions& opt) {
    data.validate();
    if (v.dim != data.dim) {
        throw ShapeError("checkpoint dimension " + std::to_string(v.dim) + " does not match dataset dimension " +
                         std::to_string(data.dim));
    }
    if (opt.eval_size == 0) throw ConfigError("eval_size must be positive");
    if (!paired && opt.want_te) throw ConfigError("translation error requested but no paired split was given");
    const std::size_t Q = data.conditions();
    if (paired && (paired->x.size() != Q || paired->y.size() != Q)) {
        throw ShapeError("paired split has " + std::to_string(paired->x.size()) + " conditions, dataset has " +
                         std::to_string(Q));
    }
    if (surface && data.dim != 3) throw ShapeError("surface adherence needs 3-D states");

    EvalReport rep;
    rep.seed = opt.seed;
    const Tensor centers = target_centers(data);
    std::vector<Tensor> preds;
    std::vector<std::size_t> conds;
    double te_sum = 0.0;
    std::size_t te_rows = 0;
    double sa_sum = 0.0;
    std::size_t sa_rows = 0;
    for (std::size_t q = 0; q < Q; ++q) {
        Tensor x;
        Tensor y_true;
        if (paired) {
            const std::size_t n = std::min(opt.eval_size, paired->x[q].rows());
            x = paired->x[q].slice_rows(0, n);
            y_true = paired->y[q].slice_rows(0, n);
        } else {
            x = take(data.source[q], opt.eval_size, derive_seed(opt.seed, 300 + q));
        }
        Tensor pred;
        if (surface) {
            const Trajectory traj = integrate(v, x, opt.steps, opt.method);
            sa_sum += surface_adherence(traj, *surface) * static_cast<double>(x.rows());
            sa_rows += x.rows();
            pred = traj.end();
        } else {
            pred = translate(v, x, opt.steps, opt.method);
        }
        const Tensor ref = take(data.target[q], pred.rows(), derive_seed(opt.seed, 400 + q));
        rep.emd_per_condition.push_back(emd(pred, ref, derive_seed(opt.seed, 500 + q)));
        rep.samples_per_condition.push_back(pred.rows());
        if (paired) {
            te_sum += translation_error(pred, y_true) * static_cast<double>(pred.rows());
            te_rows += pred.rows();
        }
        conds.insert(conds.end(), pred.rows(), q);
        preds.push_back(std::move(pred));
    }
    rep.emd_mean = std::accumulate(rep.emd_per_condition.begin(), rep.emd_per_condition.end(), 0.0) /
                   static_cast<double>(Q);
    if (paired) rep.translation_error = te_sum / static_cast<double>(te_rows);
    rep.cross_cluster_rate = cross_cluster_rate(vstack(preds), conds, centers);
    if (surface) rep.surface_adherence = sa_sum / static_cast<double>(sa_rows);
    rep.validate();
    return rep;
}

} // namespace dfm
