#include "dfm/flow.hpp"

#include "dfm/error.hpp"
#include "dfm/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

namespace dfm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Tensor with_time(const Tensor& z, const Tensor& t) {
    Tensor input(z.rows(), z.cols() + 1);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = input.row_span(r);
        std::copy_n(z.row_span(r).begin(), z.cols(), row.begin());
        row[z.cols()] = t[r];
    }
    return input;
}

void check_finite_rows(const Tensor& z, const char* what) {
    for (std::size_t r = 0; r < z.rows(); ++r) {
        for (double v : z.row_span(r)) {
            if (!std::isfinite(v)) {
                throw NonFiniteError(std::string(what) + " is non-finite at sample " + std::to_string(r));
            }
        }
    }
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 finalizer over the pair.
    std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + stream + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

VelocityField velocity_init(std::size_t dim, const std::vector<std::size_t>& hidden, std::uint64_t seed) {
    std::vector<std::size_t> dims{dim + 1};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(dim);
    return VelocityField{nn::mlp_init(dims, seed), dim};
}

Tensor velocity_eval(const VelocityField& v, const Tensor& z, double t) {
    if (z.cols() != v.dim) {
        throw ShapeError("state dim " + std::to_string(z.cols()) + " does not match velocity field dim " +
                         std::to_string(v.dim));
    }
    return nn::mlp_eval(v.net, with_time(z, Tensor(z.rows(), 1, t)));
}

VelocityFn velocity_fn(const VelocityField& v) {
    return [&v](const Tensor& z, double t) { return velocity_eval(v, z, t); };
}

Trajectory integrate(const VelocityField& v, const Tensor& x, std::size_t steps, OdeMethod method) {
    return integrate(velocity_fn(v), x, steps, method);
}

Tensor translate(const VelocityField& v, const Tensor& x, std::size_t steps, OdeMethod method) {
    return integrate_endpoint(velocity_fn(v), x, steps, method);
}

TrainMode parse_train_mode(std::string_view name) {
    if (name == "dfm-two-phase") return TrainMode::DfmTwoPhase;
    if (name == "dfm-interleaved") return TrainMode::DfmInterleaved;
    if (name == "fm") return TrainMode::Fm;
    if (name == "fm-cond") return TrainMode::FmCond;
    if (name == "fm-ot") return TrainMode::FmOt;
    if (name == "fm-cond-ot") return TrainMode::FmCondOt;
    if (name == "split") return TrainMode::Split;
    throw ConfigError("unknown mode '" + std::string(name) +
                      "' (expected dfm-two-phase, dfm-interleaved, fm, fm-cond, fm-ot, fm-cond-ot, split)");
}

std::string_view train_mode_name(TrainMode mode) {
    switch (mode) {
    case TrainMode::DfmTwoPhase: return "dfm-two-phase";
    case TrainMode::DfmInterleaved: return "dfm-interleaved";
    case TrainMode::Fm: return "fm";
    case TrainMode::FmCond: return "fm-cond";
    case TrainMode::FmOt: return "fm-ot";
    case TrainMode::FmCondOt: return "fm-cond-ot";
    case TrainMode::Split: return "split";
    }
    return "unknown";
}

bool mode_learns_interpolant(TrainMode mode) {
    return mode == TrainMode::DfmTwoPhase || mode == TrainMode::DfmInterleaved || mode == TrainMode::Split;
}

void TrainConfig::validate() const {
    if (iterations == 0 && interp_iterations == 0) throw ConfigError("at least one training iteration is required");
    if (batch == 0) throw ConfigError("batch size must be positive");
    if (!(lr_velocity > 0.0) || !(lr_interp > 0.0)) throw ConfigError("learning rates must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    if (!(fd_step > 0.0)) throw ConfigError("finite-difference step must be positive");
    if (ode_steps == 0) throw ConfigError("ODE steps must be positive");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambda1 and lambda2 must be non-negative");
    if (mode == TrainMode::Split && !(lambda > 0.0)) throw ConfigError("split mode needs lambda > 0");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("EMA decay must lie in [0,1)");
    if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
    kernel.validate();
    land.validate();
}

ad::Var fm_loss_on_path(const nn::BoundMlp& v, ad::Var z, ad::Var target, const Tensor& t) {
    check_times(t, z.value().rows());
    const std::vector<ad::Var> parts{z, z.tape->constant(t)};
    const ad::Var pred = nn::mlp_forward(v, ad::concat(parts));
    return ad::mean(ad::squared_norm(ad::sub(pred, target), ad::Axis::Rows));
}

ad::Var fm_loss(ad::Tape& tape, const nn::BoundMlp& v, const LearnableInterpolant* interp, const PairBatch& pairs,
                const Tensor& t, double h) {
    InterpValues path = interp ? interp_path_values(*interp, pairs.x, pairs.y, t, h)
                               : InterpValues{linear_interp(pairs.x, pairs.y, t), linear_interp_dt(pairs.x, pairs.y)};
    check_finite_rows(path.z, "interpolant state z_t");
    check_finite_rows(path.dz, "interpolant velocity dz_t");
    return fm_loss_on_path(v, tape.constant(std::move(path.z)), tape.constant(std::move(path.dz)), t);
}

namespace {

ConditionalDataset reweighted(const ConditionalDataset& data, const TrainConfig& cfg) {
    ConditionalDataset d = data;
    if (!cfg.condition_weights.empty()) {
        if (cfg.condition_weights.size() != d.conditions()) {
            throw ConfigError("condition_weights needs one entry per condition");
        }
        const double total = std::accumulate(cfg.condition_weights.begin(), cfg.condition_weights.end(), 0.0);
        if (!(total > 0.0)) throw ConfigError("condition_weights must have a positive sum");
        for (std::size_t q = 0; q < d.conditions(); ++q) d.weights[q] = cfg.condition_weights[q] / total;
    }
    d.validate();
    return d;
}

nn::AdamState make_opt(const nn::MlpParams& p, double lr, double wd) {
    nn::AdamConfig c;
    c.lr = lr;
    c.weight_decay = wd;
    return nn::adam_init(p, c);
}

// Optional weight average over the course of training.
struct Averager {
    std::optional<nn::EmaState> ema;
    Averager(const nn::MlpParams& p, double decay) {
        if (decay > 0.0) ema = nn::ema_init(p, decay);
    }
    void update(const nn::MlpParams& p) {
        if (ema) nn::ema_update(*ema, p);
    }
    void finish(nn::MlpParams& p) const {
        if (ema) p = ema->shadow;
    }
};

struct Trainer {
    const TrainConfig& cfg;
    ConditionalDataset data;
    PairSampler sampler;

    Trainer(const TrainConfig& c, const ConditionalDataset& d)
        : cfg(c), data(reweighted(d, c)), sampler(data, derive_seed(c.seed, 1)) {
        cfg.validate();
    }

    std::size_t q_count() const { return data.conditions(); }

    struct CondSample {
        PairBatch pairs;
        Tensor t;
    };

    std::vector<CondSample> per_condition() {
        std::vector<CondSample> out;
        for (std::size_t q = 0; q < q_count(); ++q) {
            PairBatch b = sampler.independent(q, cfg.batch);
            Tensor t = sampler.times(cfg.batch);
            out.push_back({std::move(b), std::move(t)});
        }
        return out;
    }

    // One interpolant update on lambda1 * L_interp (+ lambda2 * L_mfm).
    double interp_update(LearnableInterpolant& in, nn::AdamState& opt, const std::vector<CondSample>& batch,
                         const XyGrid* surface) {
        ad::Tape tape;
        const BoundInterpolant bi = bind(tape, in);
        std::vector<ad::Var> z, dz;
        std::vector<Tensor> ts;
        for (const CondSample& s : batch) {
            const ad::Var x = tape.constant(s.pairs.x);
            const ad::Var y = tape.constant(s.pairs.y);
            if (surface && cfg.lambda2 > 0.0) {
                const InterpPath p = interp_path(bi, x, y, s.t, cfg.fd_step);
                z.push_back(p.z);
                dz.push_back(p.dz);
            } else {
                z.push_back(interp_eval(bi, x, y, tape.constant(s.t)));
            }
            ts.push_back(s.t);
        }
        ad::Var loss = ad::scale(repulsion_from_paths(z, ts, cfg.kernel), cfg.lambda1);
        if (!dz.empty()) loss = ad::add(loss, ad::scale(mfm_from_paths(z, dz, *surface, cfg.land), cfg.lambda2));
        tape.backward(loss);
        nn::adam_step(in.gamma, nn::gradients(bi.net), opt, "interpolant repulsion/surface");
        return loss.value().item();
    }

    // One velocity update on the mean over the given batches of the FM loss,
    // with interpolant targets computed off the tape.
    double velocity_update(VelocityField& v, nn::AdamState& opt, const LearnableInterpolant* in,
                           const std::vector<CondSample>& batch) {
        ad::Tape tape;
        const nn::BoundMlp bv = nn::bind(tape, v.net);
        std::optional<ad::Var> total;
        for (const CondSample& s : batch) {
            const ad::Var term = fm_loss(tape, bv, in, s.pairs, s.t, cfg.fd_step);
            total = total ? ad::add(*total, term) : term;
        }
        const ad::Var loss = ad::scale(*total, 1.0 / static_cast<double>(batch.size()));
        tape.backward(loss);
        nn::adam_step(v.net, nn::gradients(bv), opt, "flow matching");
        return loss.value().item();
    }
};

void require_conditions(const ConditionalDataset& data, std::size_t min, const char* who) {
    if (data.conditions() < min) {
        throw Error(std::string(who) + " needs at least " + std::to_string(min) + " conditions, got " +
                    std::to_string(data.conditions()));
    }
}

} // namespace

TrainResult train_fm(const TrainConfig& cfg, const ConditionalDataset& data) {
    const TrainMode m = cfg.mode;
    if (m != TrainMode::Fm && m != TrainMode::FmCond && m != TrainMode::FmOt && m != TrainMode::FmCondOt) {
        throw ConfigError("train_fm does not handle mode " + std::string(train_mode_name(m)));
    }
    Trainer tr(cfg, data);
    TrainResult res;
    res.velocity = velocity_init(data.dim, cfg.hidden, derive_seed(cfg.seed, 2));
    res.velocity_opt = make_opt(res.velocity.net, cfg.lr_velocity, cfg.weight_decay);
    Averager avg(res.velocity.net, cfg.ema_decay);
    const bool conditional = m == TrainMode::FmCond || m == TrainMode::FmCondOt;
    const bool ot = m == TrainMode::FmOt || m == TrainMode::FmCondOt;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        PairBatch b = conditional ? tr.sampler.independent(tr.sampler.condition(), cfg.batch)
                                  : tr.sampler.marginal(cfg.batch);
        if (ot) b = ot_coupling(b, conditional);
        Tensor t = tr.sampler.times(cfg.batch);
        std::vector<Trainer::CondSample> batch;
        batch.push_back({std::move(b), std::move(t)});
        const double loss = tr.velocity_update(res.velocity, res.velocity_opt, nullptr, batch);
        avg.update(res.velocity.net);
        res.log.push_back({it, kNaN, loss});
    }
    avg.finish(res.velocity.net);
    return res;
}

TrainResult train_dfm_two_phase(const TrainConfig& cfg, const ConditionalDataset& data, const XyGrid* surface) {
    require_conditions(data, 2, "DFM");
    if (surface && data.dim != 3) throw ShapeError("surface regularization needs 3-D data");
    Trainer tr(cfg, data);
    TrainResult res;
    LearnableInterpolant in = interpolant_init(data.dim, cfg.hidden, derive_seed(cfg.seed, 3), cfg.interp_time_input);
    nn::AdamState iopt = make_opt(in.gamma, cfg.lr_interp, cfg.weight_decay);
    Averager iavg(in.gamma, cfg.ema_decay);
    for (std::size_t it = 0; it < cfg.interp_iterations; ++it) {
        const auto batch = tr.per_condition();
        const double loss = tr.interp_update(in, iopt, batch, surface);
        iavg.update(in.gamma);
        res.log.push_back({it, loss, kNaN});
    }
    iavg.finish(in.gamma);

    res.velocity = velocity_init(data.dim, cfg.hidden, derive_seed(cfg.seed, 2));
    res.velocity_opt = make_opt(res.velocity.net, cfg.lr_velocity, cfg.weight_decay);
    Averager vavg(res.velocity.net, cfg.ema_decay);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const std::size_t q = tr.sampler.condition();
        PairBatch b = tr.sampler.independent(q, cfg.batch);
        Tensor t = tr.sampler.times(cfg.batch);
        std::vector<Trainer::CondSample> batch;
        batch.push_back({std::move(b), std::move(t)});
        const double loss = tr.velocity_update(res.velocity, res.velocity_opt, &in, batch);
        vavg.update(res.velocity.net);
        res.log.push_back({cfg.interp_iterations + it, kNaN, loss});
    }
    vavg.finish(res.velocity.net);
    res.interpolant = std::move(in);
    res.interp_opt = std::move(iopt);
    return res;
}

TrainResult train_dfm_interleaved(const TrainConfig& cfg, const ConditionalDataset& data, const XyGrid* surface) {
    require_conditions(data, 2, "DFM");
    if (surface && data.dim != 3) throw ShapeError("surface regularization needs 3-D data");
    Trainer tr(cfg, data);
    TrainResult res;
    LearnableInterpolant in = interpolant_init(data.dim, cfg.hidden, derive_seed(cfg.seed, 3), cfg.interp_time_input);
    nn::AdamState iopt = make_opt(in.gamma, cfg.lr_interp, cfg.weight_decay);
    res.velocity = velocity_init(data.dim, cfg.hidden, derive_seed(cfg.seed, 2));
    res.velocity_opt = make_opt(res.velocity.net, cfg.lr_velocity, cfg.weight_decay);
    Averager iavg(in.gamma, cfg.ema_decay);
    Averager vavg(res.velocity.net, cfg.ema_decay);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const auto batch = tr.per_condition();
        const double li = tr.interp_update(in, iopt, batch, surface);
        const double lf = tr.velocity_update(res.velocity, res.velocity_opt, &in, batch);
        iavg.update(in.gamma);
        vavg.update(res.velocity.net);
        res.log.push_back({it, li, lf});
    }
    iavg.finish(in.gamma);
    vavg.finish(res.velocity.net);
    res.interpolant = std::move(in);
    res.interp_opt = std::move(iopt);
    return res;
}

TrainResult train_split(const TrainConfig& cfg, const ConditionalDataset& data) {
    require_conditions(data, 1, "split training");
    Trainer tr(cfg, data);
    const std::size_t Q = data.conditions();
    TrainResult res;
    res.velocity = velocity_init(data.dim, cfg.hidden, derive_seed(cfg.seed, 2));
    res.velocity_opt = make_opt(res.velocity.net, cfg.lr_velocity, cfg.weight_decay);
    SplitModels models;
    std::vector<nn::AdamState> vopts, iopts;
    for (std::size_t q = 0; q < Q; ++q) {
        models.velocities.push_back(velocity_init(data.dim, cfg.hidden, derive_seed(cfg.seed, 100 + q)));
        models.interpolants.push_back(
            interpolant_init(data.dim, cfg.hidden, derive_seed(cfg.seed, 200 + q), cfg.interp_time_input));
        vopts.push_back(make_opt(models.velocities[q].net, cfg.lr_velocity, cfg.weight_decay));
        iopts.push_back(make_opt(models.interpolants[q].gamma, cfg.lr_interp, cfg.weight_decay));
    }
    Averager vavg(res.velocity.net, cfg.ema_decay);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const auto batch = tr.per_condition();
        ad::Tape tape;
        const nn::BoundMlp bv = nn::bind(tape, res.velocity.net);
        std::vector<nn::BoundMlp> bvq;
        std::vector<BoundInterpolant> biq;
        for (std::size_t q = 0; q < Q; ++q) {
            bvq.push_back(nn::bind(tape, models.velocities[q].net));
            biq.push_back(bind(tape, models.interpolants[q]));
        }
        std::optional<ad::Var> fm_total, cons_total;
        for (std::size_t q = 0; q < Q; ++q) {
            const auto& s = batch[q];
            const InterpPath p =
                interp_path(biq[q], tape.constant(s.pairs.x), tape.constant(s.pairs.y), s.t, cfg.fd_step);
            const ad::Var fm = fm_loss_on_path(bvq[q], p.z, p.dz, s.t);
            const std::vector<ad::Var> parts{p.z, tape.constant(s.t)};
            const ad::Var input = ad::concat(parts);
            const ad::Var diff = ad::sub(nn::mlp_forward(bv, input), nn::mlp_forward(bvq[q], input));
            const ad::Var cons = ad::mean(ad::squared_norm(diff, ad::Axis::Rows));
            fm_total = fm_total ? ad::add(*fm_total, fm) : fm;
            cons_total = cons_total ? ad::add(*cons_total, cons) : cons;
        }
        const ad::Var loss = ad::add(*fm_total, ad::scale(*cons_total, cfg.lambda));
        tape.backward(loss);
        nn::adam_step(res.velocity.net, nn::gradients(bv), res.velocity_opt, "split consensus");
        for (std::size_t q = 0; q < Q; ++q) {
            nn::adam_step(models.velocities[q].net, nn::gradients(bvq[q]), vopts[q], "split private flow matching");
            nn::adam_step(models.interpolants[q].gamma, nn::gradients(biq[q].net), iopts[q],
                          "split private interpolant");
        }
        vavg.update(res.velocity.net);
        res.log.push_back({it, cons_total->value().item(), fm_total->value().item()});
    }
    vavg.finish(res.velocity.net);
    res.split = std::move(models);
    return res;
}

TrainResult train(const TrainConfig& cfg, const ConditionalDataset& data, const XyGrid* surface) {
    switch (cfg.mode) {
    case TrainMode::DfmTwoPhase: return train_dfm_two_phase(cfg, data, surface);
    case TrainMode::DfmInterleaved: return train_dfm_interleaved(cfg, data, surface);
    case TrainMode::Split: return train_split(cfg, data);
    default: return train_fm(cfg, data);
    }
}

void write_training_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write training log " + path.string());
    out << "iter,loss_interp,loss_fm\n";
    auto field = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    for (const auto& r : log) out << r.iter << ',' << field(r.loss_interp) << ',' << field(r.loss_fm) << '\n';
    if (!out) throw IoError("failed writing training log " + path.string());
}

} // namespace dfm
