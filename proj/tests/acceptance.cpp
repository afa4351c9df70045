// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 when any fails.
#include "dfm/commands.hpp"
#include "dfm/error.hpp"
#include "dfm/io.hpp"
#include "test_support.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace dfm;
namespace fs = std::filesystem;
using dfm::test::check_op;
using dfm::test::random_tensor;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? NAN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> field(const MethodSummary& m, const std::function<double(const EvalReport&)>& get) {
    std::vector<double> out;
    for (const auto& r : m.reports) out.push_back(get(r));
    return out;
}

double emd_of(const EvalReport& r) { return r.emd_mean; }
double te_of(const EvalReport& r) { return r.translation_error.value_or(NAN); }
double ccr_of(const EvalReport& r) { return r.cross_cluster_rate.value_or(NAN); }
double sa_of(const EvalReport& r) { return r.surface_adherence.value_or(NAN); }

const MethodSummary& find(const std::vector<MethodSummary>& rows, const std::string& label) {
    for (const auto& m : rows) {
        if (m.label == label) return m;
    }
    throw dfm::Error("acceptance: method " + label + " missing from results");
}

/// Runs each experiment at most once and shares the results across criteria.
class Runs {
public:
    Runs(fs::path root, std::vector<std::uint64_t> seeds) : root_(std::move(root)), seeds_(std::move(seeds)) {}

    const std::vector<MethodSummary>& get(const std::string& experiment, const std::vector<std::string>& methods,
                                          const std::vector<std::uint64_t>& seeds) {
        std::string key = experiment;
        for (const auto& m : methods) key += "|" + m;
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        ReproduceOptions o;
        o.experiment = experiment;
        o.out_dir = root_ / key_dir(key);
        o.seeds = seeds;
        o.methods = methods;
        o.verbose = true;
        return cache_.emplace(key, cmd_reproduce(o)).first->second;
    }

    const std::vector<MethodSummary>& get(const std::string& experiment, const std::vector<std::string>& methods) {
        return get(experiment, methods, seeds_);
    }

    fs::path run_dir(const std::string& experiment, const std::vector<std::string>& methods,
                     const std::string& label, std::uint64_t seed) const {
        std::string key = experiment;
        for (const auto& m : methods) key += "|" + m;
        return root_ / key_dir(key) / experiment / "runs" / (label + "_seed" + std::to_string(seed));
    }

    const std::vector<std::uint64_t>& seeds() const { return seeds_; }
    const fs::path& root() const { return root_; }

private:
    static std::string key_dir(std::string key) {
        std::replace(key.begin(), key.end(), '|', '_');
        return key;
    }

    fs::path root_;
    std::vector<std::uint64_t> seeds_;
    std::map<std::string, std::vector<MethodSummary>> cache_;
};

const std::vector<std::string> kTableMethods{"fm-cond", "dfm"};

Outcome table_ordering(Runs& runs, const std::string& experiment) {
    const auto& rows = runs.get(experiment, kTableMethods);
    const auto& fm = find(rows, "fm-cond");
    const auto& dfm = find(rows, "dfm");
    const double e_fm = mean_of(field(fm, emd_of)), e_dfm = mean_of(field(dfm, emd_of));
    const double t_fm = mean_of(field(fm, te_of)), t_dfm = mean_of(field(dfm, te_of));
    Outcome o;
    o.pass = e_dfm <= e_fm / 5.0 && t_dfm <= t_fm / 2.0;
    o.detail = "EMD dfm " + num(e_dfm) + " vs fm-cond/5 " + num(e_fm / 5.0) + "; TE dfm " + num(t_dfm) +
               " vs fm-cond/2 " + num(t_fm / 2.0) + " (" + std::to_string(dfm.reports.size()) + " seeds)";
    return o;
}

Outcome c3_reflection(Runs& runs) {
    const auto& rows = runs.get("table1-2d", kTableMethods);
    const double fm = ccr_of(find(rows, "fm-cond").reports.front());
    const double dfm = ccr_of(find(rows, "dfm").reports.front());
    return {fm > 0.8 && dfm < 0.1, "cross-cluster rate fm-cond " + num(fm) + " (> 0.8), dfm " + num(dfm) +
                                       " (< 0.1), seed " + std::to_string(runs.seeds().front())};
}

/// FM-cond velocity at t = 1/2 on the segment between the source means.
struct ReflectionProbe {
    Tensor z;
    Tensor v;
    std::vector<double> mean_x;
};

ReflectionProbe reflection_probe(Runs& runs) {
    runs.get("table1-2d", kTableMethods);
    const std::uint64_t seed = runs.seeds().front();
    const VelocityField v = velocity_from_checkpoint(
        load_checkpoint(runs.run_dir("table1-2d", kTableMethods, "fm-cond", seed) / "velocity.json"));
    RunConfig cfg;
    apply_preset_defaults(cfg, "blobs2d");
    cfg.data_seed = seed;
    const RunData data = load_run_data(cfg);

    ReflectionProbe p;
    p.mean_x.assign(data.train.dim, 0.0);
    std::size_t n = 0;
    for (const auto& s : data.train.source) {
        for (std::size_t r = 0; r < s.rows(); ++r) {
            for (std::size_t d = 0; d < s.cols(); ++d) p.mean_x[d] += s(r, d);
        }
        n += s.rows();
    }
    for (double& m : p.mean_x) m /= static_cast<double>(n);

    const BlobSpec spec = blob_preset("blobs2d");
    p.z = Tensor(100, 2);
    for (std::size_t k = 0; k < 100; ++k) {
        const double a = static_cast<double>(k) / 99.0;
        for (std::size_t d = 0; d < 2; ++d) p.z(k, d) = (1.0 - a) * spec.means[0][d] + a * spec.means[1][d];
    }
    p.v = velocity_eval(v, p.z, 0.5);
    return p;
}

double mean_relative_l2(const Tensor& got, const Tensor& want) {
    double s = 0.0;
    for (std::size_t r = 0; r < got.rows(); ++r) {
        double num2 = 0.0, den2 = 0.0;
        for (std::size_t d = 0; d < got.cols(); ++d) {
            num2 += std::pow(got(r, d) - want(r, d), 2);
            den2 += want(r, d) * want(r, d);
        }
        s += std::sqrt(num2) / std::max(std::sqrt(den2), 1e-12);
    }
    return s / static_cast<double>(got.rows());
}

Outcome c4_closed_form(Runs& runs) {
    const ReflectionProbe p = reflection_probe(runs);
    const double err = mean_relative_l2(p.v, reflection_velocity_oracle(p.mean_x, p.z));
    return {err < 0.15, "mean relative L2 vs 2(z - E[x]) = " + num(err) + " (< 0.15)"};
}

/// Not a numbered criterion: the conditional expectation of y - x given z at
/// t = 1/2 for independent Gaussian couplings is the constant -2 E[x].
std::string c4_supplement(Runs& runs) {
    const ReflectionProbe p = reflection_probe(runs);
    Tensor want(p.z.rows(), p.z.cols());
    for (std::size_t r = 0; r < want.rows(); ++r) {
        for (std::size_t d = 0; d < want.cols(); ++d) want(r, d) = -2.0 * p.mean_x[d];
    }
    return "mean relative L2 vs -2 E[x] = " + num(mean_relative_l2(p.v, want));
}

Outcome c5_dichotomy(Runs& runs) {
    const double dfm = mean_of(field(find(runs.get("table1-2d", kTableMethods), "dfm"), emd_of));
    const auto split = field(find(runs.get("table1-2d", {"split"}), "split"), emd_of);
    const double lo = *std::min_element(split.begin(), split.end());
    const double hi = *std::max_element(split.begin(), split.end());
    std::ostringstream os;
    os << "split EMD per seed [";
    for (std::size_t i = 0; i < split.size(); ++i) os << (i ? " " : "") << num(split[i]);
    os << "], dfm mean " << num(dfm) << "; need min < " << num(2 * dfm) << " and max > " << num(5 * dfm);
    return {lo < 2.0 * dfm && hi > 5.0 * dfm, os.str()};
}

Outcome c6_interpolant(Runs& runs) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> dim_pick(1, 4), width(1, 16);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto dim = static_cast<std::size_t>(dim_pick(rng));
        const LearnableInterpolant g = interpolant_init(dim, {static_cast<std::size_t>(width(rng))},
                                                        rng(), trial % 2 == 0);
        const double s = scale(rng);
        const Tensor x = random_tensor(4, dim, rng(), s), y = random_tensor(4, dim, rng(), s);
        ad::Tape tape;
        const auto b = bind(tape, g, false);
        const ad::Var xv = tape.constant(x), yv = tape.constant(y);
        const Tensor z0 = interp_eval(b, xv, yv, tape.constant(Tensor(4, 1, 0.0))).value();
        const Tensor z1 = interp_eval(b, xv, yv, tape.constant(Tensor(4, 1, 1.0))).value();
        for (std::size_t i = 0; i < x.size(); ++i) {
            worst = std::max({worst, std::abs(z0[i] - x[i]), std::abs(z1[i] - y[i])});
        }
    }

    const std::uint64_t seed = runs.seeds().front();
    runs.get("table1-2d", kTableMethods);
    const LearnableInterpolant learned = interpolant_from_checkpoint(
        load_checkpoint(runs.run_dir("table1-2d", kTableMethods, "dfm", seed) / "interpolant.json"));
    RunConfig cfg;
    apply_preset_defaults(cfg, "blobs2d");
    cfg.data_seed = seed;
    const RunData data = load_run_data(cfg);
    std::mt19937_64 brng(derive_seed(seed, 66));
    const PairBatch b0 = independent_coupling(data.train, 0, 512, brng);
    const PairBatch b1 = independent_coupling(data.train, 1, 512, brng);

    // Distance between the two conditions' batch-mean paths, minimized over the grid.
    auto min_gap = [&](const LearnableInterpolant* g) {
        double best = INFINITY;
        for (int k = 0; k <= 100; ++k) {
            const Tensor t(512, 1, k / 100.0);
            auto centroid = [&](const PairBatch& p) {
                const Tensor z = g ? interp_path_values(*g, p.x, p.y, t, 1e-3).z : linear_interp(p.x, p.y, t);
                std::vector<double> c(z.cols(), 0.0);
                for (std::size_t r = 0; r < z.rows(); ++r) {
                    for (std::size_t d = 0; d < z.cols(); ++d) c[d] += z(r, d) / static_cast<double>(z.rows());
                }
                return c;
            };
            const auto c0 = centroid(b0), c1 = centroid(b1);
            double d2 = 0.0;
            for (std::size_t d = 0; d < c0.size(); ++d) d2 += (c0[d] - c1[d]) * (c0[d] - c1[d]);
            best = std::min(best, std::sqrt(d2));
        }
        return best;
    };
    const double gap_learned = min_gap(&learned), gap_linear = min_gap(nullptr);
    return {worst == 0.0 && gap_learned > gap_linear,
            "max boundary deviation " + num(worst) + " over 1000 draws; min path gap learned " + num(gap_learned) +
                " vs linear " + num(gap_linear)};
}

double fd_velocity_fm() {
    const VelocityField v = velocity_init(2, {5, 5}, 1);
    const Tensor z = random_tensor(6, 2, 2), target = random_tensor(6, 2, 3);
    Tensor t(6, 1);
    for (std::size_t i = 0; i < 6; ++i) t[i] = 0.1 + 0.15 * static_cast<double>(i);
    auto f = [&](std::span<const double> flat, std::span<double> g) {
        nn::MlpParams p = v.net;
        p.unflatten(flat);
        ad::Tape tape;
        const auto b = nn::bind(tape, p);
        const ad::Var loss = fm_loss_on_path(b, tape.constant(z), tape.constant(target), t);
        if (!g.empty()) {
            tape.backward(loss);
            const auto gr = nn::gradients(b).flatten();
            std::copy(gr.begin(), gr.end(), g.begin());
        }
        return loss.value().item();
    };
    return ad::finite_diff_check(f, v.net.flatten(), 1e-6);
}

/// FD check of an interpolant objective built on per-condition batches.
double fd_interp(std::size_t dim, const std::function<ad::Var(const BoundInterpolant&, ad::Tape&)>& build) {
    const LearnableInterpolant g = interpolant_init(dim, {6, 6}, 3);
    auto f = [&](std::span<const double> flat, std::span<double> grad) {
        LearnableInterpolant h = g;
        h.gamma.unflatten(flat);
        ad::Tape tape;
        const auto b = bind(tape, h);
        const ad::Var loss = build(b, tape);
        if (!grad.empty()) {
            tape.backward(loss);
            const auto gr = nn::gradients(b.net).flatten();
            std::copy(gr.begin(), gr.end(), grad.begin());
        }
        return loss.value().item();
    };
    return ad::finite_diff_check(f, g.gamma.flatten(), 1e-6);
}

Tensor grid_times(std::size_t n, double start) {
    Tensor t(n, 1);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::fmod(start + 0.137 * static_cast<double>(i), 1.0);
    return t;
}

Outcome c7_gradients() {
    const double fm = fd_velocity_fm();

    const Tensor x0 = random_tensor(12, 2, 1, 0.3), y0 = random_tensor(12, 2, 2, 0.3);
    const Tensor x1 = random_tensor(12, 2, 3, 0.3), y1 = random_tensor(12, 2, 4, 0.3);
    const Tensor t0 = grid_times(12, 0.05), t1 = grid_times(12, 0.11);
    const double interp = fd_interp(2, [&](const BoundInterpolant& b, ad::Tape& tape) {
        const std::vector<CondBatch> batches{{tape.constant(x0), tape.constant(y0), t0},
                                             {tape.constant(x1), tape.constant(y1), t1}};
        return repulsion_loss(b, batches, KernelParams{0.5, 1.5, 1e-4});
    });

    BumpSpec bs;
    bs.spacing = 0.2;
    const XyGrid grid(bump_surface(bs));
    const LandParams land{0.3, 1e-2, 8.0};
    const Tensor p0 = random_tensor(8, 3, 5, 0.5), q0 = random_tensor(8, 3, 6, 0.5);
    const Tensor p1 = random_tensor(8, 3, 7, 0.5), q1 = random_tensor(8, 3, 8, 0.5);
    const Tensor s0 = grid_times(8, 0.07), s1 = grid_times(8, 0.3);
    const double mfm = fd_interp(3, [&](const BoundInterpolant& b, ad::Tape& tape) {
        const std::vector<CondBatch> batches{{tape.constant(p0), tape.constant(q0), s0},
                                             {tape.constant(p1), tape.constant(q1), s1}};
        return mfm_loss(b, batches, grid, land, 1e-3);
    });

    const Tensor a = random_tensor(4, 3, 11), bb = random_tensor(4, 3, 12), m = random_tensor(3, 5, 13);
    const Tensor w = random_tensor(5, 3, 14), bias = random_tensor(1, 5, 15);
    using V = std::vector<ad::Var>;
    const std::vector<std::pair<const char*, double>> ops{
        {"add", check_op({a, bb}, [](ad::Tape&, const V& v) { return ad::add(v[0], v[1]); })},
        {"sub", check_op({a, bb}, [](ad::Tape&, const V& v) { return ad::sub(v[0], v[1]); })},
        {"mul", check_op({a, bb}, [](ad::Tape&, const V& v) { return ad::mul(v[0], v[1]); })},
        {"scale", check_op({a}, [](ad::Tape&, const V& v) { return ad::scale(v[0], -2.5); })},
        {"add_scalar", check_op({a}, [](ad::Tape&, const V& v) { return ad::add_scalar(v[0], 0.7); })},
        {"matmul", check_op({a, m}, [](ad::Tape&, const V& v) { return ad::matmul(v[0], v[1]); })},
        {"linear", check_op({a, w, bias}, [](ad::Tape&, const V& v) { return ad::linear(v[0], v[1], v[2]); })},
        {"concat", check_op({a, bb}, [](ad::Tape&, const V& v) { return ad::concat(std::vector{v[0], v[1]}); })},
        {"selu", check_op({a}, [](ad::Tape&, const V& v) { return ad::selu(v[0]); })},
        {"exp", check_op({a}, [](ad::Tape&, const V& v) { return ad::exp(v[0]); })},
        {"square", check_op({a}, [](ad::Tape&, const V& v) { return ad::square(v[0]); })},
        {"sum", check_op({a}, [](ad::Tape&, const V& v) { return ad::sum(v[0], ad::Axis::Rows); })},
        {"mean", check_op({a}, [](ad::Tape&, const V& v) { return ad::mean(v[0], ad::Axis::Rows); })},
        {"squared_norm", check_op({a}, [](ad::Tape&, const V& v) { return ad::squared_norm(v[0], ad::Axis::Rows); })},
        {"max_const", check_op({a}, [](ad::Tape&, const V& v) { return ad::max_const(v[0], 0.1); })},
        {"repeat_cols",
         check_op({random_tensor(3, 1, 16)}, [](ad::Tape&, const V& v) { return ad::repeat_cols(v[0], 4); })},
    };
    double worst_op = 0.0;
    std::string worst_name;
    for (const auto& [name, err] : ops) {
        if (err >= worst_op) {
            worst_op = err;
            worst_name = name;
        }
    }
    return {fm < 1e-3 && interp < 1e-3 && mfm < 1e-3 && worst_op < 1e-4,
            "L_FM " + num(fm) + ", L_interp " + num(interp) + ", L_mfm " + num(mfm) + " (< 1e-3); worst op " +
                worst_name + " " + num(worst_op) + " (< 1e-4)"};
}

Outcome c8_emd_oracle() {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> size(1, 7);
    int mismatches = 0;
    double emd_gap = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const auto n = static_cast<std::size_t>(size(rng));
        const Tensor a = random_tensor(n, 2, rng()), b = random_tensor(n, 2, rng());
        Tensor cost(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) cost(i, j) = std::hypot(a(i, 0) - b(j, 0), a(i, 1) - b(j, 1));
        }
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = INFINITY;
        do {
            best = std::min(best, assignment_cost(cost, perm));
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (assignment_cost(cost, hungarian(cost)) != best) ++mismatches;
        emd_gap = std::max(emd_gap, std::abs(emd(a, b) - best / static_cast<double>(n)));
    }
    return {mismatches == 0 && emd_gap < 1e-12,
            std::to_string(mismatches) + " of 100 optimal costs differ; max |emd - exhaustive mean| " + num(emd_gap)};
}

Outcome c9_ode() {
    const VelocityFn v = [](const Tensor& z, double) { return z; };
    const Tensor x(1, 1, 1.0);
    auto err = [&](std::size_t steps, OdeMethod m) {
        return std::abs(integrate_endpoint(v, x, steps, m)[0] - std::exp(1.0));
    };
    const double ratio = err(100, OdeMethod::Euler) / err(200, OdeMethod::Euler);
    const double rk4 = err(100, OdeMethod::Rk4);
    return {ratio >= 1.8 && ratio <= 2.2 && rk4 < 1e-6,
            "euler error ratio 100/200 steps " + num(ratio) + " (in [1.8, 2.2]); rk4 error " + num(rk4)};
}

Outcome c10_surface(Runs& runs) {
    const std::vector<std::string> methods{"dfm", "dfm-no-surface", "fm-cond-ot"};
    const std::uint64_t seed = runs.seeds().front();
    const auto& rows = runs.get("swarm", methods, {seed});
    const double dfm = sa_of(find(rows, "dfm").reports.front());
    const double flat = sa_of(find(rows, "dfm-no-surface").reports.front());
    const double ot = sa_of(find(rows, "fm-cond-ot").reports.front());
    return {dfm < flat && dfm < ot, "SA dfm " + num(dfm) + ", lambda2=0 " + num(flat) + ", fm-cond-ot " + num(ot)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + DFM_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

Outcome c11_determinism(const fs::path& root) {
    const fs::path dir = root / "determinism";
    fs::remove_all(dir);
    const std::string data = (dir / "data").string();
    if (run_cli("gen --preset blobs2d --seed 3 --out " + data) != 0) return {false, "dfm gen failed"};
    // Identical arguments both times; the first run's files are set aside before the second.
    const fs::path run = dir / "run";
    for (const char* snapshot : {"a", "b"}) {
        fs::remove_all(run);
        const std::string out = run.string();
        const std::string train = "train --preset blobs2d --set dataset=" + data + "/dataset.csv --set paired=" + data +
                                  "/eval_paired.csv --set iterations=300 --set interp_iterations=300 --set seed=5 --out " +
                                  out;
        if (run_cli(train) != 0) return {false, "dfm train failed"};
        const std::string eval = "eval --checkpoint " + out + "/velocity.json --dataset " + data +
                                 "/dataset.csv --paired " + data + "/eval_paired.csv --report " + out +
                                 "/report.json --seed 5";
        if (run_cli(eval) != 0) return {false, "dfm eval failed"};
        fs::rename(run, dir / snapshot);
    }
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        const fs::path other = dir / "b" / e.path().filename();
        if (!fs::exists(other)) return {false, "missing " + other.string()};
        if (slurp(e.path()) != slurp(other)) return {false, e.path().filename().string() + " differs between runs"};
        ++compared;
    }
    return {compared >= 4, std::to_string(compared) + " checkpoint/report files bitwise identical across two runs"};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria 1-11"};
    std::string out = "acceptance_out";
    std::vector<int> only;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    app.add_option("--out", out, "Scratch directory for training runs");
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--seeds", seeds, "Seeds for the multi-seed criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    Runs runs(fs::absolute(out), seeds);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"C1 table ordering 2D", [&] { return table_ordering(runs, "table1-2d"); }},
        {"C2 table ordering 3D", [&] { return table_ordering(runs, "table1-3d"); }},
        {"C3 reflection", [&] { return c3_reflection(runs); }},
        {"C4 reflection closed form", [&] { return c4_closed_form(runs); }},
        {"C5 split dichotomy", [&] { return c5_dichotomy(runs); }},
        {"C6 interpolant structure", [&] { return c6_interpolant(runs); }},
        {"C7 gradient correctness", [] { return c7_gradients(); }},
        {"C8 EMD oracle", [] { return c8_emd_oracle(); }},
        {"C9 ODE convergence", [] { return c9_ode(); }},
        {"C10 surface regularization", [&] { return c10_surface(runs); }},
        {"C11 determinism", [&] { return c11_determinism(runs.root()); }},
    };

    int failed = 0;
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string line = (o.pass ? "PASS " : "FAIL ") + criteria[i].first + ": " + o.detail + " [" +
                           num(secs) + " s]";
        std::cout << line << std::endl;
        lines.push_back(std::move(line));
        if (!o.pass) ++failed;
        if (id == 4) {
            try {
                std::cout << "info C4 supplementary: " << c4_supplement(runs) << std::endl;
            } catch (const std::exception& e) {
                std::cout << "info C4 supplementary: error: " << e.what() << std::endl;
            }
        }
    }
    std::cout << "\nsummary\n";
    for (const auto& l : lines) std::cout << l.substr(0, l.find(':')) << '\n';
    std::cout << (lines.size() - static_cast<std::size_t>(failed)) << " of " << lines.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
