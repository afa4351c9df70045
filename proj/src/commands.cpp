#include "dfm/commands.hpp"

#include "dfm/error.hpp"
#include "dfm/io.hpp"
#include "dfm/svg.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

namespace dfm {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json config_json(const RunConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    std::istringstream in(config_echo(cfg));
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return j;
}

bool is_blob_preset(const std::string& p) { return p == "blobs2d" || p == "blobs3d"; }

PointCloud default_surface() { return bump_surface(BumpSpec{}); }

} // namespace

RunData load_run_data(const RunConfig& cfg) {
    RunData d;
    if (!cfg.dataset.empty()) {
        d.train = load_dataset(cfg.dataset);
        if (!cfg.paired.empty()) d.paired = load_paired(cfg.paired);
        if (!cfg.surface.empty()) d.surface = load_point_cloud(cfg.surface);
        return d;
    }
    if (is_blob_preset(cfg.preset)) {
        BlobSpec spec = blob_preset(cfg.preset);
        spec.samples = cfg.samples;
        spec.seed = cfg.data_seed;
        SyntheticData s = make_blob_data(spec, cfg.eval_size);
        d.train = std::move(s.train);
        d.paired = std::move(s.eval);
    } else if (cfg.preset == "swarm") {
        d.surface = cfg.surface.empty() ? default_surface() : load_point_cloud(cfg.surface);
        SwarmSpec spec;
        spec.samples = cfg.samples;
        spec.seed = cfg.data_seed;
        d.train = swarm_scenario(XyGrid(*d.surface), spec);
    } else {
        throw ConfigError("no dataset: set `dataset` or a preset (blobs2d, blobs3d, swarm)");
    }
    if (!cfg.paired.empty()) d.paired = load_paired(cfg.paired);
    return d;
}

Checkpoint velocity_checkpoint(const VelocityField& v, const nn::AdamState* opt, const TrainConfig& cfg) {
    Checkpoint ck;
    ck.role = "velocity";
    ck.net = v.net;
    if (opt) ck.optimizer = *opt;
    ck.seed = cfg.seed;
    ck.iteration = opt ? opt->step : 0;
    ck.meta = {{"dim", v.dim},
               {"mode", std::string(train_mode_name(cfg.mode))},
               {"ode_steps", cfg.ode_steps},
               {"ode_method", std::string(ode_method_name(cfg.ode_method))}};
    return ck;
}

Checkpoint interpolant_checkpoint(const LearnableInterpolant& g, const nn::AdamState* opt, const TrainConfig& cfg) {
    Checkpoint ck;
    ck.role = "interpolant";
    ck.net = g.gamma;
    if (opt) ck.optimizer = *opt;
    ck.seed = cfg.seed;
    ck.iteration = opt ? opt->step : 0;
    ck.meta = {{"dim", g.dim}, {"time_input", g.time_input}};
    return ck;
}

VelocityField velocity_from_checkpoint(const Checkpoint& ck) {
    if (ck.role != "velocity") throw ConfigError("checkpoint role is '" + ck.role + "', expected velocity");
    VelocityField v;
    v.net = ck.net;
    v.dim = ck.meta.at("dim").get<std::size_t>();
    if (v.net.dims.empty() || v.net.dims.front() != v.dim + 1 || v.net.dims.back() != v.dim) {
        throw ShapeError("velocity checkpoint layer sizes do not match dim " + std::to_string(v.dim));
    }
    return v;
}

LearnableInterpolant interpolant_from_checkpoint(const Checkpoint& ck) {
    if (ck.role != "interpolant") throw ConfigError("checkpoint role is '" + ck.role + "', expected interpolant");
    LearnableInterpolant g;
    g.gamma = ck.net;
    g.dim = ck.meta.at("dim").get<std::size_t>();
    g.time_input = ck.meta.value("time_input", true);
    return g;
}

void write_train_outputs(const fs::path& dir, const RunConfig& cfg, const TrainResult& res) {
    ensure_dir(dir);
    save_checkpoint(dir / "velocity.json", velocity_checkpoint(res.velocity, &res.velocity_opt, cfg.train));
    if (res.interpolant) {
        save_checkpoint(dir / "interpolant.json",
                        interpolant_checkpoint(*res.interpolant, res.interp_opt ? &*res.interp_opt : nullptr,
                                               cfg.train));
    }
    if (res.split) {
        for (std::size_t q = 0; q < res.split->velocities.size(); ++q) {
            save_checkpoint(dir / ("velocity_cond" + std::to_string(q) + ".json"),
                            velocity_checkpoint(res.split->velocities[q], nullptr, cfg.train));
            save_checkpoint(dir / ("interpolant_cond" + std::to_string(q) + ".json"),
                            interpolant_checkpoint(res.split->interpolants[q], nullptr, cfg.train));
        }
    }
    write_training_log(dir / "train_log.csv", res.log);
    write_text(dir / "config.echo", config_echo(cfg));
}

void cmd_gen(const GenOptions& opt) {
    ensure_dir(opt.out_dir);
    nlohmann::json manifest = {{"seed", opt.seed}};
    std::vector<std::string> files{"dataset.csv"};
    if (!opt.spec_file.empty() || is_blob_preset(opt.preset)) {
        BlobSpec spec;
        if (!opt.spec_file.empty()) {
            std::ifstream in(opt.spec_file);
            if (!in) throw IoError("cannot read spec file " + opt.spec_file.string());
            nlohmann::json j;
            try {
                in >> j;
                spec.dim = j.at("dim").get<std::size_t>();
                spec.means = j.at("means").get<std::vector<std::vector<double>>>();
                spec.variance = j.value("variance", 1.0);
                spec.samples = j.value("samples", std::size_t{2000});
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("bad spec file " + opt.spec_file.string() + ": " + e.what());
            }
            manifest["spec_file"] = opt.spec_file.string();
        } else {
            spec = blob_preset(opt.preset);
            manifest["preset"] = opt.preset;
        }
        if (opt.samples) spec.samples = opt.samples;
        spec.seed = opt.seed;
        const SyntheticData d = make_blob_data(spec, opt.eval_size);
        save_dataset(opt.out_dir / "dataset.csv", d.train);
        save_paired(opt.out_dir / "eval_paired.csv", d.eval);
        files.push_back("eval_paired.csv");
        manifest["spec"] = {{"kind", "blobs"},     {"dim", spec.dim},         {"means", spec.means},
                            {"variance", spec.variance}, {"samples", spec.samples}, {"eval_size", opt.eval_size}};
    } else if (opt.preset == "swarm") {
        const BumpSpec bump;
        const PointCloud cloud = bump_surface(bump);
        SwarmSpec spec;
        if (opt.samples) spec.samples = opt.samples;
        spec.seed = opt.seed;
        save_dataset(opt.out_dir / "dataset.csv", swarm_scenario(XyGrid(cloud), spec));
        save_point_cloud(opt.out_dir / "surface.xyz", cloud);
        files.push_back("surface.xyz");
        manifest["preset"] = opt.preset;
        nlohmann::json src = nlohmann::json::array();
        nlohmann::json tgt = nlohmann::json::array();
        for (const auto& c : spec.source_centers) src.push_back({c[0], c[1]});
        for (const auto& c : spec.target_centers) tgt.push_back({c[0], c[1]});
        manifest["spec"] = {{"kind", "swarm"},
                            {"source_centers", src},
                            {"target_centers", tgt},
                            {"source_variance", spec.source_variance},
                            {"target_variance", spec.target_variance},
                            {"samples", spec.samples},
                            {"surface",
                             {{"x_range", {bump.x_min, bump.x_max}},
                              {"y_range", {bump.y_min, bump.y_max}},
                              {"spacing", bump.spacing},
                              {"amplitude", bump.amplitude},
                              {"width", bump.width}}}};
    } else {
        throw ConfigError("unknown preset '" + opt.preset + "' (expected blobs2d, blobs3d or swarm)");
    }
    manifest["files"] = files;
    write_text(opt.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

TrainResult cmd_train(const RunConfig& cfg) {
    cfg.train.validate();
    const RunData data = load_run_data(cfg);
    std::optional<XyGrid> grid;
    if (data.surface) grid.emplace(*data.surface);
    TrainResult res = train(cfg.train, data.train, grid ? &*grid : nullptr);
    write_train_outputs(resolve_output(cfg.output_dir), cfg, res);
    return res;
}

void cmd_translate(const TranslateOptions& opt) {
    const Checkpoint ck = load_checkpoint(opt.checkpoint);
    const VelocityField v = velocity_from_checkpoint(ck);
    const std::size_t steps = opt.steps ? opt.steps : ck.meta.value("ode_steps", std::size_t{100});
    const OdeMethod method =
        opt.method ? *opt.method : parse_ode_method(ck.meta.value("ode_method", std::string("euler")));

    std::ifstream in(opt.input);
    if (!in) throw IoError("cannot read " + opt.input.string());
    std::string header;
    if (!std::getline(in, header)) throw IoError(opt.input.string() + ": empty file");
    const auto names = split_fields(header, ',');
    std::vector<std::size_t> dim_cols;
    for (std::size_t k = 0;; ++k) {
        const std::string name = "dim_" + std::to_string(k);
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) break;
        dim_cols.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    if (dim_cols.size() != v.dim) {
        throw ShapeError(opt.input.string() + " has " + std::to_string(dim_cols.size()) +
                         " dim_* columns, checkpoint expects " + std::to_string(v.dim));
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_fields(line, ',');
        if (fields.size() != names.size()) {
            throw IoError(opt.input.string() + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(names.size()) + " fields, got " + std::to_string(fields.size()));
        }
        for (std::size_t c : dim_cols) {
            values.push_back(parse_double(fields[c], opt.input.string() + ":" + std::to_string(lineno)));
        }
        rows.push_back(std::move(fields));
    }
    const Tensor x({rows.size(), v.dim}, std::move(values));
    Tensor y;
    if (!opt.trajectory.empty()) {
        const Trajectory traj = integrate(v, x, steps, method);
        write_trajectory_csv(opt.trajectory, traj);
        y = traj.end();
    } else {
        y = translate(v, x, steps, method);
    }
    std::ofstream out(opt.output, std::ios::binary);
    if (!out) throw IoError("cannot write " + opt.output.string());
    out << header << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t k = 0; k < v.dim; ++k) rows[r][dim_cols[k]] = format_double(y(r, k));
        for (std::size_t c = 0; c < rows[r].size(); ++c) out << (c ? "," : "") << rows[r][c];
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + opt.output.string());
}

EvalReport cmd_eval(const EvalCommandOptions& opt) {
    const Checkpoint ck = load_checkpoint(opt.checkpoint);
    const VelocityField v = velocity_from_checkpoint(ck);
    const ConditionalDataset data = load_dataset(opt.dataset);
    std::optional<PairedSplit> paired;
    if (!opt.paired.empty()) paired = load_paired(opt.paired);
    std::optional<XyGrid> grid;
    if (!opt.surface.empty()) grid.emplace(load_point_cloud(opt.surface));
    EvalOptions eo;
    eo.eval_size = opt.eval_size;
    eo.steps = opt.steps ? opt.steps : ck.meta.value("ode_steps", std::size_t{100});
    eo.method = opt.method ? *opt.method : parse_ode_method(ck.meta.value("ode_method", std::string("euler")));
    eo.seed = opt.seed;
    eo.want_te = !opt.skip_te;
    EvalReport rep = evaluate_model(v, data, paired ? &*paired : nullptr, grid ? &*grid : nullptr, eo);
    rep.mode = ck.meta.value("mode", std::string("unknown"));
    rep.config = {{"checkpoint", opt.checkpoint.string()},
                  {"dataset", opt.dataset.string()},
                  {"paired", opt.paired.string()},
                  {"surface", opt.surface.string()},
                  {"eval_size", eo.eval_size},
                  {"steps", eo.steps},
                  {"method", std::string(ode_method_name(eo.method))},
                  {"seed", eo.seed}};
    if (!opt.report.empty()) {
        ensure_dir(opt.report.parent_path());
        save_report(opt.report, rep);
    }
    if (!opt.csv.empty()) append_report_csv(opt.csv, rep);
    return rep;
}

namespace {

struct Method {
    std::string label;
    std::vector<std::string> overrides;
};

struct Experiment {
    std::string preset;
    std::vector<Method> methods;
    bool reflection_paths = false;
};

const std::map<std::string, Method>& method_table() {
    static const std::map<std::string, Method> table{
        {"dfm", {"dfm", {"mode=dfm-two-phase"}}},
        {"dfm-interleaved", {"dfm-interleaved", {"mode=dfm-interleaved"}}},
        {"dfm-no-surface", {"dfm-no-surface", {"mode=dfm-two-phase", "lambda2=0"}}},
        {"fm", {"fm", {"mode=fm"}}},
        {"fm-ot", {"fm-ot", {"mode=fm-ot"}}},
        {"fm-cond", {"fm-cond", {"mode=fm-cond"}}},
        {"fm-cond-ot", {"fm-cond-ot", {"mode=fm-cond-ot"}}},
        {"split", {"split", {"mode=split"}}},
    };
    return table;
}

Experiment experiment(const std::string& name) {
    const auto& t = method_table();
    if (name == "table1-2d") return {"blobs2d", {t.at("fm-cond"), t.at("fm-cond-ot"), t.at("dfm")}, false};
    if (name == "table1-3d") return {"blobs3d", {t.at("fm-cond"), t.at("fm-cond-ot"), t.at("dfm")}, false};
    if (name == "fig-reflection") return {"blobs2d", {t.at("fm-cond"), t.at("dfm")}, true};
    if (name == "swarm") return {"swarm", {t.at("dfm"), t.at("dfm-no-surface"), t.at("fm-cond-ot")}, false};
    throw ConfigError("unknown experiment '" + name + "' (expected table1-2d, table1-3d, fig-reflection or swarm)");
}

std::vector<std::array<std::size_t, 2>> projections(std::size_t dim) {
    if (dim >= 3) return {{0, 1}, {0, 2}};
    return {{0, 1}};
}

const char* kCondColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a"};

std::string cond_color(std::size_t q) { return kCondColors[q % 4]; }

/// Sources drawn for figures: the paired split when present, else the dataset.
Tensor figure_sources(const RunData& d, std::size_t q, std::size_t n) {
    const Tensor& x = d.paired ? d.paired->x[q] : d.train.source[q];
    return x.slice_rows(0, std::min(n, x.rows()));
}

void emit_flow_figures(const fs::path& dir, const std::string& stem, const VelocityField& v, const RunData& d,
                       const TrainConfig& cfg) {
    ensure_dir(dir / "trajectories");
    ensure_dir(dir / "figures");
    std::vector<SvgPlot> plots;
    for (const auto& ax : projections(d.train.dim)) plots.emplace_back(stem, ax);
    for (std::size_t q = 0; q < d.train.conditions(); ++q) {
        const Trajectory traj = integrate(v, figure_sources(d, q, 100), cfg.ode_steps, cfg.ode_method);
        write_trajectory_csv(dir / "trajectories" / (stem + "_cond" + std::to_string(q) + ".csv"), traj);
        const Tensor& tgt = d.train.target[q];
        for (auto& p : plots) {
            p.points(tgt.slice_rows(0, std::min<std::size_t>(300, tgt.rows())), "#bbbbbb", 1.2);
            p.trajectories(traj, 100);
            p.points(traj.end(), cond_color(q), 1.8);
        }
    }
    for (std::size_t i = 0; i < plots.size(); ++i) {
        const auto suffix = plots.size() > 1 ? "_proj" + std::to_string(i) : std::string();
        plots[i].save(dir / "figures" / (stem + suffix + ".svg"));
    }
}

Trajectory path_grid(const Tensor& x, const Tensor& y, const LearnableInterpolant* g, double h, std::size_t steps) {
    Trajectory traj;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(steps);
        const Tensor tt(x.rows(), 1, t);
        traj.times.push_back(t);
        traj.states.push_back(g ? interp_path_values(*g, x, y, tt, h).z : linear_interp(x, y, tt));
    }
    return traj;
}

/// Interpolant paths (linear, and learned when available) between sources and
/// independently drawn targets of the same condition.
void emit_path_figures(const fs::path& dir, const std::string& stem, const LearnableInterpolant* g,
                       const RunData& d, const TrainConfig& cfg) {
    ensure_dir(dir / "trajectories");
    ensure_dir(dir / "figures");
    SvgPlot plot(stem);
    std::mt19937_64 rng(derive_seed(cfg.seed, 600));
    for (std::size_t q = 0; q < d.train.conditions(); ++q) {
        const Tensor x = figure_sources(d, q, 60);
        std::uniform_int_distribution<std::size_t> pick(0, d.train.target[q].rows() - 1);
        std::vector<std::size_t> idx(x.rows());
        for (auto& i : idx) i = pick(rng);
        const Tensor y = d.train.target[q].gather_rows(idx);
        const Trajectory traj = path_grid(x, y, g, cfg.fd_step, 50);
        write_trajectory_csv(dir / "trajectories" / (stem + "_cond" + std::to_string(q) + ".csv"), traj);
        plot.trajectories(traj, 60);
        plot.points(x, cond_color(q), 1.8);
        plot.points(y, cond_color(q), 1.8);
    }
    plot.save(dir / "figures" / (stem + ".svg"));
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void write_table(const fs::path& path, const std::vector<MethodSummary>& rows) {
    std::ostringstream os;
    os << "method,seeds,emd_mean,emd_std,te_mean,te_std,ccr_mean,ccr_std,sa_mean,sa_std\n";
    for (const auto& m : rows) {
        std::vector<double> e, te, ccr, sa;
        for (const auto& r : m.reports) {
            e.push_back(r.emd_mean);
            if (r.translation_error) te.push_back(*r.translation_error);
            if (r.cross_cluster_rate) ccr.push_back(*r.cross_cluster_rate);
            if (r.surface_adherence) sa.push_back(*r.surface_adherence);
        }
        auto pair = [&](const std::vector<double>& v) {
            return v.empty() ? std::string(",") : format_double(mean_of(v)) + "," + format_double(std_of(v));
        };
        os << m.label << ',' << m.reports.size() << ',' << pair(e) << ',' << pair(te) << ',' << pair(ccr) << ','
           << pair(sa) << '\n';
    }
    write_text(path, os.str());
}

} // namespace

std::vector<std::string> experiment_methods(const std::string& name) {
    std::vector<std::string> out;
    for (const auto& m : experiment(name).methods) out.push_back(m.label);
    return out;
}

std::vector<MethodSummary> cmd_reproduce(const ReproduceOptions& opt) {
    const Experiment ex = experiment(opt.experiment);
    std::vector<Method> methods;
    if (opt.methods.empty()) {
        methods = ex.methods;
    } else {
        for (const auto& label : opt.methods) {
            const auto it = method_table().find(label);
            if (it == method_table().end()) throw ConfigError("unknown method '" + label + "'");
            methods.push_back(it->second);
        }
    }
    if (opt.seeds.empty()) throw ConfigError("reproduce needs at least one seed");
    const fs::path dir = resolve_output(opt.out_dir) / opt.experiment;
    ensure_dir(dir);
    const fs::path runs_csv = dir / "runs.csv";
    fs::remove(runs_csv);

    std::vector<MethodSummary> out;
    bool paths_done = false;
    for (const auto& m : methods) {
        MethodSummary summary{m.label, {}};
        for (std::uint64_t seed : opt.seeds) {
            RunConfig cfg;
            apply_preset_defaults(cfg, ex.preset);
            for (const auto& o : opt.overrides) apply_override(cfg, o);
            for (const auto& o : m.overrides) apply_override(cfg, o);
            cfg.train.seed = seed;
            cfg.data_seed = seed;
            cfg.output_dir = dir / "runs" / (m.label + "_seed" + std::to_string(seed));
            cfg.train.validate();

            const RunData data = load_run_data(cfg);
            std::optional<XyGrid> grid;
            if (data.surface) grid.emplace(*data.surface);
            const TrainResult res = train(cfg.train, data.train, grid ? &*grid : nullptr);
            write_train_outputs(cfg.output_dir, cfg, res);

            EvalOptions eo;
            eo.eval_size = cfg.eval_size;
            eo.steps = cfg.train.ode_steps;
            eo.method = cfg.train.ode_method;
            eo.seed = seed;
            eo.want_te = data.paired.has_value();
            EvalReport rep = evaluate_model(res.velocity, data.train, data.paired ? &*data.paired : nullptr,
                                            grid ? &*grid : nullptr, eo);
            rep.mode = m.label;
            rep.config = config_json(cfg);
            save_report(cfg.output_dir / "report.json", rep);
            append_report_csv(runs_csv, rep);
            if (opt.verbose) {
                std::cerr << '[' << opt.experiment << "] " << m.label << " seed " << seed
                          << ": emd=" << rep.emd_mean;
                if (rep.translation_error) std::cerr << " te=" << *rep.translation_error;
                if (rep.cross_cluster_rate) std::cerr << " ccr=" << *rep.cross_cluster_rate;
                if (rep.surface_adherence) std::cerr << " sa=" << *rep.surface_adherence;
                std::cerr << '\n';
            }

            if (seed == opt.seeds.front()) {
                emit_flow_figures(dir, m.label, res.velocity, data, cfg.train);
                if (ex.reflection_paths) {
                    if (!paths_done) {
                        emit_path_figures(dir, "paths_linear", nullptr, data, cfg.train);
                        paths_done = true;
                    }
                    if (res.interpolant) {
                        emit_path_figures(dir, "paths_" + m.label, &*res.interpolant, data, cfg.train);
                    }
                }
            }
            summary.reports.push_back(std::move(rep));
        }
        out.push_back(std::move(summary));
    }
    write_table(dir / "table.csv", out);
    return out;
}

} // namespace dfm
