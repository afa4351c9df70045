// dfm: generate data, train, translate, evaluate and reproduce experiments.
#include "dfm/commands.hpp"
#include "dfm/error.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_ode_flags(CLI::App* cmd, std::size_t& steps, std::string& method) {
    cmd->add_option("--steps", steps, "ODE steps (default: the checkpoint's)");
    cmd->add_option("--method", method, "euler or rk4 (default: the checkpoint's)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional flow matching for unpaired domain translation"};
    app.require_subcommand(1);

    dfm::GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic dataset");
    gen_cmd->add_option("--preset", gen.preset, "blobs2d, blobs3d or swarm");
    gen_cmd->add_option("--spec", gen.spec_file, "JSON blob spec instead of a preset");
    gen_cmd->add_option("--out", gen.out_dir, "Output directory");
    gen_cmd->add_option("--seed", gen.seed, "Generation seed");
    gen_cmd->add_option("--samples", gen.samples, "Samples per condition and domain");
    gen_cmd->add_option("--eval-size", gen.eval_size, "Paired evaluation rows per condition");

    std::string config_file;
    std::string train_preset;
    std::string train_out;
    std::vector<std::string> sets;
    auto* train_cmd = app.add_subcommand("train", "Train a velocity field (and interpolant)");
    train_cmd->add_option("--config", config_file, "key = value config file");
    train_cmd->add_option("--preset", train_preset, "Preset applied before the config file");
    train_cmd->add_option("--set", sets, "key=value override, repeatable");
    train_cmd->add_option("--out", train_out, "Output directory (overrides output_dir)");

    dfm::TranslateOptions tr;
    std::string tr_method;
    auto* tr_cmd = app.add_subcommand("translate", "Push input rows through the flow");
    tr_cmd->add_option("--checkpoint", tr.checkpoint, "Velocity checkpoint")->required();
    tr_cmd->add_option("--input", tr.input, "CSV with dim_* columns")->required();
    tr_cmd->add_option("--output", tr.output, "Output CSV")->required();
    tr_cmd->add_option("--trajectory", tr.trajectory, "Also write the full time grid here");
    add_ode_flags(tr_cmd, tr.steps, tr_method);

    dfm::EvalCommandOptions ev;
    std::string ev_method;
    auto* ev_cmd = app.add_subcommand("eval", "Score a checkpoint");
    ev_cmd->add_option("--checkpoint", ev.checkpoint, "Velocity checkpoint")->required();
    ev_cmd->add_option("--dataset", ev.dataset, "Dataset CSV")->required();
    ev_cmd->add_option("--paired", ev.paired, "Paired evaluation CSV");
    ev_cmd->add_option("--surface", ev.surface, "Point cloud for surface adherence");
    ev_cmd->add_option("--report", ev.report, "Report JSON path");
    ev_cmd->add_option("--csv", ev.csv, "Append one summary row to this CSV");
    ev_cmd->add_flag("--no-te", ev.skip_te, "Skip translation error (no paired split needed)");
    ev_cmd->add_option("--eval-size", ev.eval_size, "Rows per condition");
    ev_cmd->add_option("--seed", ev.seed, "Subsampling seed");
    add_ode_flags(ev_cmd, ev.steps, ev_method);

    dfm::ReproduceOptions rep;
    std::vector<std::uint64_t> seeds;
    bool quiet = false;
    auto* rep_cmd = app.add_subcommand("reproduce", "Run an experiment over seeds");
    rep_cmd->add_option("experiment", rep.experiment, "table1-2d, table1-3d, fig-reflection or swarm")->required();
    rep_cmd->add_option("--out", rep.out_dir, "Results root");
    rep_cmd->add_option("--seeds", seeds, "Seeds (default 0..9)")->delimiter(',');
    rep_cmd->add_option("--methods", rep.methods, "Subset of method labels")->delimiter(',');
    rep_cmd->add_option("--set", rep.overrides, "key=value override for every run, repeatable");
    rep_cmd->add_flag("--quiet", quiet, "No per-run progress lines");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) {
            dfm::cmd_gen(gen);
        } else if (*train_cmd) {
            dfm::RunConfig cfg;
            if (!train_preset.empty()) dfm::apply_preset_defaults(cfg, train_preset);
            if (!config_file.empty()) dfm::load_config_file(cfg, config_file);
            for (const auto& s : sets) dfm::apply_override(cfg, s);
            if (!train_out.empty()) cfg.output_dir = train_out;
            dfm::cmd_train(cfg);
        } else if (*tr_cmd) {
            if (!tr_method.empty()) tr.method = dfm::parse_ode_method(tr_method);
            dfm::cmd_translate(tr);
        } else if (*ev_cmd) {
            if (!ev_method.empty()) ev.method = dfm::parse_ode_method(ev_method);
            dfm::cmd_eval(ev);
        } else if (*rep_cmd) {
            if (!seeds.empty()) rep.seeds = seeds;
            rep.verbose = !quiet;
            dfm::cmd_reproduce(rep);
        }
    } catch (const dfm::ConfigError& e) {
        std::cerr << "dfm: usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "dfm: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
