#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bluq/errors.hpp"
#include "bluq/runner.hpp"

namespace {

using namespace bluq;

struct CommonArgs {
    std::string config_path;
    std::string preset_name;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int samples = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "scenario config JSON path");
    cmd->add_option("--preset", args.preset_name, "scenario preset name");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master seed")->each([&args](const std::string&) {
        args.seed_given = true;
    });
    cmd->add_option("--samples", args.samples, "ensemble size override");
}

ScenarioConfig load_scenario(const CommonArgs& args) {
    ScenarioConfig cfg;
    if (!args.config_path.empty()) {
        std::ifstream f(args.config_path);
        if (!f) throw ValidationError("cannot open config " + args.config_path);
        std::ostringstream ss;
        ss << f.rdbuf();
        cfg = parse_config(ss.str());
    } else if (!args.preset_name.empty()) {
        cfg = preset(args.preset_name);
    } else {
        throw ValidationError("either --config or --preset is required");
    }
    if (args.seed_given) {
        cfg.seed = args.seed;
        cfg.seed_set = true;
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.samples > 0) cfg.ensemble.n = args.samples;
    cfg.validate();
    return cfg;
}

void print_manifest(const RunManifest& manifest) {
    std::printf("config %s | tool %s\n", manifest.config_hash.c_str(), manifest.version.c_str());
    for (const auto& t : manifest.timings)
        std::printf("  %-12s %8.2f s\n", t.name.c_str(), t.seconds);
    for (const auto& [file, digest] : manifest.artifacts)
        std::printf("  %s  %s\n", digest.c_str(), file.c_str());
}

int do_solve(const ScenarioConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const EvalGrids grids = make_eval_grids(cfg);
    const auto fields = draw_fields(make_sampler(cfg), 1, cfg.seed);
    std::unique_ptr<ForwardModel> model;
    if (cfg.reference == ReferenceModel::Moc)
        model = std::make_unique<MocForwardModel>(cfg.fluid);
    else
        model = std::make_unique<FvmForwardModel>(cfg.fluid, cfg.grid, cfg.dt_rule);
    const RealizationOutput out = model->evaluate(fields[0], grids);

    const std::string path = cfg.out_dir + "/solution.csv";
    std::ofstream f(path);
    f << "t,x,S\n";
    for (std::size_t ti = 0; ti < grids.t_anchors.size(); ++ti)
        for (std::size_t xi = 0; xi < grids.x_profile.size(); ++xi)
            f << grids.t_anchors[ti] << ',' << grids.x_profile[xi] << ','
              << out.profiles(ti, xi) << '\n';
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int do_sample(const ScenarioConfig& cfg, int n) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto fields = draw_fields(make_sampler(cfg), n, cfg.seed);
    const std::string path = cfg.out_dir + "/fields.csv";
    std::ofstream f(path);
    f << "realization,x,v_d\n";
    for (int r = 0; r < static_cast<int>(fields.size()); ++r)
        for (int i = 0; i < cfg.grid.n_cells; ++i)
            f << r << ',' << cfg.grid.center(i) << ',' << fields[r].cell_values[i] << '\n';
    std::printf("wrote %s (%d realizations)\n", path.c_str(), n);
    return 0;
}

int do_train(const ScenarioConfig& cfg) {
    if (!cfg.training) throw ValidationError("train: the scenario has no training section");
    std::filesystem::create_directories(cfg.out_dir);
    const TrainResult tr = train(*cfg.training, cfg.fluid, cfg.param);
    const std::string ckpt = cfg.out_dir + "/checkpoint.json";
    save_checkpoint(tr.model, config_hash(cfg), ckpt);
    std::ofstream f(cfg.out_dir + "/loss_history.csv");
    f << "iteration,ic,bc,residual,planes,total\n";
    for (std::size_t i = 0; i < tr.history.size(); ++i)
        f << i << ',' << tr.history[i].ic << ',' << tr.history[i].bc << ','
          << tr.history[i].residual << ',' << tr.history[i].planes << ','
          << tr.history[i].weighted_total(*cfg.training) << '\n';
    std::printf("trained %d iterations; final loss %.6g; wrote %s\n",
                cfg.training->optimizer.iterations,
                tr.history.back().weighted_total(*cfg.training), ckpt.c_str());
    return 0;
}

int do_infer(const ScenarioConfig& cfg, const std::string& checkpoint) {
    if (checkpoint.empty()) throw ValidationError("infer: --checkpoint is required");
    std::filesystem::create_directories(cfg.out_dir);
    const MlpModel model = load_checkpoint(checkpoint).model;
    const EvalGrids grids = make_eval_grids(cfg);
    const auto fields = draw_fields(make_sampler(cfg), cfg.ensemble.n, cfg.seed);
    const SurrogateForwardModel fm(model, cfg.param);
    const Ensemble ens = evaluate_ensemble(fm, fields, grids, cfg.id);
    const std::string path = cfg.out_dir + "/profiles_surrogate.csv";
    std::ofstream f(path);
    f << "realization,t,x,S\n";
    const int cap = std::min(cfg.ensemble.profile_csv_max, ens.size());
    for (int r = 0; r < cap; ++r)
        for (std::size_t ti = 0; ti < grids.t_anchors.size(); ++ti)
            for (std::size_t xi = 0; xi < grids.x_profile.size(); ++xi)
                f << r << ',' << grids.t_anchors[ti] << ',' << grids.x_profile[xi] << ','
                  << ens.outputs[r].profiles(ti, xi) << '\n';
    std::printf("wrote %s (%d realizations evaluated)\n", path.c_str(), ens.size());
    return 0;
}

int do_moments(const ScenarioConfig& cfg) {
    if (!cfg.moments) throw ValidationError("moments: the scenario has no moments section");
    ScenarioConfig only_moments = cfg;
    only_moments.training.reset();
    only_moments.surrogate_checkpoint.clear();
    only_moments.ensemble.n = 2; // reference ensemble is incidental here
    print_manifest(run_scenario(only_moments));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic two-phase displacement toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string checkpoint;

    CLI::App* solve = app.add_subcommand("solve", "deterministic reference solve");
    CLI::App* sample = app.add_subcommand("sample", "draw velocity-field realizations");
    CLI::App* train_cmd = app.add_subcommand("train", "train the surrogate");
    CLI::App* infer = app.add_subcommand("infer", "evaluate a trained surrogate");
    CLI::App* uq = app.add_subcommand("uq", "full ensemble + comparison pipeline");
    CLI::App* moments = app.add_subcommand("moments", "statistical-moments pipeline");
    CLI::App* bench_cmd = app.add_subcommand("bench", "time the sampling vs surrogate paths");
    CLI::App* presets = app.add_subcommand("presets", "list scenario presets");
    for (CLI::App* cmd : {solve, sample, train_cmd, infer, uq, moments, bench_cmd})
        add_common(cmd, args);
    infer->add_option("--checkpoint", checkpoint, "model checkpoint path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (presets->parsed()) {
            for (const auto& name : preset_names()) std::printf("%s\n", name.c_str());
            return 0;
        }
        const ScenarioConfig cfg = load_scenario(args);
        if (solve->parsed()) return do_solve(cfg);
        if (sample->parsed()) return do_sample(cfg, args.samples > 0 ? args.samples : 10);
        if (train_cmd->parsed()) return do_train(cfg);
        if (infer->parsed()) return do_infer(cfg, checkpoint);
        if (moments->parsed()) return do_moments(cfg);
        if (bench_cmd->parsed()) {
            const BenchReport r = bench(cfg);
            std::printf("n=%d\nmcs_seconds=%.3f\ntrain_seconds=%.3f\ninfer_seconds=%.3f\n", r.n,
                        r.mcs_seconds, r.train_seconds, r.infer_seconds);
            return 0;
        }
        print_manifest(run_scenario(cfg));
        return 0;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
