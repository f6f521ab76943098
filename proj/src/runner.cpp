#include "bluq/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>

#include "bluq/errors.hpp"
#include "json.hpp"

namespace bluq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class PhaseClock {
public:
    explicit PhaseClock(RunManifest& manifest) : manifest_(manifest) {}
    template <class Fn>
    auto time(const std::string& name, Fn&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record(name, t0);
        } else {
            auto result = fn();
            record(name, t0);
            return result;
        }
    }

private:
    void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        manifest_.timings.push_back({name, dt.count()});
    }
    RunManifest& manifest_;
};

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw ValidationError("run_scenario: cannot open " + path.string());
    return f;
}

void write_profiles_csv(const fs::path& path, const Ensemble& ens, int max_realizations) {
    auto f = open_out(path);
    f << "realization,t,x,S\n";
    const int n = std::min<int>(ens.size(), max_realizations);
    for (int r = 0; r < n; ++r)
        for (std::size_t ti = 0; ti < ens.grids.t_anchors.size(); ++ti)
            for (std::size_t xi = 0; xi < ens.grids.x_profile.size(); ++xi)
                f << r << ',' << ens.grids.t_anchors[ti] << ',' << ens.grids.x_profile[xi] << ','
                  << ens.outputs[r].profiles(ti, xi) << '\n';
}

void write_qoi_csv(const fs::path& path, const Ensemble& ens, QoiKind kind, double s_init,
                   double delta) {
    auto f = open_out(path);
    f << "realization,anchor,value,censored\n";
    const int n_anchors = static_cast<int>(kind == QoiKind::FrontRadius
                                               ? ens.grids.t_anchors.size()
                                               : ens.grids.x_anchors.size());
    for (int a = 0; a < n_anchors; ++a) {
        const QoiSamples q = extract_qoi(ens, kind, a, s_init, delta);
        std::size_t vi = 0;
        for (int r = 0; r < ens.size(); ++r) {
            if (q.censored[r]) {
                f << r << ',' << q.anchor << ",,1\n";
            } else {
                f << r << ',' << q.anchor << ',' << q.values[vi++] << ",0\n";
            }
        }
    }
}

json qoi_comparison_to_json(const QoiComparison& q) {
    json anchors = json::array();
    for (const AnchorComparison& a : q.anchors) {
        json ja = {{"anchor", a.anchor},
                   {"w1_model", a.w1_model},
                   {"w1_uniform", a.w1_uniform},
                   {"censored_reference", a.censored_ref},
                   {"censored_test", a.censored_test},
                   {"jsd", a.jsd_value},
                   {"skipped", a.skipped}};
        ja["kl"] = std::isfinite(a.kl) ? json(a.kl) : json("inf");
        anchors.push_back(std::move(ja));
    }
    return {{"anchors", std::move(anchors)},
            {"avg_w1_model", q.avg_w1_model},
            {"avg_w1_uniform", q.avg_w1_uniform},
            {"relative_difference_pct", 100.0 * q.relative_difference}};
}

void write_comparison_json(const fs::path& path, const ComparisonReport& report) {
    json j = {{"front_radius", qoi_comparison_to_json(report.front_radius)},
              {"breakthrough_time", qoi_comparison_to_json(report.breakthrough)}};
    open_out(path) << j.dump(1) << "\n";
}

void write_loss_history_csv(const fs::path& path, const std::vector<LossTerms>& history,
                            const TrainingConfig& cfg) {
    auto f = open_out(path);
    f << "iteration,ic,bc,residual,planes,total\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        const LossTerms& lt = history[i];
        f << i << ',' << lt.ic << ',' << lt.bc << ',' << lt.residual << ',' << lt.planes << ','
          << lt.weighted_total(cfg) << '\n';
    }
}

void write_moments_csv(const fs::path& path, const MomentsSolution& sol) {
    auto f = open_out(path);
    f << "x,t,mu,sigma\n";
    for (std::size_t ti = 0; ti < sol.t.size(); ++ti)
        for (std::size_t xi = 0; xi < sol.x.size(); ++xi)
            f << sol.x[xi] << ',' << sol.t[ti] << ',' << sol.mu[ti][xi] << ','
              << sol.sigma[ti][xi] << '\n';
}

void write_fields_csv(const fs::path& path, std::span<const FieldSample> fields,
                      const Grid1D& grid, int max_realizations) {
    auto f = open_out(path);
    f << "realization,x,v_d\n";
    const int n = std::min<int>(static_cast<int>(fields.size()), max_realizations);
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < grid.n_cells; ++i)
            f << r << ',' << grid.center(i) << ',' << fields[r].cell_values[i] << '\n';
}

// data-only plotting companion; kept free of plotting deps in the tool itself
constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plot helper for run artifacts. Usage: python3 plot_results.py [out_dir]"""
import os, sys
import pandas as pd
import matplotlib.pyplot as plt

out = sys.argv[1] if len(sys.argv) > 1 else "."

def maybe(name):
    path = os.path.join(out, name)
    return pd.read_csv(path) if os.path.exists(path) else None

profiles = {tag: maybe(f"profiles_{tag}.csv") for tag in ("reference", "surrogate")}
fig, ax = plt.subplots()
for tag, df in profiles.items():
    if df is None:
        continue
    style = "-" if tag == "reference" else "--"
    for (r, t), g in df.groupby(["realization", "t"]):
        if r > 2:
            break
        ax.plot(g["x"], g["S"], style, alpha=0.6, label=f"{tag} t={t:.2f}" if r == 0 else None)
ax.set_xlabel("x"); ax.set_ylabel("S"); ax.legend(fontsize=6)
fig.savefig(os.path.join(out, "profiles.png"), dpi=150)

for kind in ("front_radius", "breakthrough"):
    fig, ax = plt.subplots()
    for tag, style in (("reference", "-"), ("surrogate", "--")):
        df = maybe(f"qoi_{kind}_{tag}.csv")
        if df is None:
            continue
        df = df[df["censored"] == 0]
        for anchor, g in df.groupby("anchor"):
            ax.hist(g["value"], bins=30, histtype="step", label=f"{tag} {anchor:.2f}")
    ax.set_title(kind); ax.legend(fontsize=6)
    fig.savefig(os.path.join(out, f"qoi_{kind}.png"), dpi=150)
print("wrote plots to", out)
)PY";

} // namespace

std::string file_digest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("file_digest: cannot open " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (f.read(buf, sizeof buf) || f.gcount() > 0) {
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!f) break;
    }
    char out[20];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

namespace {

std::unique_ptr<ForwardModel> make_reference_model(const ScenarioConfig& cfg) {
    if (cfg.reference == ReferenceModel::Moc)
        return std::make_unique<MocForwardModel>(cfg.fluid);
    return std::make_unique<FvmForwardModel>(cfg.fluid, cfg.grid, cfg.dt_rule);
}

void write_manifest(const fs::path& dir, RunManifest& manifest,
                    const std::vector<std::string>& files) {
    for (const auto& name : files)
        manifest.artifacts.emplace_back(name, file_digest((dir / name).string()));
    json j;
    j["config_hash"] = manifest.config_hash;
    j["version"] = manifest.version;
    json timings = json::array();
    for (const PhaseTiming& t : manifest.timings)
        timings.push_back({{"phase", t.name}, {"seconds", t.seconds}});
    j["timings"] = std::move(timings);
    json artifacts = json::array();
    for (const auto& [name, digest] : manifest.artifacts)
        artifacts.push_back({{"file", name}, {"digest", digest}});
    j["artifacts"] = std::move(artifacts);
    open_out(dir / "manifest.json") << j.dump(1) << "\n";
}

} // namespace

RunManifest run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);

    RunManifest manifest;
    manifest.config_hash = config_hash(cfg);
    manifest.version = kToolVersion;
    PhaseClock clock(manifest);
    std::vector<std::string> files;

    open_out(dir / "config.json") << serialize_config(cfg) << "\n";
    files.push_back("config.json");

    const EvalGrids grids = make_eval_grids(cfg);
    const FieldSampler sampler = make_sampler(cfg);

    const auto fields = clock.time("sampling", [&] {
        return draw_fields(sampler, cfg.ensemble.n, cfg.seed);
    });
    write_fields_csv(dir / "fields.csv", fields, cfg.grid, cfg.ensemble.profile_csv_max);
    files.push_back("fields.csv");

    const auto reference_model = make_reference_model(cfg);
    const Ensemble reference = clock.time("reference", [&] {
        return evaluate_ensemble(*reference_model, fields, grids, cfg.id);
    });
    write_profiles_csv(dir / "profiles_reference.csv", reference, cfg.ensemble.profile_csv_max);
    write_qoi_csv(dir / "qoi_front_radius_reference.csv", reference, QoiKind::FrontRadius,
                  cfg.fluid.s_init, cfg.ensemble.qoi_delta);
    write_qoi_csv(dir / "qoi_breakthrough_reference.csv", reference, QoiKind::Breakthrough,
                  cfg.fluid.s_init, cfg.ensemble.qoi_delta);
    files.insert(files.end(), {"profiles_reference.csv", "qoi_front_radius_reference.csv",
                               "qoi_breakthrough_reference.csv"});

    // surrogate: train, or load a previously trained checkpoint
    std::optional<MlpModel> surrogate;
    if (cfg.training) {
        const TrainResult tr = clock.time("training", [&] {
            return train(*cfg.training, cfg.fluid, cfg.param);
        });
        surrogate = tr.model;
        save_checkpoint(tr.model, manifest.config_hash, (dir / "checkpoint.json").string());
        write_loss_history_csv(dir / "loss_history.csv", tr.history, *cfg.training);
        files.insert(files.end(), {"checkpoint.json", "loss_history.csv"});
    } else if (!cfg.surrogate_checkpoint.empty()) {
        surrogate = load_checkpoint(cfg.surrogate_checkpoint).model;
    }

    if (surrogate) {
        const SurrogateForwardModel model(*surrogate, cfg.param);
        const Ensemble tested = clock.time("inference", [&] {
            return evaluate_ensemble(model, fields, grids, cfg.id);
        });
        write_profiles_csv(dir / "profiles_surrogate.csv", tested, cfg.ensemble.profile_csv_max);
        write_qoi_csv(dir / "qoi_front_radius_surrogate.csv", tested, QoiKind::FrontRadius,
                      cfg.fluid.s_init, cfg.ensemble.qoi_delta);
        write_qoi_csv(dir / "qoi_breakthrough_surrogate.csv", tested, QoiKind::Breakthrough,
                      cfg.fluid.s_init, cfg.ensemble.qoi_delta);
        files.insert(files.end(), {"profiles_surrogate.csv", "qoi_front_radius_surrogate.csv",
                                   "qoi_breakthrough_surrogate.csv"});
        const ComparisonReport report = clock.time("metrics", [&] {
            return compare(reference, tested, cfg.fluid, cfg.ensemble.qoi_delta, cfg.seed);
        });
        write_comparison_json(dir / "comparison.json", report);
        files.push_back("comparison.json");
    }

    if (cfg.moments) {
        const MomentsPhase& mp = *cfg.moments;
        const MomentsSolution fd = clock.time("moments_fd", [&] {
            return moments_fd_solve(mp.config, cfg.fluid);
        });
        write_moments_csv(dir / "moments_fd.csv", fd);
        const MomentsPinnResult pinn = clock.time("moments_pinn", [&] {
            return moments_pinn_train(mp.config, cfg.fluid, mp.training);
        });
        write_moments_csv(dir / "moments_pinn.csv", pinn.solution);

        // Monte Carlo oracle over exponential-covariance fields
        ScenarioConfig mc_cfg = cfg;
        mc_cfg.mode = SamplingMode::ExpCov;
        mc_cfg.expcov_sigma_y2 = mp.config.sigma_y2;
        mc_cfg.expcov_s = mp.config.s;
        mc_cfg.expcov_vbar = mp.config.v_bar;
        mc_cfg.grid = mp.config.grid;
        mc_cfg.anchors.times = mp.config.snapshots;
        mc_cfg.anchors.profile_points = mp.config.grid.n_cells;
        mc_cfg.anchors.profile_x_max = mp.config.grid.x_max;
        const Ensemble mc = clock.time("moments_mc", [&] {
            EvalGrids mg = make_eval_grids(mc_cfg);
            mg.x_profile = mp.config.grid.centers();
            const FvmForwardModel model(cfg.fluid, mp.config.grid, cfg.dt_rule);
            return run_ensemble(model, make_sampler(mc_cfg), mp.mc_realizations, mg, cfg.seed,
                                cfg.id + "-mc");
        });
        const MomentsSolution mc_sol = moments_from_ensemble(mc);
        write_moments_csv(dir / "moments_mc.csv", mc_sol);

        json summary;
        summary["fd_mass_balance"] = fd.mass_balance;
        json per_time = json::array();
        for (std::size_t ti = 0; ti < mc_sol.t.size(); ++ti) {
            // compare at the matching PINN snapshot
            const auto it = std::find_if(pinn.solution.t.begin(), pinn.solution.t.end(),
                                         [&](double t) { return std::abs(t - mc_sol.t[ti]) < 1e-9; });
            if (it == pinn.solution.t.end()) continue;
            const auto pi = static_cast<std::size_t>(it - pinn.solution.t.begin());
            const ErrorMetricsResult em =
                error_metrics(pinn.solution.mu[pi], mc_sol.mu[ti]);
            double max_e = 0.0;
            for (double e : em.e_std) max_e = std::max(max_e, e);
            per_time.push_back({{"t", mc_sol.t[ti]},
                                {"pearson_r_mean", em.r_defined ? json(em.r) : json(nullptr)},
                                {"max_abs_error_mean", max_e}});
        }
        summary["pinn_vs_mc"] = std::move(per_time);
        open_out(dir / "moments_summary.json") << summary.dump(1) << "\n";
        files.insert(files.end(),
                     {"moments_fd.csv", "moments_pinn.csv", "moments_mc.csv",
                      "moments_summary.json"});
    }

    open_out(dir / "plot_results.py") << kPlotScript;
    files.push_back("plot_results.py");

    write_manifest(dir, manifest, files);
    return manifest;
}

BenchReport bench(const ScenarioConfig& cfg) {
    cfg.validate();
    if (!cfg.training)
        throw ValidationError("bench: needs a training section (both paths must run)");
    BenchReport report;
    report.n = cfg.ensemble.n;
    const EvalGrids grids = make_eval_grids(cfg);
    const auto fields = draw_fields(make_sampler(cfg), cfg.ensemble.n, cfg.seed);

    const auto t0 = std::chrono::steady_clock::now();
    const auto reference_model = make_reference_model(cfg);
    evaluate_ensemble(*reference_model, fields, grids, cfg.id);
    const auto t1 = std::chrono::steady_clock::now();
    const TrainResult tr = train(*cfg.training, cfg.fluid, cfg.param);
    const auto t2 = std::chrono::steady_clock::now();
    const SurrogateForwardModel surrogate(tr.model, cfg.param);
    evaluate_ensemble(surrogate, fields, grids, cfg.id);
    const auto t3 = std::chrono::steady_clock::now();

    report.mcs_seconds = std::chrono::duration<double>(t1 - t0).count();
    report.train_seconds = std::chrono::duration<double>(t2 - t1).count();
    report.infer_seconds = std::chrono::duration<double>(t3 - t2).count();
    return report;
}

} // namespace bluq
