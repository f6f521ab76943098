#include "bluq/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bluq/errors.hpp"
#include "json.hpp"

namespace bluq {

using nlohmann::json;

void ScenarioConfig::validate() const {
    std::vector<std::string> errs;
    auto guard = [&errs](auto&& fn, const std::string& where) {
        try {
            fn();
        } catch (const std::exception& e) {
            errs.push_back(where + ": " + e.what());
        }
    };
    if (!seed_set) errs.push_back("seed: a seed is required (no silent nondeterminism)");
    guard([&] { fluid.validate(); }, "fluid");
    guard([&] { grid.validate(); }, "grid");
    if (mode == SamplingMode::Parametric) {
        if (static_cast<int>(theta_dists.size()) != param.param_count())
            errs.push_back("velocity.theta: need one distribution per parameter (" +
                           std::to_string(param.param_count()) + ")");
        for (std::size_t i = 0; i < theta_dists.size(); ++i)
            guard([&] { bluq::validate(theta_dists[i]); },
                  "velocity.theta[" + std::to_string(i) + "]");
    }
    if (mode == SamplingMode::GriddedIid) {
        if (theta_dists.size() != 1)
            errs.push_back("velocity.theta: gridded-iid mode uses exactly one distribution");
        else
            guard([&] { bluq::validate(theta_dists[0]); }, "velocity.theta[0]");
    }
    if (mode == SamplingMode::ExpCov) {
        if (!(expcov_sigma_y2 >= 0.0)) errs.push_back("velocity.expcov.sigma_y2 must be >= 0");
        if (!(expcov_s > 0.0)) errs.push_back("velocity.expcov.s must be > 0");
        if (!(expcov_vbar > 0.0)) errs.push_back("velocity.expcov.v_bar must be > 0");
    }
    if (ensemble.n < 1) errs.push_back("ensemble.n must be >= 1");
    if (!(ensemble.qoi_delta > 0.0)) errs.push_back("ensemble.qoi_delta must be > 0");
    if (anchors.times.empty()) errs.push_back("anchors.times must not be empty");
    if (anchors.locations.empty()) errs.push_back("anchors.locations must not be empty");
    if (anchors.profile_points < 2) errs.push_back("anchors.profile_points must be >= 2");
    if (anchors.series_points < 2) errs.push_back("anchors.series_points must be >= 2");
    if (!(anchors.t_series_max > 0.0)) errs.push_back("anchors.t_series_max must be > 0");
    if (!(anchors.profile_x_max > 0.0)) errs.push_back("anchors.profile_x_max must be > 0");
    if (reference == ReferenceModel::Fvm &&
        std::abs(anchors.profile_x_max - grid.x_max) > 1e-12)
        errs.push_back("anchors.profile_x_max must equal grid.x_max for an FVM reference");
    if (reference == ReferenceModel::Moc && mode != SamplingMode::Parametric &&
        mode != SamplingMode::Deterministic)
        errs.push_back("reference: the analytic model needs a constant-per-realization field");
    if (training) {
        guard([&] { training->validate(); }, "training");
        if (mode == SamplingMode::Parametric &&
            static_cast<int>(training->theta_ranges.size()) != param.param_count())
            errs.push_back("training.theta_ranges must match the parameterization dimension");
    }
    if (!training && !surrogate_checkpoint.empty() && ensemble.n < 1)
        errs.push_back("surrogate_checkpoint requires a runnable ensemble");
    if (moments) guard([&] { moments->config.validate(); }, "moments");
    if (max_field_resample < 1) errs.push_back("max_field_resample must be >= 1");

    if (!errs.empty()) {
        std::string joined = "ScenarioConfig:";
        for (const auto& e : errs) joined += "\n  - " + e;
        throw ValidationError(joined);
    }
}

// ---- JSON helpers ------------------------------------------------------------

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path,
                std::vector<std::string>& errs) {
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) errs.push_back(path + ": unknown key '" + key + "'");
    }
}

json tn_to_json(const TruncatedNormal& t) {
    return {{"type", "truncated-normal"}, {"mu", t.mu}, {"sigma", t.sigma}, {"low", t.low},
            {"up", t.up}};
}

json dist_to_json(const DistributionSpec& d) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, TruncatedNormal>) {
                return tn_to_json(v);
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                return {{"type", "uniform"}, {"low", v.low}, {"up", v.up}};
            } else {
                return {{"type", "bimodal"},
                        {"weights", v.weights},
                        {"components", {tn_to_json(v.components[0]), tn_to_json(v.components[1])}}};
            }
        },
        d);
}

TruncatedNormal tn_from_json(const json& j, const std::string& path,
                             std::vector<std::string>& errs) {
    check_keys(j, {"type", "mu", "sigma", "low", "up"}, path, errs);
    TruncatedNormal t;
    t.mu = j.value("mu", 0.0);
    t.sigma = j.value("sigma", 1.0);
    t.low = j.value("low", -1.0);
    t.up = j.value("up", 1.0);
    return t;
}

DistributionSpec dist_from_json(const json& j, const std::string& path,
                                std::vector<std::string>& errs) {
    const std::string type = j.value("type", "");
    if (type == "truncated-normal") return tn_from_json(j, path, errs);
    if (type == "uniform") {
        check_keys(j, {"type", "low", "up"}, path, errs);
        return UniformDist{j.value("low", 0.0), j.value("up", 1.0)};
    }
    if (type == "bimodal") {
        check_keys(j, {"type", "weights", "components"}, path, errs);
        BimodalMixture b;
        if (j.contains("weights") && j["weights"].size() == 2) {
            b.weights[0] = j["weights"][0].get<double>();
            b.weights[1] = j["weights"][1].get<double>();
        } else {
            errs.push_back(path + ".weights: need exactly two weights");
        }
        if (j.contains("components") && j["components"].size() == 2) {
            b.components[0] = tn_from_json(j["components"][0], path + ".components[0]", errs);
            b.components[1] = tn_from_json(j["components"][1], path + ".components[1]", errs);
        } else {
            errs.push_back(path + ".components: need exactly two components");
        }
        return b;
    }
    errs.push_back(path + ".type: unknown distribution '" + type + "'");
    return UniformDist{0.0, 1.0};
}

json field_to_json(const VelocityFieldSpec& f) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantField>) {
                return {{"kind", "constant"}, {"v", v.v}};
            } else if constexpr (std::is_same_v<T, AffineField>) {
                return {{"kind", "affine"}, {"theta", v.theta}, {"b", v.b}};
            } else if constexpr (std::is_same_v<T, PeriodicField>) {
                return {{"kind", "periodic"}, {"theta", v.theta}, {"k", v.k}, {"b", v.b}};
            } else if constexpr (std::is_same_v<T, FourierSeriesField>) {
                return {{"kind", "fourier-series"},
                        {"theta", v.theta},
                        {"amplitude", v.amplitude},
                        {"b", v.b}};
            } else if constexpr (std::is_same_v<T, TanhStairsField>) {
                return {{"kind", "tanh-stairs"}};
            } else if constexpr (std::is_same_v<T, HighFreqCosineField>) {
                return {{"kind", "highfreq-cosine"}};
            } else {
                return {{"kind", "gridded"}, {"values", v.values}, {"x_max", v.x_max}};
            }
        },
        f);
}

VelocityFieldSpec field_from_json(const json& j, const std::string& path,
                                  std::vector<std::string>& errs) {
    const std::string kind = j.value("kind", "");
    if (kind == "constant") {
        check_keys(j, {"kind", "v"}, path, errs);
        return ConstantField{j.value("v", 1.0)};
    }
    if (kind == "affine") {
        check_keys(j, {"kind", "theta", "b"}, path, errs);
        return AffineField{j.value("theta", 1.0), j.value("b", 0.5)};
    }
    if (kind == "periodic") {
        check_keys(j, {"kind", "theta", "k", "b"}, path, errs);
        return PeriodicField{j.value("theta", 1.0), j.value("k", 1.0), j.value("b", 0.5)};
    }
    if (kind == "fourier-series") {
        check_keys(j, {"kind", "theta", "amplitude", "b"}, path, errs);
        FourierSeriesField f;
        f.theta = j.value("theta", std::vector<double>{});
        f.amplitude = j.value("amplitude", 1.0);
        f.b = j.value("b", 1.0);
        return f;
    }
    if (kind == "tanh-stairs") {
        check_keys(j, {"kind"}, path, errs);
        return TanhStairsField{};
    }
    if (kind == "highfreq-cosine") {
        check_keys(j, {"kind"}, path, errs);
        return HighFreqCosineField{};
    }
    if (kind == "gridded") {
        check_keys(j, {"kind", "values", "x_max"}, path, errs);
        GriddedField g;
        g.values = j.value("values", std::vector<double>{});
        g.x_max = j.value("x_max", 1.0);
        return g;
    }
    errs.push_back(path + ".kind: unknown field kind '" + kind + "'");
    return ConstantField{1.0};
}

const char* param_kind_name(VelocityParameterization::Kind k) {
    switch (k) {
        case VelocityParameterization::Kind::PointwiseVelocity: return "pointwise";
        case VelocityParameterization::Kind::Affine: return "affine";
        case VelocityParameterization::Kind::Periodic: return "periodic";
        case VelocityParameterization::Kind::FourierModes: return "fourier";
    }
    return "pointwise";
}

json training_to_json(const TrainingConfig& t) {
    json j;
    j["depth"] = t.depth;
    j["width"] = t.width;
    j["n_samples"] = t.n_samples;
    j["multipliers"] = {{"ic", t.w_ic}, {"bc", t.w_bc}, {"residual", t.w_residual},
                        {"planes", t.w_planes}};
    j["optimizer"] = {{"step", t.optimizer.step}, {"iterations", t.optimizer.iterations},
                      {"seed", t.optimizer.seed}};
    j["x_range"] = {t.x_range.lo, t.x_range.hi};
    j["t_range"] = {t.t_range.lo, t.t_range.hi};
    json ranges = json::array();
    for (const Range& r : t.theta_ranges) ranges.push_back({r.lo, r.hi});
    j["theta_ranges"] = std::move(ranges);
    j["diffusion_eps"] = t.diffusion_eps;
    j["weighted_residual"] = t.weighted_residual;
    j["hull"] = t.hull_mode == HullMode::Global ? "global" : "velocity-correlated";
    j["continuity_planes"] = t.continuity_planes;
    j["velocity_net"] = t.use_velocity_net;
    j["fourier"] = {{"enabled", t.fourier.enabled}, {"features", t.fourier.features},
                    {"scale", t.fourier.scale}};
    j["resample_every"] = t.resample_every;
    return j;
}

TrainingConfig training_from_json(const json& j, std::vector<std::string>& errs) {
    check_keys(j,
               {"depth", "width", "n_samples", "multipliers", "optimizer", "x_range", "t_range",
                "theta_ranges", "diffusion_eps", "weighted_residual", "hull", "continuity_planes",
                "velocity_net", "fourier", "resample_every"},
               "training", errs);
    TrainingConfig t;
    t.depth = j.value("depth", 8);
    t.width = j.value("width", 20);
    t.n_samples = j.value("n_samples", 5000);
    if (j.contains("multipliers")) {
        check_keys(j["multipliers"], {"ic", "bc", "residual", "planes"}, "training.multipliers",
                   errs);
        t.w_ic = j["multipliers"].value("ic", 1.0);
        t.w_bc = j["multipliers"].value("bc", 1.0);
        t.w_residual = j["multipliers"].value("residual", 1.0);
        t.w_planes = j["multipliers"].value("planes", 1.0);
    }
    if (j.contains("optimizer")) {
        check_keys(j["optimizer"], {"step", "iterations", "seed"}, "training.optimizer", errs);
        t.optimizer.step = j["optimizer"].value("step", 1e-3);
        t.optimizer.iterations = j["optimizer"].value("iterations", 20000);
        t.optimizer.seed = j["optimizer"].value("seed", std::uint64_t{0});
    }
    auto range_of = [&errs](const json& r, const std::string& path) -> Range {
        if (!r.is_array() || r.size() != 2) {
            errs.push_back(path + ": expected [lo, hi]");
            return {0.0, 1.0};
        }
        return {r[0].get<double>(), r[1].get<double>()};
    };
    if (j.contains("x_range")) t.x_range = range_of(j["x_range"], "training.x_range");
    if (j.contains("t_range")) t.t_range = range_of(j["t_range"], "training.t_range");
    if (j.contains("theta_ranges")) {
        t.theta_ranges.clear();
        int i = 0;
        for (const auto& r : j["theta_ranges"])
            t.theta_ranges.push_back(
                range_of(r, "training.theta_ranges[" + std::to_string(i++) + "]"));
    }
    t.diffusion_eps = j.value("diffusion_eps", 0.0);
    t.weighted_residual = j.value("weighted_residual", false);
    const std::string hull = j.value("hull", "global");
    if (hull == "global")
        t.hull_mode = HullMode::Global;
    else if (hull == "velocity-correlated")
        t.hull_mode = HullMode::VelocityCorrelated;
    else
        errs.push_back("training.hull: unknown mode '" + hull + "'");
    t.continuity_planes = j.value("continuity_planes", 0);
    t.use_velocity_net = j.value("velocity_net", false);
    if (j.contains("fourier")) {
        check_keys(j["fourier"], {"enabled", "features", "scale"}, "training.fourier", errs);
        t.fourier.enabled = j["fourier"].value("enabled", false);
        t.fourier.features = j["fourier"].value("features", 64);
        t.fourier.scale = j["fourier"].value("scale", 5.0);
    }
    t.resample_every = j.value("resample_every", 0);
    return t;
}

} // namespace

std::string serialize_config(const ScenarioConfig& cfg) {
    json j;
    j["id"] = cfg.id;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["fluid"] = {{"s_wc", cfg.fluid.s_wc}, {"s_nr", cfg.fluid.s_nr}, {"m", cfg.fluid.m},
                  {"s_inj", cfg.fluid.s_inj}, {"s_init", cfg.fluid.s_init}};

    json vel;
    switch (cfg.mode) {
        case SamplingMode::Parametric: vel["mode"] = "parametric"; break;
        case SamplingMode::GriddedIid: vel["mode"] = "gridded-iid"; break;
        case SamplingMode::ExpCov: vel["mode"] = "expcov"; break;
        case SamplingMode::Deterministic: vel["mode"] = "deterministic"; break;
    }
    vel["parameterization"] = {{"kind", param_kind_name(cfg.param.kind)},
                               {"b", cfg.param.b},
                               {"k", cfg.param.k},
                               {"amplitude", cfg.param.amplitude},
                               {"modes", cfg.param.modes}};
    json thetas = json::array();
    for (const auto& d : cfg.theta_dists) thetas.push_back(dist_to_json(d));
    vel["theta"] = std::move(thetas);
    vel["expcov"] = {{"sigma_y2", cfg.expcov_sigma_y2}, {"s", cfg.expcov_s},
                     {"v_bar", cfg.expcov_vbar}};
    vel["field"] = field_to_json(cfg.deterministic_field);
    j["velocity"] = std::move(vel);

    j["reference"] = cfg.reference == ReferenceModel::Moc ? "moc" : "fvm";
    j["grid"] = {{"n_cells", cfg.grid.n_cells}, {"x_max", cfg.grid.x_max}};
    const char* dt_kind = cfg.dt_rule.kind == TimeStepSpec::Kind::FixedRatio ? "fixed-ratio"
                          : cfg.dt_rule.kind == TimeStepSpec::Kind::CflFraction ? "cfl-fraction"
                                                                                : "explicit";
    j["dt"] = {{"kind", dt_kind}, {"value", cfg.dt_rule.value}};
    j["ensemble"] = {{"n", cfg.ensemble.n}, {"qoi_delta", cfg.ensemble.qoi_delta},
                     {"profile_csv_max", cfg.ensemble.profile_csv_max}};
    j["anchors"] = {{"times", cfg.anchors.times},
                    {"locations", cfg.anchors.locations},
                    {"profile_points", cfg.anchors.profile_points},
                    {"profile_x_max", cfg.anchors.profile_x_max},
                    {"series_points", cfg.anchors.series_points},
                    {"t_series_max", cfg.anchors.t_series_max}};
    if (cfg.training) j["training"] = training_to_json(*cfg.training);
    if (!cfg.surrogate_checkpoint.empty()) j["surrogate_checkpoint"] = cfg.surrogate_checkpoint;
    if (cfg.moments) {
        const MomentsPhase& mp = *cfg.moments;
        j["moments"] = {
            {"v_bar", mp.config.v_bar},
            {"sigma_y2", mp.config.sigma_y2},
            {"s", mp.config.s},
            {"grid", {{"n_cells", mp.config.grid.n_cells}, {"x_max", mp.config.grid.x_max}}},
            {"t_end", mp.config.t_end},
            {"snapshots", mp.config.snapshots},
            {"mc_realizations", mp.mc_realizations},
            {"training",
             {{"depth", mp.training.depth},
              {"width", mp.training.width},
              {"n_samples", mp.training.n_samples},
              {"optimizer",
               {{"step", mp.training.optimizer.step},
                {"iterations", mp.training.optimizer.iterations},
                {"seed", mp.training.optimizer.seed}}},
              {"fourier",
               {{"enabled", mp.training.fourier.enabled},
                {"features", mp.training.fourier.features},
                {"scale", mp.training.fourier.scale}}}}}};
    }
    j["max_field_resample"] = cfg.max_field_resample;
    return j.dump(1);
}

ScenarioConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("parse_config: malformed JSON: ") + e.what());
    }
    std::vector<std::string> errs;
    ScenarioConfig cfg;
    cfg.theta_dists.clear();

    check_keys(j,
               {"id", "seed", "out_dir", "fluid", "velocity", "reference", "grid", "dt",
                "ensemble", "anchors", "training", "surrogate_checkpoint", "moments",
                "max_field_resample"},
               "config", errs);

    cfg.id = j.value("id", "custom");
    if (j.contains("seed")) {
        cfg.seed = j["seed"].get<std::uint64_t>();
        cfg.seed_set = true;
    }
    cfg.out_dir = j.value("out_dir", "out");
    if (j.contains("fluid")) {
        const json& f = j["fluid"];
        check_keys(f, {"s_wc", "s_nr", "m", "s_inj", "s_init"}, "fluid", errs);
        cfg.fluid.s_wc = f.value("s_wc", 0.0);
        cfg.fluid.s_nr = f.value("s_nr", 0.0);
        cfg.fluid.m = f.value("m", 1.0);
        cfg.fluid.s_inj = f.value("s_inj", 1.0);
        cfg.fluid.s_init = f.value("s_init", 0.0);
    }
    if (j.contains("velocity")) {
        const json& v = j["velocity"];
        check_keys(v, {"mode", "parameterization", "theta", "expcov", "field"}, "velocity", errs);
        const std::string mode = v.value("mode", "parametric");
        if (mode == "parametric")
            cfg.mode = SamplingMode::Parametric;
        else if (mode == "gridded-iid")
            cfg.mode = SamplingMode::GriddedIid;
        else if (mode == "expcov")
            cfg.mode = SamplingMode::ExpCov;
        else if (mode == "deterministic")
            cfg.mode = SamplingMode::Deterministic;
        else
            errs.push_back("velocity.mode: unknown mode '" + mode + "'");
        if (v.contains("parameterization")) {
            const json& p = v["parameterization"];
            check_keys(p, {"kind", "b", "k", "amplitude", "modes"}, "velocity.parameterization",
                       errs);
            const std::string kind = p.value("kind", "pointwise");
            if (kind == "pointwise")
                cfg.param.kind = VelocityParameterization::Kind::PointwiseVelocity;
            else if (kind == "affine")
                cfg.param.kind = VelocityParameterization::Kind::Affine;
            else if (kind == "periodic")
                cfg.param.kind = VelocityParameterization::Kind::Periodic;
            else if (kind == "fourier")
                cfg.param.kind = VelocityParameterization::Kind::FourierModes;
            else
                errs.push_back("velocity.parameterization.kind: unknown kind '" + kind + "'");
            cfg.param.b = p.value("b", 0.0);
            cfg.param.k = p.value("k", 1.0);
            cfg.param.amplitude = p.value("amplitude", 1.0);
            cfg.param.modes = p.value("modes", 1);
        }
        if (v.contains("theta")) {
            int i = 0;
            for (const auto& d : v["theta"])
                cfg.theta_dists.push_back(
                    dist_from_json(d, "velocity.theta[" + std::to_string(i++) + "]", errs));
        }
        if (v.contains("expcov")) {
            const json& e = v["expcov"];
            check_keys(e, {"sigma_y2", "s", "v_bar"}, "velocity.expcov", errs);
            cfg.expcov_sigma_y2 = e.value("sigma_y2", 0.1);
            cfg.expcov_s = e.value("s", 2.0);
            cfg.expcov_vbar = e.value("v_bar", 1.0);
        }
        if (v.contains("field"))
            cfg.deterministic_field = field_from_json(v["field"], "velocity.field", errs);
    }
    const std::string ref = j.value("reference", "moc");
    if (ref == "moc")
        cfg.reference = ReferenceModel::Moc;
    else if (ref == "fvm")
        cfg.reference = ReferenceModel::Fvm;
    else
        errs.push_back("reference: unknown model '" + ref + "'");
    if (j.contains("grid")) {
        check_keys(j["grid"], {"n_cells", "x_max"}, "grid", errs);
        cfg.grid.n_cells = j["grid"].value("n_cells", 256);
        cfg.grid.x_max = j["grid"].value("x_max", 1.0);
    }
    if (j.contains("dt")) {
        check_keys(j["dt"], {"kind", "value"}, "dt", errs);
        const std::string kind = j["dt"].value("kind", "fixed-ratio");
        if (kind == "fixed-ratio")
            cfg.dt_rule.kind = TimeStepSpec::Kind::FixedRatio;
        else if (kind == "cfl-fraction")
            cfg.dt_rule.kind = TimeStepSpec::Kind::CflFraction;
        else if (kind == "explicit")
            cfg.dt_rule.kind = TimeStepSpec::Kind::Explicit;
        else
            errs.push_back("dt.kind: unknown kind '" + kind + "'");
        cfg.dt_rule.value = j["dt"].value("value", 15.0);
    }
    if (j.contains("ensemble")) {
        check_keys(j["ensemble"], {"n", "qoi_delta", "profile_csv_max"}, "ensemble", errs);
        cfg.ensemble.n = j["ensemble"].value("n", 1000);
        cfg.ensemble.qoi_delta = j["ensemble"].value("qoi_delta", 0.01);
        cfg.ensemble.profile_csv_max = j["ensemble"].value("profile_csv_max", 20);
    }
    if (j.contains("anchors")) {
        const json& a = j["anchors"];
        check_keys(a,
                   {"times", "locations", "profile_points", "profile_x_max", "series_points",
                    "t_series_max"},
                   "anchors", errs);
        cfg.anchors.times = a.value("times", cfg.anchors.times);
        cfg.anchors.locations = a.value("locations", cfg.anchors.locations);
        cfg.anchors.profile_points = a.value("profile_points", 257);
        cfg.anchors.profile_x_max = a.value("profile_x_max", 1.0);
        cfg.anchors.series_points = a.value("series_points", 201);
        cfg.anchors.t_series_max = a.value("t_series_max", 2.0);
    }
    if (j.contains("training")) cfg.training = training_from_json(j["training"], errs);
    cfg.surrogate_checkpoint = j.value("surrogate_checkpoint", "");
    if (j.contains("moments")) {
        const json& m = j["moments"];
        check_keys(m,
                   {"v_bar", "sigma_y2", "s", "grid", "t_end", "snapshots", "mc_realizations",
                    "training"},
                   "moments", errs);
        MomentsPhase mp;
        mp.config.v_bar = m.value("v_bar", 1.0);
        mp.config.sigma_y2 = m.value("sigma_y2", 0.1);
        mp.config.s = m.value("s", 2.0);
        if (m.contains("grid")) {
            check_keys(m["grid"], {"n_cells", "x_max"}, "moments.grid", errs);
            mp.config.grid.n_cells = m["grid"].value("n_cells", 256);
            mp.config.grid.x_max = m["grid"].value("x_max", 1.0);
        }
        mp.config.t_end = m.value("t_end", 0.5);
        mp.config.snapshots = m.value("snapshots", mp.config.snapshots);
        mp.mc_realizations = m.value("mc_realizations", 500);
        if (m.contains("training")) {
            const json& t = m["training"];
            check_keys(t, {"depth", "width", "n_samples", "optimizer", "fourier"},
                       "moments.training", errs);
            mp.training.depth = t.value("depth", 6);
            mp.training.width = t.value("width", 20);
            mp.training.n_samples = t.value("n_samples", 3000);
            if (t.contains("optimizer")) {
                check_keys(t["optimizer"], {"step", "iterations", "seed"},
                           "moments.training.optimizer", errs);
                mp.training.optimizer.step = t["optimizer"].value("step", 1e-3);
                mp.training.optimizer.iterations = t["optimizer"].value("iterations", 15000);
                mp.training.optimizer.seed = t["optimizer"].value("seed", std::uint64_t{0});
            }
            if (t.contains("fourier")) {
                check_keys(t["fourier"], {"enabled", "features", "scale"},
                           "moments.training.fourier", errs);
                mp.training.fourier.enabled = t["fourier"].value("enabled", false);
                mp.training.fourier.features = t["fourier"].value("features", 64);
                mp.training.fourier.scale = t["fourier"].value("scale", 5.0);
            }
        }
        cfg.moments = std::move(mp);
    }
    cfg.max_field_resample = j.value("max_field_resample", 1000000L);

    if (!errs.empty()) {
        std::string joined = "parse_config:";
        for (const auto& e : errs) joined += "\n  - " + e;
        throw ValidationError(joined);
    }
    cfg.validate();
    return cfg;
}

std::string config_hash(const ScenarioConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- presets -------------------------------------------------------------------

namespace {

TrainingConfig desk_training(std::vector<Range> theta_ranges, int iterations = 20000) {
    TrainingConfig t;
    t.depth = 8;
    t.width = 20;
    t.n_samples = 5000;
    t.optimizer.step = 1e-3;
    t.optimizer.iterations = iterations;
    t.optimizer.seed = 7;
    t.theta_ranges = std::move(theta_ranges);
    return t;
}

ScenarioConfig base_scenario(const std::string& id) {
    ScenarioConfig cfg;
    cfg.id = id;
    cfg.seed = 20240901;
    cfg.seed_set = true;
    cfg.out_dir = "out/" + id;
    return cfg;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"homogeneous-narrow", "homogeneous-wide", "residual-sats", "bimodal",
            "het-gridded-narrow", "het-gridded-wide", "affine", "periodic-k1", "periodic-k5",
            "periodic-k25", "periodic-k25-fourier", "fourier5", "fourier5-wide", "tanh-stairs",
            "highfreq-cosine", "expcov-s2", "expcov-s15"};
}

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig cfg = base_scenario(name);
    const TruncatedNormal narrow{1.0, 0.3, 0.5, 2.0};
    const TruncatedNormal wide{4.0, 2.0, 0.1, 10.0};
    // untruncated in principle; bounds at +-10 sigma keep the sampler total
    const TruncatedNormal slope_prior{1.0, 0.3, -2.0, 4.0};

    if (name == "homogeneous-narrow") {
        cfg.theta_dists = {narrow};
        cfg.training = desk_training({{0.0, 10.0}});
    } else if (name == "homogeneous-wide") {
        cfg.theta_dists = {wide};
        cfg.anchors.times = {0.025, 0.05, 0.075, 0.1, 0.125};
        cfg.anchors.t_series_max = 8.0;
        cfg.training = desk_training({{0.0, 10.0}});
    } else if (name == "residual-sats") {
        cfg.fluid = FluidParams{0.1, 0.05, 2.0, 1.0, 0.15};
        cfg.theta_dists = {narrow};
        cfg.training = desk_training({{0.0, 10.0}});
    } else if (name == "bimodal") {
        BimodalMixture mix;
        mix.weights = {0.5, 0.5};
        mix.components = {TruncatedNormal{0.75, 0.1, 0.5, 2.0}, TruncatedNormal{1.5, 0.2, 0.5, 2.0}};
        cfg.theta_dists = {mix};
        // reuses the model trained on homogeneous-narrow; no training section
    } else if (name == "het-gridded-narrow") {
        cfg.mode = SamplingMode::GriddedIid;
        cfg.theta_dists = {TruncatedNormal{1.0, 0.2, 0.5, 2.0}};
        cfg.reference = ReferenceModel::Fvm;
        cfg.training = desk_training({{0.0, 10.0}});
    } else if (name == "het-gridded-wide") {
        cfg.mode = SamplingMode::GriddedIid;
        cfg.theta_dists = {TruncatedNormal{4.0, 1.0, 0.1, 10.0}};
        cfg.reference = ReferenceModel::Fvm;
        cfg.anchors.times = {0.025, 0.05, 0.075, 0.1, 0.125};
        cfg.anchors.t_series_max = 8.0;
        cfg.training = desk_training({{0.0, 10.0}});
    } else if (name == "affine") {
        cfg.param.kind = VelocityParameterization::Kind::Affine;
        cfg.param.b = 0.5;
        cfg.theta_dists = {slope_prior};
        cfg.reference = ReferenceModel::Fvm;
        cfg.training = desk_training({{0.0, 2.0}});
    } else if (name == "periodic-k1" || name == "periodic-k5" || name == "periodic-k25" ||
               name == "periodic-k25-fourier") {
        cfg.param.kind = VelocityParameterization::Kind::Periodic;
        cfg.param.b = 0.5;
        cfg.param.k = name == "periodic-k1" ? 1.0 : (name == "periodic-k5" ? 5.0 : 25.0);
        cfg.theta_dists = {slope_prior};
        cfg.reference = ReferenceModel::Fvm;
        // positivity restricts the accepted slopes hard for k >= 5
        const Range slope_range = cfg.param.k > 1.5 ? Range{-0.5, 0.5} : Range{0.0, 2.0};
        cfg.training = desk_training({slope_range});
        if (name == "periodic-k25-fourier") {
            cfg.training->fourier.enabled = true;
            cfg.training->fourier.features = 64;
            cfg.training->fourier.scale = 5.0;
        }
    } else if (name == "fourier5" || name == "fourier5-wide") {
        cfg.param.kind = VelocityParameterization::Kind::FourierModes;
        cfg.param.modes = 5;
        const bool wide_modes = name == "fourier5-wide";
        cfg.param.amplitude = 1.0;
        cfg.param.b = wide_modes ? 2.0 : 1.0;
        const UniformDist mode_dist{0.0, wide_modes ? 3.0 : 1.0};
        cfg.theta_dists.assign(5, mode_dist);
        cfg.reference = ReferenceModel::Fvm;
        cfg.training = desk_training(
            std::vector<Range>(5, Range{0.0, wide_modes ? 3.0 : 1.0}));
        cfg.training->fourier.enabled = true;
        cfg.training->fourier.features = 64;
        cfg.training->fourier.scale = 5.0;
    } else if (name == "tanh-stairs" || name == "highfreq-cosine") {
        cfg.mode = SamplingMode::Deterministic;
        if (name == "tanh-stairs")
            cfg.deterministic_field = TanhStairsField{};
        else
            cfg.deterministic_field = HighFreqCosineField{};
        cfg.reference = ReferenceModel::Fvm;
        cfg.ensemble.n = 1;
        cfg.theta_dists.clear();
        cfg.theta_dists.push_back(UniformDist{0.0, 1.0}); // unused in deterministic mode
    } else if (name == "expcov-s2" || name == "expcov-s15") {
        cfg.mode = SamplingMode::ExpCov;
        cfg.expcov_sigma_y2 = 0.1;
        cfg.expcov_s = name == "expcov-s2" ? 2.0 : 1.5;
        cfg.expcov_vbar = 1.0;
        cfg.reference = ReferenceModel::Fvm;
        cfg.ensemble.n = 500;
        MomentsPhase mp;
        mp.config.v_bar = cfg.expcov_vbar;
        mp.config.sigma_y2 = cfg.expcov_sigma_y2;
        mp.config.s = cfg.expcov_s;
        mp.mc_realizations = 500;
        mp.training.optimizer.iterations = 15000;
        mp.training.optimizer.seed = 7;
        cfg.moments = std::move(mp);
    } else {
        throw ValidationError("preset: unknown preset '" + name + "'");
    }
    cfg.validate();
    return cfg;
}

// ---- sampler and grids -----------------------------------------------------------

FieldSampler make_sampler(const ScenarioConfig& cfg) {
    cfg.validate();
    const Grid1D grid = cfg.grid;
    const double x_max = cfg.grid.x_max;
    const long cap = cfg.max_field_resample;

    auto cells_of = [grid](const VelocityFieldSpec& field) {
        std::vector<double> cells(grid.n_cells);
        for (int i = 0; i < grid.n_cells; ++i) cells[i] = eval_field(field, grid.center(i));
        return cells;
    };

    switch (cfg.mode) {
        case SamplingMode::Parametric: {
            const VelocityParameterization param = cfg.param;
            const auto dists = cfg.theta_dists;
            return [param, dists, cells_of, x_max, cap](Rng& rng) {
                std::vector<double> theta(dists.size());
                for (long attempt = 0; attempt < cap; ++attempt) {
                    for (std::size_t i = 0; i < dists.size(); ++i)
                        theta[i] = sample_scalar(dists[i], rng);
                    VelocityFieldSpec field = param.realize(theta);
                    if (!field_positive(field, x_max)) continue;
                    FieldSample sample;
                    sample.field = std::move(field);
                    sample.cell_values = cells_of(sample.field);
                    sample.params = theta;
                    return sample;
                }
                throw NumericalError("make_sampler: positivity resample cap reached");
            };
        }
        case SamplingMode::GriddedIid: {
            const auto dist = cfg.theta_dists.at(0);
            return [dist, grid, x_max, cap](Rng& rng) {
                for (long attempt = 0; attempt < cap; ++attempt) {
                    GriddedField g;
                    g.x_max = x_max;
                    g.values.resize(grid.n_cells);
                    for (double& v : g.values) v = sample_scalar(dist, rng);
                    VelocityFieldSpec field = std::move(g);
                    if (!field_positive(field, x_max)) continue;
                    FieldSample sample;
                    sample.cell_values = std::get<GriddedField>(field).values;
                    sample.field = std::move(field);
                    sample.params = {};
                    return sample;
                }
                throw NumericalError("make_sampler: positivity resample cap reached");
            };
        }
        case SamplingMode::ExpCov: {
            const double s2 = cfg.expcov_sigma_y2, s = cfg.expcov_s, vb = cfg.expcov_vbar;
            return [s2, s, vb, grid](Rng& rng) {
                return sample_expcov_field(s2, s, vb, grid, rng);
            };
        }
        case SamplingMode::Deterministic: {
            const VelocityFieldSpec field = cfg.deterministic_field;
            auto cells = cells_of(field);
            return [field, cells](Rng&) {
                FieldSample sample;
                sample.field = field;
                sample.cell_values = cells;
                sample.params = {};
                return sample;
            };
        }
    }
    throw ValidationError("make_sampler: bad sampling mode");
}

EvalGrids make_eval_grids(const ScenarioConfig& cfg) {
    EvalGrids g;
    g.t_anchors = cfg.anchors.times;
    g.x_anchors = cfg.anchors.locations;
    g.x_profile.resize(cfg.anchors.profile_points);
    for (int i = 0; i < cfg.anchors.profile_points; ++i)
        g.x_profile[i] =
            cfg.anchors.profile_x_max * i / static_cast<double>(cfg.anchors.profile_points - 1);
    g.t_series.resize(cfg.anchors.series_points);
    for (int i = 0; i < cfg.anchors.series_points; ++i)
        g.t_series[i] =
            cfg.anchors.t_series_max * i / static_cast<double>(cfg.anchors.series_points - 1);
    return g;
}

} // namespace bluq
