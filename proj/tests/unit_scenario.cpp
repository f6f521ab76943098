#include <cmath>

#include "bluq/errors.hpp"
#include "bluq/scenario.hpp"
#include "doctest.h"

using namespace bluq;

TEST_CASE("presets are all constructible and listed") {
    for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name));
    CHECK_THROWS_AS(preset("no-such-preset"), ValidationError);
}

TEST_CASE("homogeneous narrow preset carries the published configuration") {
    const ScenarioConfig cfg = preset("homogeneous-narrow");
    CHECK(cfg.fluid.s_wc == 0.0);
    CHECK(cfg.fluid.s_nr == 0.0);
    CHECK(cfg.ensemble.n == 1000);
    REQUIRE(cfg.theta_dists.size() == 1);
    const auto* tn = std::get_if<TruncatedNormal>(&cfg.theta_dists[0]);
    REQUIRE(tn != nullptr);
    CHECK(tn->mu == 1.0);
    CHECK(tn->sigma == 0.3);
    CHECK(tn->low == 0.5);
    CHECK(tn->up == 2.0);
    REQUIRE(cfg.training.has_value());
    CHECK(cfg.training->n_samples == 5000);
    CHECK(cfg.training->theta_ranges[0].lo == 0.0);
    CHECK(cfg.training->theta_ranges[0].hi == 10.0);
}

TEST_CASE("residual saturation preset pins the published fluid parameters") {
    const ScenarioConfig cfg = preset("residual-sats");
    CHECK(cfg.fluid.s_init == 0.15);
    CHECK(cfg.fluid.s_wc == 0.1);
    CHECK(cfg.fluid.s_nr == 0.05);
    CHECK(cfg.fluid.m == 2.0);
    CHECK(cfg.fluid.s_inj == 1.0);
}

TEST_CASE("config serialization round-trips") {
    for (const std::string name : {"homogeneous-narrow", "fourier5", "expcov-s2", "bimodal"}) {
        const ScenarioConfig cfg = preset(name);
        const std::string text = serialize_config(cfg);
        const ScenarioConfig back = parse_config(text);
        CHECK(serialize_config(back) == text);
        CHECK(config_hash(back) == config_hash(cfg));
    }
}

TEST_CASE("config hash is stable and sensitive") {
    ScenarioConfig a = preset("homogeneous-narrow");
    ScenarioConfig b = a;
    CHECK(config_hash(a) == config_hash(b));
    b.ensemble.n = 999;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("unknown keys are rejected in strict mode") {
    ScenarioConfig cfg = preset("homogeneous-narrow");
    std::string text = serialize_config(cfg);
    text.insert(text.find_first_of('{') + 1, "\n \"mystery_key\": 1,");
    try {
        parse_config(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("mystery_key") != std::string::npos);
    }
}

TEST_CASE("a bounds violation names the field and all errors are collected") {
    const std::string text = R"({
  "id": "bad",
  "seed": 1,
  "velocity": {
    "mode": "parametric",
    "theta": [{"type": "truncated-normal", "mu": 1.0, "sigma": 0.3, "low": 2.0, "up": 0.5}]
  },
  "fluid": {"m": -1.0},
  "ensemble": {"n": 0}
})";
    try {
        parse_config(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("velocity.theta[0]") != std::string::npos);
        CHECK(msg.find("low must be < up") != std::string::npos);
        CHECK(msg.find("m must be > 0") != std::string::npos);
        CHECK(msg.find("ensemble.n") != std::string::npos);
    }
}

TEST_CASE("a missing seed is refused") {
    const std::string text = R"({"id": "x", "velocity": {"mode": "parametric",
      "theta": [{"type": "uniform", "low": 0.5, "up": 2.0}]}})";
    try {
        parse_config(text);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("seed") != std::string::npos);
    }
}

TEST_CASE("samplers enforce positivity by resampling") {
    SUBCASE("high-frequency periodic slopes are truncated by rejection") {
        ScenarioConfig cfg = preset("periodic-k25");
        cfg.max_field_resample = 100000;
        const FieldSampler sampler = make_sampler(cfg);
        Rng rng(9);
        for (int i = 0; i < 5; ++i) {
            const FieldSample s = sampler(rng);
            CHECK(field_positive(s.field, cfg.grid.x_max));
            REQUIRE(s.params.size() == 1);
            CHECK(std::abs(s.params[0]) < 0.51); // positivity forces a small slope
        }
    }
    SUBCASE("five-mode fields come out positive") {
        ScenarioConfig cfg = preset("fourier5");
        const FieldSampler sampler = make_sampler(cfg);
        Rng rng(10);
        const FieldSample s = sampler(rng);
        CHECK(field_positive(s.field, cfg.grid.x_max));
        CHECK(s.params.size() == 5);
        for (double v : s.cell_values) CHECK(v > 0.0);
    }
    SUBCASE("an impossible field spec hits the resample cap") {
        ScenarioConfig cfg = preset("periodic-k25");
        cfg.theta_dists = {TruncatedNormal{5.0, 0.01, 4.9, 5.1}}; // always dips negative
        cfg.max_field_resample = 2000;
        const FieldSampler sampler = make_sampler(cfg);
        Rng rng(11);
        CHECK_THROWS_AS(sampler(rng), NumericalError);
    }
}

TEST_CASE("gridded sampler draws one value per cell") {
    ScenarioConfig cfg = preset("het-gridded-narrow");
    const FieldSampler sampler = make_sampler(cfg);
    Rng rng(13);
    const FieldSample s = sampler(rng);
    REQUIRE(static_cast<int>(s.cell_values.size()) == cfg.grid.n_cells);
    double lo = 1e9, hi = -1e9;
    for (double v : s.cell_values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        CHECK(v >= 0.5);
        CHECK(v <= 2.0);
    }
    CHECK(hi - lo > 0.1); // genuinely heterogeneous
}

TEST_CASE("eval grids cover the configured windows") {
    const ScenarioConfig cfg = preset("homogeneous-narrow");
    const EvalGrids g = make_eval_grids(cfg);
    CHECK(g.x_profile.front() == 0.0);
    CHECK(g.x_profile.back() == doctest::Approx(cfg.anchors.profile_x_max));
    CHECK(g.t_series.front() == 0.0);
    CHECK(g.t_series.back() == doctest::Approx(cfg.anchors.t_series_max));
    CHECK(g.t_anchors == cfg.anchors.times);
    CHECK(g.x_anchors == cfg.anchors.locations);
}
