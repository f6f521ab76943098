#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bluq/scenario.hpp"

namespace bluq {

inline constexpr const char* kToolVersion = "0.1.0";

struct PhaseTiming {
    std::string name;
    double seconds = 0.0;
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::vector<PhaseTiming> timings;
    std::vector<std::pair<std::string, std::string>> artifacts; ///< (file, digest)
};

/// Executes the configured pipeline: sample fields, reference ensemble,
/// train or load a surrogate, surrogate ensemble, comparison report, and the
/// moments phase when configured. Artifacts land in cfg.out_dir; the
/// manifest (with per-phase wall times and content digests) is written last.
RunManifest run_scenario(const ScenarioConfig& cfg);

struct BenchReport {
    int n = 0;
    double mcs_seconds = 0.0;
    double train_seconds = 0.0;
    double infer_seconds = 0.0;
};

/// Times the Monte Carlo path against train + infer on the same draws.
/// Reports only; asserts nothing about the values.
BenchReport bench(const ScenarioConfig& cfg);

/// FNV-1a 64 content digest of a file, as hex.
std::string file_digest(const std::string& path);

} // namespace bluq
