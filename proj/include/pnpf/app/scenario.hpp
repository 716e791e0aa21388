#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pnpf/app/config.hpp"

namespace pnpf::app {

enum ExitCode : int { Success = 0, ValidationError = 1, SolverFailure = 2, InvariantViolation = 3 };

struct ScenarioResult {
    int exit_code = Success;
    int steps = 0;
    double initial_H = 0.0;
    double final_H = 0.0;
    int energy_violations = 0;
    int bound_violations = 0;
    double runtime_seconds = 0.0;
    std::string message;
};

/// Runs the configured scenario and writes timeseries.csv,
/// snapshots/snap_<k>.csv and summary.json into out_dir. Solver failures are
/// reported through the result; config errors propagate as ConfigError.
ScenarioResult run_scenario(const RunConfig& config, const std::filesystem::path& out_dir, bool quiet = true);

}  // namespace pnpf::app
