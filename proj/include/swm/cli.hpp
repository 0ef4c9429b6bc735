#pragma once

#include <string>

#include "swm/config.hpp"

namespace swm {

// Per-invocation overrides of the config file, set by command-line flags.
struct CliOptions {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    bool refine = false;
};

// Subcommand bodies.  Each reads the scenario, writes its files under the
// output directory, and throws on failure (ConfigError and friends for bad
// input, ConvergenceError/StabilityError/ConditioningError for numerical
// trouble).  File writes are atomic: temp file then rename.
void run_design(const ScenarioConfig& cfg);
void run_sweep(const ScenarioConfig& cfg, bool refine);
void run_simulate(const ScenarioConfig& cfg);
void run_roc(const ScenarioConfig& cfg);
void run_table(const ScenarioConfig& cfg, int mc_trials);

// Full command-line entry point (argument parsing, dispatch, error
// mapping).  Returns the process exit code: 0 success, 1 validation error,
// 2 numerical failure.  The last stderr line is a single machine-parseable
// status record either way.
int cli_main(int argc, const char* const* argv);

}  // namespace swm
