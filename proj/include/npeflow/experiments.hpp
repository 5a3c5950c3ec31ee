#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "npeflow/config.hpp"

// Experiment drivers behind the CLI. Each driver validates its full config
// up front (unknown keys, bad values), writes a manifest before computing,
// streams results into metrics.csv plus per-run trace files, and finalizes
// the manifest with the emitted file list.

namespace npeflow::experiments {

struct RunOptions {
  config::IniData cfg;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> replicates_override;
};

// Names accepted by run_experiment / the CLI.
const std::vector<std::string>& experiment_names();

// Dispatches by name; returns a process exit code (0 on success). Errors are
// reported as thrown exceptions with actionable messages.
void run_experiment(const std::string& name, const RunOptions& opts);

// Individual drivers (exposed for tests and the acceptance suite).
void run_toy_width_sweep(const RunOptions& opts);
void run_clustering(const RunOptions& opts);
void run_ntk_diagnostics(const RunOptions& opts);
void run_kgf_compare(const RunOptions& opts);
void run_estimator_audit(const RunOptions& opts);

}  // namespace npeflow::experiments
