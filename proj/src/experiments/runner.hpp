#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "npeflow/experiments.hpp"
#include "npeflow/io.hpp"
#include "npeflow/rng.hpp"

// Shared bookkeeping for experiment drivers: output directory, manifest
// lifecycle (written before compute, finalized after), replicate seeds, and
// the metrics table.

namespace npeflow::experiments::detail {

class ExperimentRun {
 public:
  // Validates nothing itself — call after the driver has fully validated its
  // config. Creates the output directory, writes manifest.json with status
  // "running", and opens metrics.csv.
  ExperimentRun(const std::string& name, const RunOptions& opts,
                std::uint64_t master_seed, int replicates);

  const std::filesystem::path& dir() const { return dir_; }
  std::uint64_t master_seed() const { return master_seed_; }
  int replicates() const { return replicates_; }
  std::uint64_t rep_seed(int r) const { return rep_seeds_.at(r); }

  io::MetricsWriter& metrics() { return *metrics_; }

  // Registers an emitted file (path relative to the output directory).
  void add_file(const std::string& relpath);

  // Writes README.md into the output directory.
  void write_readme(const std::string& text);

  // Finalizes the manifest (status, finish time, sorted file list).
  void finish();

 private:
  std::string name_;
  std::filesystem::path dir_;
  std::uint64_t master_seed_ = 0;
  int replicates_ = 0;
  std::vector<std::uint64_t> rep_seeds_;
  std::vector<std::string> files_;
  nlohmann::json manifest_;
  std::unique_ptr<io::MetricsWriter> metrics_;
};

}  // namespace npeflow::experiments::detail
