#include "runner.hpp"

#include <algorithm>
#include <stdexcept>

#include "npeflow/version.hpp"

namespace npeflow::experiments {

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "toy-width-sweep", "clustering", "ntk-diagnostics", "kgf-compare",
      "estimator-audit"};
  return names;
}

void run_experiment(const std::string& name, const RunOptions& opts) {
  if (name == "toy-width-sweep") return run_toy_width_sweep(opts);
  if (name == "clustering") return run_clustering(opts);
  if (name == "ntk-diagnostics") return run_ntk_diagnostics(opts);
  if (name == "kgf-compare") return run_kgf_compare(opts);
  if (name == "estimator-audit") return run_estimator_audit(opts);
  std::string known;
  for (const auto& n : experiment_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown experiment \"" + name +
                              "\" (available: " + known + ")");
}

namespace detail {

ExperimentRun::ExperimentRun(const std::string& name, const RunOptions& opts,
                             std::uint64_t master_seed, int replicates)
    : name_(name), dir_(opts.out_dir), master_seed_(master_seed),
      replicates_(replicates) {
  if (dir_.empty())
    throw std::invalid_argument(
        "no output directory (set [run] out in the config or pass --out)");
  std::filesystem::create_directories(dir_);
  for (int r = 0; r < replicates_; ++r)
    rep_seeds_.push_back(derive_seed(master_seed_, static_cast<std::uint64_t>(r),
                                     0x5eedu));
  manifest_["experiment"] = name_;
  manifest_["version"] = kVersionTag;
  manifest_["config_hash"] = io::fnv1a_hex(config::serialize_ini(opts.cfg));
  manifest_["config"] = config::serialize_ini(opts.cfg);
  manifest_["master_seed"] = master_seed_;
  manifest_["replicate_seeds"] = rep_seeds_;
  manifest_["started"] = io::utc_timestamp();
  manifest_["status"] = "running";
  manifest_["files"] = nlohmann::json::array();
  io::write_text_file(dir_ / "manifest.json", manifest_.dump(2) + "\n");
  metrics_ = std::make_unique<io::MetricsWriter>(dir_ / "metrics.csv");
  add_file("metrics.csv");
}

void ExperimentRun::add_file(const std::string& relpath) {
  if (std::find(files_.begin(), files_.end(), relpath) == files_.end())
    files_.push_back(relpath);
}

void ExperimentRun::write_readme(const std::string& text) {
  io::write_text_file(dir_ / "README.md", text);
  add_file("README.md");
}

void ExperimentRun::finish() {
  std::vector<std::string> sorted = files_;
  sorted.push_back("manifest.json");
  std::sort(sorted.begin(), sorted.end());
  manifest_["files"] = sorted;
  manifest_["finished"] = io::utc_timestamp();
  manifest_["status"] = "complete";
  io::write_text_file(dir_ / "manifest.json", manifest_.dump(2) + "\n");
}

}  // namespace detail
}  // namespace npeflow::experiments
