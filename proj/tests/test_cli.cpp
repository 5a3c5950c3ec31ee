#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "npeflow/experiments.hpp"
#include "npeflow/io.hpp"

using namespace npeflow;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "npeflow_cli_test" / leaf;
  fs::remove_all(dir);
  return dir;
}

experiments::RunOptions audit_options(const fs::path& out) {
  experiments::RunOptions opts;
  opts.cfg = config::parse_ini(
      "[model]\n"
      "grid_size = 256\n"
      "[audit]\n"
      "frozen_m = 200\n"
      "batch = 8\n"
      "estimates = 30\n"
      "width = 4\n"
      "[run]\n"
      "seed = 424242\n");
  opts.out_dir = out;
  return opts;
}

std::string slurp(const fs::path& p) { return io::read_text_file(p); }

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

int count_of(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (size_t at = hay.find(needle); at != std::string::npos;
       at = hay.find(needle, at + 1))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("unknown experiment names are rejected with the valid list") {
  experiments::RunOptions opts;
  try {
    experiments::run_experiment("not-an-experiment", opts);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(contains(msg, "unknown experiment"));
    CHECK(contains(msg, "toy-width-sweep"));
    CHECK(contains(msg, "estimator-audit"));
  }
}

TEST_CASE("config typos fail before anything is written") {
  const fs::path out = fresh_dir("typo");
  experiments::RunOptions opts = audit_options(out);
  opts.cfg.set("audit", "estimatess", "50");
  CHECK_THROWS_AS(experiments::run_experiment("estimator-audit", opts),
                  std::invalid_argument);
  CHECK(!fs::exists(out));
}

TEST_CASE("runs are reproducible from the seed alone") {
  const fs::path out_a = fresh_dir("audit_a");
  const fs::path out_b = fresh_dir("audit_b");
  const fs::path out_c = fresh_dir("audit_c");
  experiments::run_experiment("estimator-audit", audit_options(out_a));
  experiments::run_experiment("estimator-audit", audit_options(out_b));

  const std::string metrics_a = slurp(out_a / "metrics.csv");
  CHECK(metrics_a == slurp(out_b / "metrics.csv"));
  CHECK(contains(metrics_a, "metric,value,step,replicate,seed"));
  CHECK(contains(metrics_a, "grad_fraction_within_4se"));

  experiments::RunOptions other = audit_options(out_c);
  other.seed_override = 777;
  experiments::run_experiment("estimator-audit", other);
  CHECK(slurp(out_c / "metrics.csv") != metrics_a);
  CHECK(contains(slurp(out_c / "manifest.json"), "\"master_seed\": 777"));

  const std::string manifest = slurp(out_a / "manifest.json");
  CHECK(contains(manifest, "\"status\": \"complete\""));
  CHECK(contains(manifest, "\"experiment\": \"estimator-audit\""));
  CHECK(contains(manifest, "config_hash"));
  CHECK(contains(manifest, "metrics.csv"));
  CHECK(contains(manifest, "README.md"));
  CHECK(fs::exists(out_a / "README.md"));

  fs::remove_all(out_a.parent_path());
}

TEST_CASE("toy width sweep driver on a tiny budget") {
  const fs::path out = fresh_dir("toy");
  experiments::RunOptions opts;
  opts.cfg = config::parse_ini(
      "[model]\n"
      "grid_size = 256\n"
      "[train]\n"
      "widths = 8\n"
      "steps = 40\n"
      "batch = 4\n"
      "base_lr = 0.001\n"
      "record_every = 20\n"
      "[eval]\n"
      "heldout_n = 40\n"
      "[run]\n"
      "replicates = 2\n"
      "seed = 99\n");
  opts.out_dir = out;
  opts.replicates_override = 1;  // wins over the config value
  experiments::run_experiment("toy-width-sweep", opts);

  const std::string metrics = slurp(out / "metrics.csv");
  CHECK(contains(metrics, "nll_exact"));
  CHECK(contains(metrics, "nll_full_w8"));
  CHECK(contains(metrics, "nll_lin_w8"));
  CHECK(contains(metrics, "nll_gap_w8"));
  // replicate override: exactly one row per final metric
  CHECK(count_of(metrics, "nll_full_w8") == 1);
  CHECK(fs::exists(out / "trace_full_w8_r0.csv"));
  CHECK(fs::exists(out / "trace_lin_w8_r0.csv"));
  fs::remove_all(out);
}

TEST_CASE("kernel flow driver on a tiny budget") {
  const fs::path out = fresh_dir("kgf");
  experiments::RunOptions opts;
  opts.cfg = config::parse_ini(
      "[model]\n"
      "grid_size = 256\n"
      "[flow]\n"
      "grid_n = 4\n"
      "step = 0.01\n"
      "horizon = 2\n"
      "record_stride = 100\n"
      "distance_time = 1\n"
      "[param]\n"
      "widths = 8\n"
      "seeds = 1\n"
      "[run]\n"
      "seed = 7\n");
  opts.out_dir = out;
  experiments::run_experiment("kgf-compare", opts);

  const std::string metrics = slurp(out / "metrics.csv");
  CHECK(contains(metrics, "fstar_loss"));
  CHECK(contains(metrics, "lim_delta0"));
  CHECK(contains(metrics, "pf_dist_t1_w8"));
  CHECK(fs::exists(out / "limiting_flow.csv"));
  const std::string flow = slurp(out / "limiting_flow.csv");
  CHECK(contains(flow, "time,loss,subopt,envelope"));
  fs::remove_all(out);
}
