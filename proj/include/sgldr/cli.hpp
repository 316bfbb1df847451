#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sgldr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Runs one configured experiment and writes its artifacts; `out_dir` overrides output.dir.
int cmd_sample(const std::string& config_path, const std::optional<std::string>& out_dir, std::ostream& out,
               std::ostream& err);

// Runs both configs for every seed and writes compare.csv (method, ess, ess_per_s, err_mean,
// err_std) plus compare_runs.csv with the per-seed values.
int cmd_compare(const std::string& config_a, const std::string& config_b, const std::vector<std::uint64_t>& seeds,
                const std::string& out_dir, std::ostream& out, std::ostream& err);

// Reads trace CSV + sidecar and emits the diagnostics JSON to `output` (stdout when empty).
int cmd_diagnose(const std::string& trace_path, const std::string& output, std::ostream& out, std::ostream& err);

// Running E[X] / E[X^2] per snapshot as csv or json, to `output` (stdout when empty).
int cmd_trace_export(const std::string& trace_path, const std::string& format, const std::string& output,
                     std::ostream& out, std::ostream& err);

struct BnnOptions {
  std::string data;
  std::string target_col;
  std::string method = "sgld_r";
  std::uint64_t seed = 0;
  std::string out = "runs/bnn";
  std::size_t particles = 20;
  std::size_t iterations = 2000;
  std::size_t burn_in = 1000;
  std::size_t thin = 10;
  double step_size = 1e-3;
  bool grid_search = false;
  std::size_t batch_size = 100;
  double test_fraction = 0.1;
  std::size_t max_rows = 0;
  double repulsion_cutoff = 1.0;
};

int cmd_bnn(const BnnOptions& options, std::ostream& out, std::ostream& err);

// Subcommand dispatcher used by the executable.
int main(int argc, char** argv);

}  // namespace sgldr::cli
