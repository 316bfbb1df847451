#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgldr/sampler.hpp"

namespace sgldr {

// Flat view of a sectioned key-value file:
//
//   # comment
//   [kernel]
//   mode = "rbf-median"
//   [target]
//   rates = [1.5, 0.5]
//
// Keys are stored as "section.key". Values keep their raw text and source line.
class ConfigDocument {
 public:
  struct Entry {
    std::string raw;
    std::size_t line = 0;
  };

  static ConfigDocument parse(const std::string& text);
  static ConfigDocument load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<std::uint64_t> get_uint(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::vector<double>> get_double_list(const std::string& key) const;
  std::optional<std::vector<std::string>> get_string_list(const std::string& key) const;

  std::size_t line_of(const std::string& key) const;
  const std::string& source_text() const { return text_; }

 private:
  std::map<std::string, Entry> entries_;
  std::string text_;
};

struct TargetSpec {
  std::string name = "moe";  // moe | mog3x3 | gauss-std | bnn
  std::vector<double> rates{1.5, 0.5};
  std::vector<double> weights{1.0 / 3.0, 2.0 / 3.0};
  std::size_t dim = 1;  // gauss-std only
  // bnn only
  std::string data_path;
  std::string target_column;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.1;
  std::size_t max_rows = 0;
  std::size_t batch_size = 100;
};

struct DiagnosticsSpec {
  bool ess = true;
  bool moment_error = true;
  bool mode_coverage = true;
  double mode_radius = 0.0;  // 0 selects the 3-sigma default
};

struct ExperimentConfig {
  TargetSpec target;
  SamplerConfig sampler;
  DiagnosticsSpec diagnostics;
  std::string output_dir = "runs/default";
  std::string source_text;  // verbatim config file, stored with every run
};

// Parses and validates. Unknown sections or keys, bad values and inconsistent
// combinations raise ConfigError carrying the offending line.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace sgldr
