#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sgldr/config.hpp"
#include "sgldr/diagnostics.hpp"
#include "sgldr/sampler.hpp"
#include "sgldr/targets.hpp"

namespace sgldr {

// moe is built in log space: the sampler sees y = log z.
std::shared_ptr<const TargetDistribution> make_target(const TargetSpec& spec);

nlohmann::json target_spec_json(const TargetSpec& spec);
TargetSpec target_spec_from_json(const nlohmann::json& doc);

// Analytic E[X] in the original space, and the map from sampling space to that space.
struct GroundTruth {
  std::optional<Eigen::VectorXd> mean;
  SampleTransform transform;            // empty means identity
  std::vector<Eigen::VectorXd> centers;  // mixture modes, when the target has them
};

GroundTruth ground_truth(const TargetSpec& spec);

struct DiagnosticsResult {
  std::optional<EssReport> ess;
  std::optional<MomentErrorReport> moment;
  std::optional<std::size_t> coverage;
  double coverage_radius = 0.0;

  nlohmann::json to_json() const;
};

DiagnosticsResult compute_diagnostics(const TraceStore& trace, const TargetSpec& target,
                                      const DiagnosticsSpec& spec);

struct ExperimentResult {
  TraceStore trace;
  DiagnosticsResult diagnostics;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes trace.csv, trace.json (sidecar), diagnostics.json and config.toml into `dir`.
void write_experiment(const ExperimentConfig& config, const ExperimentResult& result, const std::string& dir);

}  // namespace sgldr
