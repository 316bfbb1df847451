#include "sgldr/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sgldr/bnn.hpp"
#include "sgldr/errors.hpp"
#include "sgldr/trace_io.hpp"

namespace sgldr {

std::shared_ptr<const TargetDistribution> make_target(const TargetSpec& spec) {
  if (spec.name == "moe") {
    auto base = std::make_shared<MixtureOfExponentials>(spec.rates, spec.weights);
    return std::make_shared<LogReparameterizedTarget>(std::move(base));
  }
  if (spec.name == "mog3x3") return std::make_shared<GaussianGridMixture>(GaussianGridMixture::grid3x3());
  if (spec.name == "gauss-std") return std::make_shared<StandardGaussian>(spec.dim);
  if (spec.name == "bnn") {
    auto data = std::make_shared<const bnn::RegressionDataset>(bnn::load_uci_csv(
        spec.data_path, spec.target_column, spec.split_seed, spec.test_fraction, spec.max_rows));
    return std::make_shared<bnn::BnnTarget>(std::move(data), spec.batch_size);
  }
  throw ConfigError("unknown target '" + spec.name + "'");
}

nlohmann::json target_spec_json(const TargetSpec& spec) {
  nlohmann::json doc;
  doc["name"] = spec.name;
  if (spec.name == "moe") {
    doc["rates"] = spec.rates;
    doc["weights"] = spec.weights;
  } else if (spec.name == "gauss-std") {
    doc["dim"] = spec.dim;
  } else if (spec.name == "bnn") {
    doc["data"] = spec.data_path;
    doc["target_col"] = spec.target_column;
    doc["split_seed"] = spec.split_seed;
    doc["test_fraction"] = spec.test_fraction;
    doc["max_rows"] = spec.max_rows;
    doc["batch_size"] = spec.batch_size;
  }
  return doc;
}

TargetSpec target_spec_from_json(const nlohmann::json& doc) {
  TargetSpec spec;
  spec.name = doc.value("name", std::string("moe"));
  if (doc.contains("rates")) spec.rates = doc["rates"].get<std::vector<double>>();
  if (doc.contains("weights")) spec.weights = doc["weights"].get<std::vector<double>>();
  spec.dim = doc.value("dim", std::size_t{1});
  spec.data_path = doc.value("data", std::string{});
  spec.target_column = doc.value("target_col", std::string{});
  spec.split_seed = doc.value("split_seed", std::uint64_t{0});
  spec.test_fraction = doc.value("test_fraction", 0.1);
  spec.max_rows = doc.value("max_rows", std::size_t{0});
  spec.batch_size = doc.value("batch_size", std::size_t{100});
  return spec;
}

GroundTruth ground_truth(const TargetSpec& spec) {
  GroundTruth truth;
  if (spec.name == "moe") {
    const MixtureOfExponentials base(spec.rates, spec.weights);
    truth.mean = Eigen::VectorXd::Constant(1, analytic_moment(base, 1));
    truth.transform = [](double y) { return std::exp(y); };
  } else if (spec.name == "mog3x3") {
    truth.mean = Eigen::VectorXd::Zero(2);
    const GaussianGridMixture grid = GaussianGridMixture::grid3x3();
    for (const auto& c : grid.centers()) truth.centers.emplace_back(c);
  } else if (spec.name == "gauss-std") {
    truth.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.dim));
  }
  return truth;
}

nlohmann::json DiagnosticsResult::to_json() const {
  nlohmann::json doc;
  if (ess) {
    doc["ess"] = ess->mean_ess;
    doc["ess_min"] = ess->min_ess;
    doc["ess_per_particle"] = ess->per_particle_ess;
    doc["ess_per_second"] = std::isfinite(ess->ess_per_second) ? nlohmann::json(ess->ess_per_second) : nlohmann::json();
    doc["ess_degenerate_particles"] = ess->degenerate_particles;
  } else {
    doc["ess"] = nullptr;
    doc["ess_per_second"] = nullptr;
  }
  if (moment) {
    doc["moment_error"] = moment->error;
    doc["moment_estimate"] = std::vector<double>(moment->estimate.data(), moment->estimate.data() + moment->estimate.size());
    doc["moment_truth"] = std::vector<double>(moment->truth.data(), moment->truth.data() + moment->truth.size());
  } else {
    doc["moment_error"] = nullptr;
  }
  if (coverage) {
    doc["mode_coverage"] = *coverage;
    doc["mode_coverage_radius"] = coverage_radius;
  } else {
    doc["mode_coverage"] = nullptr;
  }
  return doc;
}

DiagnosticsResult compute_diagnostics(const TraceStore& trace, const TargetSpec& target,
                                      const DiagnosticsSpec& spec) {
  DiagnosticsResult out;
  const GroundTruth truth = ground_truth(target);
  if (spec.ess && trace.snapshots.size() >= 10) out.ess = ess_report(trace);
  if (spec.moment_error && truth.mean) out.moment = moment_error(trace, *truth.mean, truth.transform);
  if (spec.mode_coverage && !truth.centers.empty()) {
    out.coverage_radius = spec.mode_radius > 0.0 ? spec.mode_radius : kDefaultModeRadius;
    out.coverage = mode_coverage(trace, truth.centers, out.coverage_radius);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto target = make_target(config.target);
  ExperimentResult result;
  result.trace = run(config.sampler, *target);
  result.diagnostics = compute_diagnostics(result.trace, config.target, config.diagnostics);
  return result;
}

void write_experiment(const ExperimentConfig& config, const ExperimentResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string trace_path = dir + "/trace.csv";
  write_trace_csv(result.trace, trace_path);

  nlohmann::json extra;
  extra["method"] = to_string(config.sampler.method);
  extra["target"] = target_spec_json(config.target);
  extra["sampler"] = config.sampler.canonical();
  extra["init_policy"] = config.target.name == "bnn" ? "bnn-prior" : "standard-normal";
  extra["config_text"] = config.source_text;
  write_json(sidecar_json(result.trace, extra), sidecar_path(trace_path));
  write_json(result.diagnostics.to_json(), dir + "/diagnostics.json");

  std::ofstream cfg(dir + "/config.toml", std::ios::binary);
  cfg << config.source_text;
}

}  // namespace sgldr
