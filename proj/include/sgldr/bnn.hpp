#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgldr/sampler.hpp"
#include "sgldr/targets.hpp"

namespace sgldr::bnn {

inline constexpr std::size_t kHiddenUnits = 50;
// Gamma(shape, rate) prior on the observation-noise precision.
inline constexpr double kPrecisionShape = 1.0;
inline constexpr double kPrecisionRate = 0.1;
inline constexpr std::size_t kDefaultBatchSize = 100;

// One hidden layer regression network, y = w2 . relu(W1 x + b1) + b2, with a
// Gaussian likelihood of precision exp(log_precision).
struct Params {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;
  double log_precision = 0.0;
};

std::size_t parameter_count(std::size_t input_dim, std::size_t hidden = kHiddenUnits);

// Flat layout: W1 (row-major, hidden unit by hidden unit), b1, w2, b2, log_precision.
Eigen::VectorXd pack(const Params& params);
Params unpack(const Eigen::VectorXd& flat, std::size_t input_dim, std::size_t hidden = kHiddenUnits);

double forward(const Params& params, const Eigen::Ref<const Eigen::VectorXd>& x);
double forward(const Eigen::VectorXd& flat, const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t input_dim);

// Standardized regression data with a fixed train/test split. Features and targets are
// stored already normalized with training-split statistics.
struct RegressionDataset {
  Eigen::MatrixXd features;  // N x d_in, normalized
  Eigen::VectorXd targets;   // N, normalized
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  double target_mean = 0.0;
  double target_scale = 1.0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::string> feature_names;

  std::size_t input_dim() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }

  Eigen::VectorXd normalize_features(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
  double normalize_target(double y) const { return (y - target_mean) / target_scale; }
  double denormalize_target(double y) const { return y * target_scale + target_mean; }
};

// Builds a dataset from raw rows: seeded split with round(test_fraction * N) test rows,
// then standardization with training statistics (constant columns get divisor 1).
RegressionDataset make_dataset(const Eigen::MatrixXd& raw_features, const Eigen::VectorXd& raw_targets,
                               std::uint64_t split_seed, double test_fraction,
                               std::vector<std::string> feature_names = {});

// Reads a numeric CSV with a header row. `max_rows` > 0 keeps a seeded random subset of
// that many rows before splitting.
RegressionDataset load_uci_csv(const std::string& path, const std::string& target_column,
                               std::uint64_t split_seed, double test_fraction = 0.1, std::size_t max_rows = 0);

// Copy of `dataset` whose train split is reduced, holding out `fraction` of it as the test split.
RegressionDataset validation_split(const RegressionDataset& dataset, double fraction, std::uint64_t seed);

// log p(theta) + sum over the training split of log p(y_i | x_i, theta).
double log_posterior(const Eigen::VectorXd& flat, const RegressionDataset& dataset);

// grad log p(theta) + (N / |batch|) * sum_{i in batch} grad log p(y_i | x_i, theta), where N is
// the training-split size and every index must belong to the training split.
Eigen::VectorXd log_posterior_grad_minibatch(const Eigen::VectorXd& flat, const RegressionDataset& dataset,
                                             std::span<const std::size_t> batch_indices);

// Posterior over network parameters as a sampling target.
class BnnTarget final : public TargetDistribution {
 public:
  BnnTarget(std::shared_ptr<const RegressionDataset> dataset, std::size_t batch_size = kDefaultBatchSize);

  std::size_t dim() const override { return parameter_count(dataset_->input_dim()); }
  std::string name() const override { return "bnn"; }
  double log_density(VectorRef z) const override;
  Vector grad_log_density(VectorRef z) const override;
  // Minibatch of min(batch_size, N_train) training rows drawn without replacement.
  Vector stochastic_grad(VectorRef z, Rng& rng) const override;
  // Weights ~ N(0, 1 / (fan_in + 1)), biases 0, precision ~ Gamma(1, 0.1).
  Vector init_sample(Rng& rng) const override;

  const RegressionDataset& dataset() const { return *dataset_; }

 private:
  std::shared_ptr<const RegressionDataset> dataset_;
  std::size_t batch_size_;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Posterior predictive at raw (un-normalized) input x, in original target units.
Prediction predict(const TraceStore& trace, const RegressionDataset& dataset,
                   const Eigen::Ref<const Eigen::VectorXd>& raw_x);

struct Evaluation {
  double rmse = 0.0;     // original target units
  double test_ll = 0.0;  // mean log predictive density, original units
};

Evaluation evaluate(const TraceStore& trace, const RegressionDataset& dataset);

// Picks the step size with the lowest validation RMSE, training on a 10% validation carve-out.
struct GridSearchResult {
  double best_step = 0.0;
  std::vector<double> steps;
  std::vector<double> validation_rmse;
};

GridSearchResult select_step_size(const RegressionDataset& dataset, const SamplerConfig& base,
                                  const std::vector<double>& grid, std::size_t batch_size = kDefaultBatchSize);

}  // namespace sgldr::bnn
