#include "sgldr/bnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sgldr/errors.hpp"

namespace sgldr::bnn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_flat(const Eigen::VectorXd& flat, std::size_t input_dim) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count(input_dim)) {
    throw ArgumentError("parameter vector has length " + std::to_string(flat.size()) + ", expected " +
                        std::to_string(parameter_count(input_dim)));
  }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

// Gradient of the summed log likelihood over `rows`, plus the log likelihood itself.
struct LikelihoodTerms {
  Params grad;
  double log_lik = 0.0;
};

LikelihoodTerms likelihood_terms(const Params& p, const RegressionDataset& data,
                                 std::span<const std::size_t> rows) {
  const auto b = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(data.input_dim());
  Eigen::MatrixXd x(b, d);
  Eigen::VectorXd y(b);
  for (Eigen::Index r = 0; r < b; ++r) {
    x.row(r) = data.features.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));
    y[r] = data.targets[static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)])];
  }
  Eigen::MatrixXd pre = x * p.w1.transpose();
  pre.rowwise() += p.b1.transpose();
  const Eigen::MatrixXd act = pre.cwiseMax(0.0);
  const Eigen::VectorXd out = (act * p.w2).array() + p.b2;
  const Eigen::VectorXd resid = y - out;
  const double precision = std::exp(p.log_precision);

  LikelihoodTerms t;
  const double sq = resid.squaredNorm();
  t.log_lik = static_cast<double>(b) * 0.5 * (p.log_precision - kLog2Pi) - 0.5 * precision * sq;

  const Eigen::VectorXd dout = precision * resid;
  t.grad.w2 = act.transpose() * dout;
  t.grad.b2 = dout.sum();
  Eigen::MatrixXd dpre = dout * p.w2.transpose();
  dpre.array() *= (pre.array() > 0.0).cast<double>();
  t.grad.w1 = dpre.transpose() * x;
  t.grad.b1 = dpre.colwise().sum().transpose();
  t.grad.log_precision = 0.5 * static_cast<double>(b) - 0.5 * precision * sq;
  return t;
}

double log_prior(const Params& p) {
  const double weights = p.w1.squaredNorm() + p.b1.squaredNorm() + p.w2.squaredNorm() + p.b2 * p.b2;
  // Gamma(shape, rate) on exp(l), including the Jacobian of the log transform.
  return -0.5 * weights + kPrecisionShape * p.log_precision - kPrecisionRate * std::exp(p.log_precision);
}

Params log_prior_grad(const Params& p) {
  Params g;
  g.w1 = -p.w1;
  g.b1 = -p.b1;
  g.w2 = -p.w2;
  g.b2 = -p.b2;
  g.log_precision = kPrecisionShape - kPrecisionRate * std::exp(p.log_precision);
  return g;
}

void require_train_members(const RegressionDataset& data, std::span<const std::size_t> rows) {
  std::vector<char> member(data.rows(), 0);
  for (std::size_t i : data.train) member[i] = 1;
  for (std::size_t i : rows) {
    if (i >= data.rows() || !member[i]) {
      throw ArgumentError("batch index " + std::to_string(i) + " is not in the training split");
    }
  }
}

}  // namespace

std::size_t parameter_count(std::size_t input_dim, std::size_t hidden) {
  return input_dim * hidden + hidden + hidden + 1 + 1;
}

Eigen::VectorXd pack(const Params& p) {
  const auto h = p.w1.rows();
  const auto d = p.w1.cols();
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count(static_cast<std::size_t>(d),
                                                                 static_cast<std::size_t>(h))));
  Eigen::Index k = 0;
  for (Eigen::Index u = 0; u < h; ++u) {
    for (Eigen::Index j = 0; j < d; ++j) flat[k++] = p.w1(u, j);
  }
  flat.segment(k, h) = p.b1;
  k += h;
  flat.segment(k, h) = p.w2;
  k += h;
  flat[k++] = p.b2;
  flat[k] = p.log_precision;
  return flat;
}

Params unpack(const Eigen::VectorXd& flat, std::size_t input_dim, std::size_t hidden) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count(input_dim, hidden)) {
    throw ArgumentError("parameter vector length does not match the network shape");
  }
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto d = static_cast<Eigen::Index>(input_dim);
  Params p;
  p.w1.resize(h, d);
  Eigen::Index k = 0;
  for (Eigen::Index u = 0; u < h; ++u) {
    for (Eigen::Index j = 0; j < d; ++j) p.w1(u, j) = flat[k++];
  }
  p.b1 = flat.segment(k, h);
  k += h;
  p.w2 = flat.segment(k, h);
  k += h;
  p.b2 = flat[k++];
  p.log_precision = flat[k];
  return p;
}

double forward(const Params& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != p.w1.cols()) throw ArgumentError("forward: input has wrong dimension");
  const Eigen::VectorXd hidden = (p.w1 * x + p.b1).cwiseMax(0.0);
  return p.w2.dot(hidden) + p.b2;
}

double forward(const Eigen::VectorXd& flat, const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t input_dim) {
  if (static_cast<std::size_t>(x.size()) != input_dim) throw ArgumentError("forward: input has wrong dimension");
  return forward(unpack(flat, input_dim), x);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd RegressionDataset::normalize_features(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
  if (raw.size() != features.cols()) throw ArgumentError("feature vector has wrong dimension");
  return ((raw - feature_mean).array() / feature_scale.array()).matrix();
}

RegressionDataset make_dataset(const Eigen::MatrixXd& raw_features, const Eigen::VectorXd& raw_targets,
                               std::uint64_t split_seed, double test_fraction,
                               std::vector<std::string> feature_names) {
  const auto n = static_cast<std::size_t>(raw_features.rows());
  if (n < 2 || raw_targets.size() != raw_features.rows()) throw ArgumentError("dataset needs >= 2 matching rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ArgumentError("test fraction must lie in (0, 1)");

  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  const auto order = shuffled_indices(n, split_seed);

  RegressionDataset data;
  data.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  data.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(data.test.begin(), data.test.end());
  std::sort(data.train.begin(), data.train.end());
  data.feature_names = std::move(feature_names);

  const auto d = raw_features.cols();
  const double n_train = static_cast<double>(data.train.size());
  data.feature_mean = Eigen::VectorXd::Zero(d);
  data.feature_scale = Eigen::VectorXd::Zero(d);
  double y_mean = 0.0;
  for (std::size_t i : data.train) {
    data.feature_mean += raw_features.row(static_cast<Eigen::Index>(i)).transpose();
    y_mean += raw_targets[static_cast<Eigen::Index>(i)];
  }
  data.feature_mean /= n_train;
  y_mean /= n_train;
  double y_var = 0.0;
  for (std::size_t i : data.train) {
    const Eigen::VectorXd diff = raw_features.row(static_cast<Eigen::Index>(i)).transpose() - data.feature_mean;
    data.feature_scale += diff.cwiseAbs2();
    const double dy = raw_targets[static_cast<Eigen::Index>(i)] - y_mean;
    y_var += dy * dy;
  }
  data.feature_scale = (data.feature_scale / n_train).cwiseSqrt();
  for (Eigen::Index c = 0; c < d; ++c) {
    if (!(data.feature_scale[c] > 1e-12)) data.feature_scale[c] = 1.0;
  }
  data.target_mean = y_mean;
  data.target_scale = std::sqrt(y_var / n_train);
  if (!(data.target_scale > 1e-12)) data.target_scale = 1.0;

  data.features = (raw_features.rowwise() - data.feature_mean.transpose()).array().rowwise() /
                  data.feature_scale.transpose().array();
  data.targets = (raw_targets.array() - data.target_mean) / data.target_scale;
  return data;
}

RegressionDataset load_uci_csv(const std::string& path, const std::string& target_column,
                               std::uint64_t split_seed, double test_fraction, std::size_t max_rows) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line)) throw ParseError("dataset '" + path + "' is empty", 0);

  auto split = [](const std::string& text) {
    std::vector<std::string> cells;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r\""));
      const auto last = cell.find_last_not_of(" \t\r\"");
      cell.erase(last == std::string::npos ? 0 : last + 1);
      cells.push_back(cell);
    }
    return cells;
  };

  const auto header = split(line);
  offset += line.size() + 1;
  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end()) {
    throw ConfigError("target column '" + target_column + "' not found in '" + path + "'");
  }
  const auto target_idx = static_cast<std::size_t>(target_it - header.begin());

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(header.size()),
                       line_offset);
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::size_t used = 0;
      try {
        values[c] = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[c].size() || !std::isfinite(values[c])) {
        throw ParseError("non-numeric cell '" + cells[c] + "' at row " + std::to_string(row_no) + ", column " +
                             std::to_string(c + 1) + " (" + header[c] + ")",
                         line_offset);
      }
    }
    rows.push_back(std::move(values));
  }

  if (max_rows > 0 && rows.size() > max_rows) {
    auto keep = shuffled_indices(rows.size(), split_seed ^ 0x5bd1e995ULL);
    keep.resize(max_rows);
    std::sort(keep.begin(), keep.end());
    std::vector<std::vector<double>> subset;
    subset.reserve(max_rows);
    for (std::size_t i : keep) subset.push_back(std::move(rows[i]));
    rows = std::move(subset);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  Eigen::MatrixXd features(n, d);
  Eigen::VectorXd targets(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index c_out = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == target_idx) {
        targets[r] = rows[static_cast<std::size_t>(r)][c];
      } else {
        features(r, c_out++) = rows[static_cast<std::size_t>(r)][c];
      }
    }
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != target_idx) names.push_back(header[c]);
  }
  return make_dataset(features, targets, split_seed, test_fraction, std::move(names));
}

RegressionDataset validation_split(const RegressionDataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ArgumentError("validation fraction must lie in (0, 1)");
  if (dataset.train.size() < 2) throw ArgumentError("training split too small to carve a validation set");
  auto order = shuffled_indices(dataset.train.size(), seed);
  auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(dataset.train.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, dataset.train.size() - 1);
  RegressionDataset out = dataset;
  out.train.clear();
  out.test.clear();
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_val ? out.test : out.train).push_back(dataset.train[order[k]]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

// ---------------------------------------------------------------------------

double log_posterior(const Eigen::VectorXd& flat, const RegressionDataset& dataset) {
  check_flat(flat, dataset.input_dim());
  const Params p = unpack(flat, dataset.input_dim());
  return log_prior(p) + likelihood_terms(p, dataset, dataset.train).log_lik;
}

Eigen::VectorXd log_posterior_grad_minibatch(const Eigen::VectorXd& flat, const RegressionDataset& dataset,
                                             std::span<const std::size_t> batch_indices) {
  if (batch_indices.empty()) throw ArgumentError("minibatch must not be empty");
  check_flat(flat, dataset.input_dim());
  require_train_members(dataset, batch_indices);
  const Params p = unpack(flat, dataset.input_dim());
  const LikelihoodTerms lik = likelihood_terms(p, dataset, batch_indices);
  const double scale = static_cast<double>(dataset.train.size()) / static_cast<double>(batch_indices.size());
  return pack(log_prior_grad(p)) + scale * pack(lik.grad);
}

BnnTarget::BnnTarget(std::shared_ptr<const RegressionDataset> dataset, std::size_t batch_size)
    : dataset_(std::move(dataset)), batch_size_(batch_size) {
  if (!dataset_ || dataset_->train.empty()) throw ArgumentError("BNN target needs a non-empty training split");
  if (batch_size_ == 0) throw ArgumentError("batch size must be positive");
}

double BnnTarget::log_density(VectorRef z) const {
  check_dim(z);
  return log_posterior(z, *dataset_);
}

Vector BnnTarget::grad_log_density(VectorRef z) const {
  check_dim(z);
  return log_posterior_grad_minibatch(z, *dataset_, dataset_->train);
}

Vector BnnTarget::stochastic_grad(VectorRef z, Rng& rng) const {
  check_dim(z);
  const std::size_t n = dataset_->train.size();
  if (batch_size_ >= n) return log_posterior_grad_minibatch(z, *dataset_, dataset_->train);
  // Partial Fisher-Yates over the training indices.
  std::vector<std::size_t> pool = dataset_->train;
  for (std::size_t k = 0; k < batch_size_; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  return log_posterior_grad_minibatch(z, *dataset_, std::span<const std::size_t>(pool.data(), batch_size_));
}

Vector BnnTarget::init_sample(Rng& rng) const {
  const std::size_t d = dataset_->input_dim();
  Params p;
  const auto h = static_cast<Eigen::Index>(kHiddenUnits);
  p.w1.resize(h, static_cast<Eigen::Index>(d));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d) + 1.0);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(kHiddenUnits) + 1.0);
  for (Eigen::Index u = 0; u < h; ++u) {
    for (Eigen::Index j = 0; j < p.w1.cols(); ++j) p.w1(u, j) = s1 * normal(rng);
  }
  p.b1 = Eigen::VectorXd::Zero(h);
  p.w2.resize(h);
  for (Eigen::Index u = 0; u < h; ++u) p.w2[u] = s2 * normal(rng);
  p.b2 = 0.0;
  std::gamma_distribution<double> gamma(kPrecisionShape, 1.0 / kPrecisionRate);
  p.log_precision = std::log(std::max(gamma(rng), 1e-3));
  return pack(p);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<const ParticleArray*> require_samples(const TraceStore& trace, const RegressionDataset& dataset) {
  if (trace.empty()) throw ArgumentError("trace holds no parameter samples");
  if (trace.dim != parameter_count(dataset.input_dim())) {
    throw ArgumentError("trace dimension does not match the network for this dataset");
  }
  std::vector<const ParticleArray*> out;
  for (const Snapshot& s : trace.snapshots) out.push_back(&s.particles);
  return out;
}

// Normalized-scale predictions and precisions for every collected sample.
void sample_outputs(const std::vector<const ParticleArray*>& snaps, const RegressionDataset& dataset,
                    const Eigen::MatrixXd& x_norm, Eigen::MatrixXd& outputs, Eigen::VectorXd& precisions) {
  std::size_t count = 0;
  for (const auto* s : snaps) count += static_cast<std::size_t>(s->rows());
  outputs.resize(static_cast<Eigen::Index>(count), x_norm.rows());
  precisions.resize(static_cast<Eigen::Index>(count));
  Eigen::Index k = 0;
  for (const auto* s : snaps) {
    for (Eigen::Index p = 0; p < s->rows(); ++p, ++k) {
      const Params params = unpack(s->row(p).transpose(), dataset.input_dim());
      Eigen::MatrixXd pre = x_norm * params.w1.transpose();
      pre.rowwise() += params.b1.transpose();
      outputs.row(k) = ((pre.cwiseMax(0.0) * params.w2).array() + params.b2).transpose();
      precisions[k] = std::exp(params.log_precision);
    }
  }
}

}  // namespace

Prediction predict(const TraceStore& trace, const RegressionDataset& dataset,
                   const Eigen::Ref<const Eigen::VectorXd>& raw_x) {
  const auto snaps = require_samples(trace, dataset);
  const Eigen::MatrixXd x = dataset.normalize_features(raw_x).transpose();
  Eigen::MatrixXd outputs;
  Eigen::VectorXd precisions;
  sample_outputs(snaps, dataset, x, outputs, precisions);
  const Eigen::ArrayXd preds = outputs.col(0).array() * dataset.target_scale + dataset.target_mean;
  Prediction out;
  out.mean = preds.mean();
  const double spread = (preds - out.mean).square().mean();
  const double noise = precisions.array().inverse().mean() * dataset.target_scale * dataset.target_scale;
  out.variance = spread + noise;
  return out;
}

Evaluation evaluate(const TraceStore& trace, const RegressionDataset& dataset) {
  if (dataset.test.empty()) throw ArgumentError("evaluate: empty test split");
  const auto snaps = require_samples(trace, dataset);
  const auto n_test = static_cast<Eigen::Index>(dataset.test.size());
  Eigen::MatrixXd x(n_test, dataset.features.cols());
  Eigen::VectorXd y(n_test);
  for (Eigen::Index r = 0; r < n_test; ++r) {
    const auto row = static_cast<Eigen::Index>(dataset.test[static_cast<std::size_t>(r)]);
    x.row(r) = dataset.features.row(row);
    y[r] = dataset.denormalize_target(dataset.targets[row]);
  }
  Eigen::MatrixXd outputs;
  Eigen::VectorXd precisions;
  sample_outputs(snaps, dataset, x, outputs, precisions);
  const Eigen::Index samples = outputs.rows();
  const double scale = dataset.target_scale;
  const double log_samples = std::log(static_cast<double>(samples));

  Evaluation ev;
  double sq = 0.0;
  double ll = 0.0;
  Eigen::VectorXd terms(samples);
  for (Eigen::Index r = 0; r < n_test; ++r) {
    const Eigen::ArrayXd mu = outputs.col(r).array() * scale + dataset.target_mean;
    const double mean = mu.mean();
    sq += (mean - y[r]) * (mean - y[r]);
    for (Eigen::Index s = 0; s < samples; ++s) {
      const double var = scale * scale / precisions[s];
      const double diff = y[r] - mu[s];
      terms[s] = -0.5 * (kLog2Pi + std::log(var)) - 0.5 * diff * diff / var;
    }
    ll += log_sum_exp(terms) - log_samples;
  }
  ev.rmse = std::sqrt(sq / static_cast<double>(n_test));
  ev.test_ll = ll / static_cast<double>(n_test);
  return ev;
}

GridSearchResult select_step_size(const RegressionDataset& dataset, const SamplerConfig& base,
                                  const std::vector<double>& grid, std::size_t batch_size) {
  if (grid.empty()) throw ArgumentError("step-size grid is empty");
  auto fold = std::make_shared<const RegressionDataset>(validation_split(dataset, 0.1, base.seed + 17));
  const BnnTarget target(fold, batch_size);
  GridSearchResult result;
  double best = std::numeric_limits<double>::infinity();
  for (double step : grid) {
    SamplerConfig cfg = base;
    cfg.step = StepSchedule::constant(step);
    double rmse = std::numeric_limits<double>::infinity();
    try {
      rmse = evaluate(run(cfg, target), *fold).rmse;
    } catch (const NumericalError&) {
      // Diverged at this step size; leave it ranked last.
    }
    result.steps.push_back(step);
    result.validation_rmse.push_back(rmse);
    if (rmse < best) {
      best = rmse;
      result.best_step = step;
    }
  }
  if (!std::isfinite(best)) throw NumericalError("every step size in the grid diverged");
  return result;
}

}  // namespace sgldr::bnn
