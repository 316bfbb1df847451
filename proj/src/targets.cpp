#include "sgldr/targets.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "sgldr/errors.hpp"

namespace sgldr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Vector TargetDistribution::stochastic_grad(VectorRef z, Rng& /*rng*/) const {
  return grad_log_density(z);
}

Vector TargetDistribution::init_sample(Rng& rng) const {
  Vector z(static_cast<Eigen::Index>(dim()));
  fill_standard_normal(rng, z);
  return z;
}

void TargetDistribution::check_dim(VectorRef z) const {
  if (static_cast<std::size_t>(z.size()) != dim()) {
    throw ArgumentError("target '" + name() + "' expects dimension " + std::to_string(dim()) +
                        ", got " + std::to_string(z.size()));
  }
}

double log_density(const TargetDistribution& target, VectorRef z) { return target.log_density(z); }

Vector grad_log_density(const TargetDistribution& target, VectorRef z) {
  return target.grad_log_density(z);
}

Vector finite_diff_gradient(const TargetDistribution& target, VectorRef z, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite-difference step must be positive");
  if (static_cast<std::size_t>(z.size()) != target.dim()) {
    throw ArgumentError("finite_diff_gradient: dimension mismatch");
  }
  Vector grad(z.size());
  Vector probe = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    probe[i] = z[i] + h;
    const double up = target.log_density(probe);
    probe[i] = z[i] - h;
    const double down = target.log_density(probe);
    probe[i] = z[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("non-finite log density at finite-difference probe, coordinate " +
                           std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double log_sum_exp(const Vector& values) {
  const double m = values.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((values.array() - m).exp().sum());
}

// ---------------------------------------------------------------------------

StandardGaussian::StandardGaussian(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ArgumentError("dimension must be positive");
}

double StandardGaussian::log_density(VectorRef z) const {
  check_dim(z);
  return -0.5 * z.squaredNorm();
}

Vector StandardGaussian::grad_log_density(VectorRef z) const {
  check_dim(z);
  return -z;
}

// ---------------------------------------------------------------------------

MixtureOfExponentials::MixtureOfExponentials(std::vector<double> rates, std::vector<double> weights)
    : rates_(std::move(rates)), weights_(std::move(weights)) {
  if (rates_.empty() || rates_.size() != weights_.size()) {
    throw ArgumentError("mixture of exponentials needs matching, non-empty rates and weights");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!(rates_[i] > 0.0) || !std::isfinite(rates_[i])) {
      throw ArgumentError("exponential rates must be strictly positive");
    }
    if (!(weights_[i] >= 0.0)) throw ArgumentError("mixture weights must be non-negative");
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("mixture weights must sum to 1");

  log_coeff_.resize(static_cast<Eigen::Index>(rates_.size()));
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    log_coeff_[static_cast<Eigen::Index>(i)] = std::log(weights_[i] * rates_[i]);
  }
}

MixtureOfExponentials MixtureOfExponentials::standard() {
  return MixtureOfExponentials({1.5, 0.5}, {1.0 / 3.0, 2.0 / 3.0});
}

double MixtureOfExponentials::log_density(VectorRef z) const {
  check_dim(z);
  const double x = z[0];
  if (!(x > 0.0)) return kNegInf;
  Vector terms = log_coeff_;
  for (std::size_t i = 0; i < rates_.size(); ++i) terms[static_cast<Eigen::Index>(i)] -= rates_[i] * x;
  return log_sum_exp(terms);
}

Vector MixtureOfExponentials::grad_log_density(VectorRef z) const {
  check_dim(z);
  const double x = z[0];
  if (!(x > 0.0)) throw ArgumentError("mixture of exponentials gradient requested outside z > 0");
  Vector terms = log_coeff_;
  for (std::size_t i = 0; i < rates_.size(); ++i) terms[static_cast<Eigen::Index>(i)] -= rates_[i] * x;
  const double lse = log_sum_exp(terms);
  double g = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    g -= std::exp(terms[static_cast<Eigen::Index>(i)] - lse) * rates_[i];
  }
  return Vector::Constant(1, g);
}

double MixtureOfExponentials::pdf(double z) const {
  if (!(z > 0.0)) return 0.0;
  double p = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) p += weights_[i] * rates_[i] * std::exp(-rates_[i] * z);
  return p;
}

double MixtureOfExponentials::analytic_moment(int n) const {
  if (n < 1) throw ArgumentError("moment order must be >= 1");
  const double n_factorial = std::tgamma(static_cast<double>(n) + 1.0);
  double m = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) m += weights_[i] * n_factorial / std::pow(rates_[i], n);
  return m;
}

double MixtureOfExponentials::sample_exact(Rng& rng) const {
  std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t c = pick(rng);
  return -std::log1p(-unif(rng)) / rates_[c];
}

double MixtureOfExponentials::log_density_of_log(double y) const {
  const double x = std::exp(y);
  Vector terms = log_coeff_;
  for (std::size_t i = 0; i < rates_.size(); ++i) terms[static_cast<Eigen::Index>(i)] -= rates_[i] * x;
  return log_sum_exp(terms) + y;
}

double MixtureOfExponentials::grad_log_density_of_log(double y) const {
  const double x = std::exp(y);
  Vector terms = log_coeff_;
  for (std::size_t i = 0; i < rates_.size(); ++i) terms[static_cast<Eigen::Index>(i)] -= rates_[i] * x;
  const double lse = log_sum_exp(terms);
  double mean_rate = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    mean_rate += std::exp(terms[static_cast<Eigen::Index>(i)] - lse) * rates_[i];
  }
  return 1.0 - x * mean_rate;
}

double analytic_moment(const MixtureOfExponentials& target, int n) { return target.analytic_moment(n); }

// ---------------------------------------------------------------------------

LogReparameterizedTarget::LogReparameterizedTarget(std::shared_ptr<const TargetDistribution> base)
    : base_(std::move(base)) {
  if (!base_) throw ArgumentError("log reparameterization needs a base target");
}

double LogReparameterizedTarget::log_density(VectorRef y) const {
  check_dim(y);
  if (const auto* moe = dynamic_cast<const MixtureOfExponentials*>(base_.get())) {
    return moe->log_density_of_log(y[0]);
  }
  const Vector z = y.array().exp().matrix();
  return base_->log_density(z) + y.sum();
}

Vector LogReparameterizedTarget::grad_log_density(VectorRef y) const {
  check_dim(y);
  if (const auto* moe = dynamic_cast<const MixtureOfExponentials*>(base_.get())) {
    return Vector::Constant(1, moe->grad_log_density_of_log(y[0]));
  }
  const Vector z = y.array().exp().matrix();
  Vector g = base_->grad_log_density(z);
  return (g.array() * z.array() + 1.0).matrix();
}

// ---------------------------------------------------------------------------

GaussianGridMixture::GaussianGridMixture(std::vector<Eigen::Vector2d> centers,
                                         Eigen::Vector2d covariance_diagonal)
    : centers_(std::move(centers)), cov_diag_(covariance_diagonal) {
  if (centers_.empty()) throw ArgumentError("Gaussian mixture needs at least one center");
  if (!(cov_diag_.array() > 0.0).all()) throw ArgumentError("covariance diagonal must be positive");
}

GaussianGridMixture GaussianGridMixture::grid3x3() {
  std::vector<Eigen::Vector2d> centers;
  for (double a : {-2.0, 0.0, 2.0}) {
    for (double b : {-2.0, 0.0, 2.0}) centers.emplace_back(a, b);
  }
  return GaussianGridMixture(std::move(centers), Eigen::Vector2d(0.1, 0.1));
}

Vector GaussianGridMixture::component_log_densities(VectorRef z) const {
  const double log_weight = -std::log(static_cast<double>(centers_.size()));
  const double log_norm = -0.5 * (2.0 * std::log(2.0 * M_PI) + cov_diag_.array().log().sum());
  Vector out(static_cast<Eigen::Index>(centers_.size()));
  for (std::size_t k = 0; k < centers_.size(); ++k) {
    const Eigen::Array2d diff = z.array() - centers_[k].array();
    out[static_cast<Eigen::Index>(k)] =
        log_weight + log_norm - 0.5 * (diff.square() / cov_diag_.array()).sum();
  }
  return out;
}

double GaussianGridMixture::log_density(VectorRef z) const {
  check_dim(z);
  return log_sum_exp(component_log_densities(z));
}

Vector GaussianGridMixture::grad_log_density(VectorRef z) const {
  check_dim(z);
  const Vector comp = component_log_densities(z);
  const double lse = log_sum_exp(comp);
  Vector g = Vector::Zero(2);
  for (std::size_t k = 0; k < centers_.size(); ++k) {
    const double r = std::exp(comp[static_cast<Eigen::Index>(k)] - lse);
    g.array() -= r * (z.array() - centers_[k].array()) / cov_diag_.array();
  }
  return g;
}

}  // namespace sgldr
