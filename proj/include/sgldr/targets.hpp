#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgldr/random.hpp"

namespace sgldr {

using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// Unnormalized target density pi(z) proportional to exp(-H(z)). Implementations are
// immutable after construction and safe to evaluate concurrently.
class TargetDistribution {
 public:
  virtual ~TargetDistribution() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;

  // log pi(z) up to an additive constant fixed per target.
  virtual double log_density(VectorRef z) const = 0;
  // Analytic gradient of log_density, i.e. -grad H(z).
  virtual Vector grad_log_density(VectorRef z) const = 0;

  // Gradient used by the samplers. Targets backed by data override this with a
  // minibatch estimator drawing its batch from `rng`.
  virtual Vector stochastic_grad(VectorRef z, Rng& rng) const;

  // Initial particle position. Default: N(0, I) in the sampling space.
  virtual Vector init_sample(Rng& rng) const;

 protected:
  void check_dim(VectorRef z) const;
};

double log_density(const TargetDistribution& target, VectorRef z);
Vector grad_log_density(const TargetDistribution& target, VectorRef z);

// Central differences of log_density with step h per coordinate.
Vector finite_diff_gradient(const TargetDistribution& target, VectorRef z, double h);

// log(sum(exp(values))) with the maximum subtracted.
double log_sum_exp(const Vector& values);

class StandardGaussian final : public TargetDistribution {
 public:
  explicit StandardGaussian(std::size_t dim);

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "gauss-std"; }
  double log_density(VectorRef z) const override;
  Vector grad_log_density(VectorRef z) const override;

 private:
  std::size_t dim_;
};

// p(z) = sum_i w_i * rate_i * exp(-rate_i * z) on z > 0, one dimensional.
class MixtureOfExponentials final : public TargetDistribution {
 public:
  MixtureOfExponentials(std::vector<double> rates, std::vector<double> weights);

  // Rates (1.5, 0.5), weights (1/3, 2/3).
  static MixtureOfExponentials standard();

  std::size_t dim() const override { return 1; }
  std::string name() const override { return "moe"; }
  double log_density(VectorRef z) const override;
  Vector grad_log_density(VectorRef z) const override;

  double pdf(double z) const;
  // E[z^n] = sum_i w_i n! / rate_i^n.
  double analytic_moment(int n) const;
  // Exact draw: categorical component, then inverse CDF of that exponential.
  double sample_exact(Rng& rng) const;

  // Density and gradient of y = log z evaluated directly in y, finite for every real y.
  double log_density_of_log(double y) const;
  double grad_log_density_of_log(double y) const;

  const std::vector<double>& rates() const { return rates_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> rates_;
  std::vector<double> weights_;
  Vector log_coeff_;  // log(w_i * rate_i)
};

double analytic_moment(const MixtureOfExponentials& target, int n);

// Density of y = log(z) for a base density on the positive orthant:
// p(y) = p_base(exp(y)) * prod_i exp(y_i).
class LogReparameterizedTarget final : public TargetDistribution {
 public:
  explicit LogReparameterizedTarget(std::shared_ptr<const TargetDistribution> base);

  std::size_t dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name(); }
  double log_density(VectorRef y) const override;
  Vector grad_log_density(VectorRef y) const override;

  const TargetDistribution& base() const { return *base_; }

 private:
  std::shared_ptr<const TargetDistribution> base_;
};

// Equally weighted isotropic-diagonal Gaussians in 2D.
class GaussianGridMixture final : public TargetDistribution {
 public:
  GaussianGridMixture(std::vector<Eigen::Vector2d> centers, Eigen::Vector2d covariance_diagonal);

  // 3x3 grid at {-2, 0, 2}^2 with covariance diag(0.1, 0.1).
  static GaussianGridMixture grid3x3();

  std::size_t dim() const override { return 2; }
  std::string name() const override { return "mog3x3"; }
  double log_density(VectorRef z) const override;
  Vector grad_log_density(VectorRef z) const override;

  const std::vector<Eigen::Vector2d>& centers() const { return centers_; }
  const Eigen::Vector2d& covariance_diagonal() const { return cov_diag_; }

 private:
  Vector component_log_densities(VectorRef z) const;

  std::vector<Eigen::Vector2d> centers_;
  Eigen::Vector2d cov_diag_;
};

}  // namespace sgldr
