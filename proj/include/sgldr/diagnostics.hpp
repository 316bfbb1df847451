#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sgldr/sampler.hpp"

namespace sgldr {

// Effective sample size n / (1 + 2 sum_k rho_k), truncating the autocorrelation sum with
// Geyer's initial monotone sequence. Clipped to [1, n]; a constant series gives 1.
// Requires n >= 10.
double ess_univariate(std::span<const double> series);

struct EssReport {
  std::vector<double> per_particle_ess;  // first coordinate of each particle's series
  double mean_ess = 0.0;
  double min_ess = 0.0;
  double ess_per_second = 0.0;  // mean_ess / collection wall time
  std::size_t degenerate_particles = 0;  // zero-variance series
};

EssReport ess_report(const TraceStore& trace);

struct MomentErrorReport {
  Eigen::VectorXd estimate;
  Eigen::VectorXd truth;
  double error = 0.0;  // Euclidean norm of estimate - truth
};

using SampleTransform = std::function<double(double)>;

// Mean of transform(z) over every particle of every snapshot, compared with `truth`.
MomentErrorReport moment_error(const TraceStore& trace, const Eigen::VectorXd& truth,
                               const SampleTransform& transform = {});

// Default coverage radius for the 3x3 grid: three standard deviations, 3 * sqrt(0.1).
inline const double kDefaultModeRadius = 3.0 * std::sqrt(0.1);

// Number of centers with at least one particle of the final snapshot within `radius`.
std::size_t mode_coverage(const TraceStore& trace, const std::vector<Eigen::VectorXd>& centers, double radius);

// Running estimates of E[X] and E[X^2] per coordinate, one row per snapshot, pooling all
// particles of all snapshots seen so far.
struct RunningMoments {
  std::vector<std::size_t> iterations;
  Eigen::MatrixXd mean;         // snapshots x d
  Eigen::MatrixXd second_moment;  // snapshots x d
};

RunningMoments running_moments(const TraceStore& trace, const SampleTransform& transform = {});

}  // namespace sgldr
