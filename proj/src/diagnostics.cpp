#include "sgldr/diagnostics.hpp"

#include <algorithm>
#include <limits>

#include "sgldr/errors.hpp"

namespace sgldr {

double ess_univariate(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw ArgumentError("ess_univariate needs at least 10 values");

  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (!(var > 0.0) || !std::isfinite(var)) return 1.0;

  // Biased autocorrelation estimator (normalized by n) keeps the sequence positive definite.
  auto rho = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += (series[i] - mean) * (series[i + lag] - mean);
    return acc / (static_cast<double>(n) * var);
  };

  // tau = -1 + 2 * sum_m (rho_{2m} + rho_{2m+1}), stopping at the first non-positive pair.
  // Pairs are also forced non-increasing (initial monotone sequence).
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (m == 0 ? 1.0 : rho(2 * m)) + rho(2 * m + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev);
    prev = pair;
    tau += 2.0 * pair;
  }
  const double nd = static_cast<double>(n);
  if (!(tau > 0.0)) return nd;
  return std::clamp(nd / tau, 1.0, nd);
}

EssReport ess_report(const TraceStore& trace) {
  if (trace.empty()) throw ArgumentError("ess_report: empty trace");
  EssReport report;
  const std::size_t n = trace.snapshots.size();
  std::vector<double> series(n);
  for (std::size_t p = 0; p < trace.particle_count; ++p) {
    double first = trace.snapshots[0].particles(static_cast<Eigen::Index>(p), 0);
    bool constant = true;
    for (std::size_t s = 0; s < n; ++s) {
      series[s] = trace.snapshots[s].particles(static_cast<Eigen::Index>(p), 0);
      constant = constant && series[s] == first;
    }
    if (constant) ++report.degenerate_particles;
    report.per_particle_ess.push_back(ess_univariate(series));
  }
  double sum = 0.0;
  report.min_ess = std::numeric_limits<double>::infinity();
  for (double e : report.per_particle_ess) {
    sum += e;
    report.min_ess = std::min(report.min_ess, e);
  }
  report.mean_ess = sum / static_cast<double>(report.per_particle_ess.size());
  const double wall = trace.collection_wall_s();
  report.ess_per_second = wall > 0.0 ? report.mean_ess / wall : std::numeric_limits<double>::infinity();
  return report;
}

MomentErrorReport moment_error(const TraceStore& trace, const Eigen::VectorXd& truth,
                               const SampleTransform& transform) {
  if (trace.empty()) throw ArgumentError("moment_error: empty trace");
  if (static_cast<std::size_t>(truth.size()) != trace.dim) throw ArgumentError("moment_error: truth has wrong size");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(truth.size());
  std::size_t count = 0;
  for (const Snapshot& s : trace.snapshots) {
    for (Eigen::Index p = 0; p < s.particles.rows(); ++p) {
      for (Eigen::Index c = 0; c < s.particles.cols(); ++c) {
        const double v = s.particles(p, c);
        sum[c] += transform ? transform(v) : v;
      }
      ++count;
    }
  }
  MomentErrorReport report;
  report.estimate = sum / static_cast<double>(count);
  report.truth = truth;
  report.error = (report.estimate - truth).norm();
  return report;
}

std::size_t mode_coverage(const TraceStore& trace, const std::vector<Eigen::VectorXd>& centers, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("mode_coverage radius must be positive");
  if (trace.empty()) return 0;
  const ParticleArray& last = trace.snapshots.back().particles;
  std::size_t covered = 0;
  for (const Eigen::VectorXd& c : centers) {
    for (Eigen::Index p = 0; p < last.rows(); ++p) {
      if ((last.row(p).transpose() - c).norm() <= radius) {
        ++covered;
        break;
      }
    }
  }
  return covered;
}

RunningMoments running_moments(const TraceStore& trace, const SampleTransform& transform) {
  if (trace.empty()) throw ArgumentError("running_moments: empty trace");
  const auto rows = static_cast<Eigen::Index>(trace.snapshots.size());
  const auto d = static_cast<Eigen::Index>(trace.dim);
  RunningMoments out;
  out.mean.resize(rows, d);
  out.second_moment.resize(rows, d);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(d);
  double count = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Snapshot& s = trace.snapshots[static_cast<std::size_t>(r)];
    for (Eigen::Index p = 0; p < s.particles.rows(); ++p) {
      for (Eigen::Index c = 0; c < d; ++c) {
        const double v = transform ? transform(s.particles(p, c)) : s.particles(p, c);
        sum[c] += v;
        sum_sq[c] += v * v;
      }
      count += 1.0;
    }
    out.iterations.push_back(s.iteration);
    out.mean.row(r) = (sum / count).transpose();
    out.second_moment.row(r) = (sum_sq / count).transpose();
  }
  return out;
}

}  // namespace sgldr
