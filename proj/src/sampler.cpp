#include "sgldr/sampler.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sgldr/errors.hpp"

namespace sgldr {

std::string to_string(Method method) {
  switch (method) {
    case Method::Sgld: return "sgld";
    case Method::Svgd: return "svgd";
    case Method::SgldR: return "sgld_r";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  if (text == "sgld") return Method::Sgld;
  if (text == "svgd") return Method::Svgd;
  if (text == "sgld_r") return Method::SgldR;
  throw ArgumentError("unknown method '" + text + "' (expected sgld, svgd or sgld_r)");
}

StepSchedule StepSchedule::constant(double epsilon) {
  StepSchedule s;
  s.kind = Kind::Constant;
  s.epsilon = epsilon;
  return s;
}

StepSchedule StepSchedule::polynomial(double a, double b, double gamma) {
  StepSchedule s;
  s.kind = Kind::Polynomial;
  s.a = a;
  s.b = b;
  s.gamma = gamma;
  return s;
}

void StepSchedule::validate() const {
  if (kind == Kind::Constant) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("step size must be positive");
    return;
  }
  if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("polynomial schedule needs a > 0");
  if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("polynomial schedule needs b > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("polynomial schedule needs gamma >= 0");
}

double step_size(const StepSchedule& schedule, std::size_t t) {
  if (schedule.kind == StepSchedule::Kind::Constant) return schedule.epsilon;
  return schedule.a * std::pow(schedule.b + static_cast<double>(t), -schedule.gamma);
}

void SamplerConfig::validate() const {
  if (particle_count < 1) throw ConfigError("particle count must be >= 1");
  if (total_iterations < 1) throw ConfigError("total iterations must be >= 1");
  if (burn_in >= total_iterations) throw ConfigError("burn_in must be smaller than total iterations");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (kernel_mode == KernelMode::RbfFixed && !(kernel_h > 0.0)) {
    throw ConfigError("kernel.h must be set to a positive value for rbf-fixed");
  }
  if (!(repulsion_cutoff_fraction >= 0.0 && repulsion_cutoff_fraction <= 1.0)) {
    throw ConfigError("repulsion cutoff fraction must lie in [0, 1]");
  }
  step.validate();
}

std::string SamplerConfig::canonical() const {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "method=" << to_string(method) << ";particles=" << particle_count
     << ";schedule=" << (step.kind == StepSchedule::Kind::Constant ? "constant" : "polynomial")
     << ";epsilon=" << num(step.epsilon) << ";a=" << num(step.a) << ";b=" << num(step.b)
     << ";gamma=" << num(step.gamma) << ";iterations=" << total_iterations << ";burn_in=" << burn_in
     << ";thin=" << thin << ";kernel=" << to_string(kernel_mode) << ";h=" << num(kernel_h)
     << ";noise=" << (noise_enabled ? 1 : 0) << ";cutoff=" << num(repulsion_cutoff_fraction)
     << ";seed=" << seed << ";init=target-default";
  return os.str();
}

std::string SamplerConfig::fingerprint() const {
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Rng> StreamSplitter::step_streams(std::size_t step, std::size_t particle_count) const {
  std::vector<Rng> out;
  out.reserve(particle_count);
  for (std::size_t i = 0; i < particle_count; ++i) out.push_back(particle(step, i));
  return out;
}

void check_finite(const ParticleArray& particles, std::size_t step) {
  for (Eigen::Index i = 0; i < particles.rows(); ++i) {
    if (!particles.row(i).allFinite()) {
      throw NumericalError("non-finite value in particle " + std::to_string(i) + " at step " +
                               std::to_string(step),
                           static_cast<long>(step), static_cast<long>(i));
    }
  }
}

Matrix particle_gradients(const ParticleArray& particles, const TargetDistribution& target,
                          std::span<Rng> streams) {
  const Eigen::Index n = particles.rows();
  if (streams.size() != static_cast<std::size_t>(n)) throw ArgumentError("one stream per particle required");
  Matrix grads(n, particles.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd z = particles.row(i).transpose();
    grads.row(i) = target.stochastic_grad(z, streams[static_cast<std::size_t>(i)]).transpose();
  }
  return grads;
}

Matrix svgd_direction(const ParticleArray& particles, const Matrix& grads, const KernelState& kernel) {
  if (kernel.mode == KernelMode::Identity) return grads;
  const Matrix& gram = kernel.gram;
  const Eigen::VectorXd row_sums = gram.rowwise().sum();
  Matrix repulsion = row_sums.asDiagonal() * particles;
  repulsion.noalias() -= gram * particles;
  Matrix phi = gram * grads;
  phi += (2.0 / kernel.bandwidth) * repulsion;
  return phi;
}

Matrix sample_repulsion_noise(const KernelState& kernel, double eps, std::size_t particle_count,
                              std::size_t dim, std::span<Rng> streams) {
  if (streams.size() != particle_count) throw ArgumentError("one stream per particle required");
  if (static_cast<std::size_t>(kernel.psd_factor.rows()) != particle_count) {
    throw ArgumentError("kernel factor does not match the particle count");
  }
  const auto n = static_cast<Eigen::Index>(particle_count);
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix xi(n, d);
  Eigen::VectorXd row(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    fill_standard_normal(streams[static_cast<std::size_t>(i)], row);
    xi.row(i) = row.transpose();
  }
  const double scale = std::sqrt(2.0 * (eps / static_cast<double>(particle_count)));
  if (kernel.mode == KernelMode::Identity) return scale * xi;
  Matrix correlated = kernel.psd_factor.triangularView<Eigen::Lower>() * xi;
  return scale * correlated;
}

namespace {

ParticleEnsemble advance(const ParticleEnsemble& ensemble, const Matrix& increment) {
  ParticleEnsemble next;
  next.particles = ensemble.particles + increment;
  next.step_index = ensemble.step_index + 1;
  check_finite(next.particles, ensemble.step_index);
  return next;
}

void check_kernel(const ParticleEnsemble& ensemble, const KernelState& kernel) {
  if (static_cast<std::size_t>(kernel.gram.rows()) != ensemble.size()) {
    throw ArgumentError("kernel state was built for a different ensemble size");
  }
}

}  // namespace

ParticleEnsemble svgd_step(const ParticleEnsemble& ensemble, const TargetDistribution& target,
                           const KernelState& kernel, double eps, const StreamSplitter& streams) {
  check_kernel(ensemble, kernel);
  auto rngs = streams.step_streams(ensemble.step_index, ensemble.size());
  const Matrix grads = particle_gradients(ensemble.particles, target, rngs);
  const double scale = eps / static_cast<double>(ensemble.size());
  return advance(ensemble, scale * svgd_direction(ensemble.particles, grads, kernel));
}

ParticleEnsemble sgld_step(const ParticleEnsemble& ensemble, const TargetDistribution& target, double eps,
                           const StreamSplitter& streams, bool noise_enabled) {
  auto rngs = streams.step_streams(ensemble.step_index, ensemble.size());
  const Matrix grads = particle_gradients(ensemble.particles, target, rngs);
  if (!noise_enabled) return advance(ensemble, eps * grads);
  const auto n = static_cast<Eigen::Index>(ensemble.size());
  const auto d = static_cast<Eigen::Index>(ensemble.dim());
  Matrix xi(n, d);
  Eigen::VectorXd row(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    fill_standard_normal(rngs[static_cast<std::size_t>(i)], row);
    xi.row(i) = row.transpose();
  }
  const double noise_scale = std::sqrt(2.0 * eps);
  return advance(ensemble, eps * grads + noise_scale * xi);
}

ParticleEnsemble sgld_r_step(const ParticleEnsemble& ensemble, const TargetDistribution& target,
                             const KernelState& kernel, double eps, const StreamSplitter& streams,
                             bool noise_enabled) {
  check_kernel(ensemble, kernel);
  auto rngs = streams.step_streams(ensemble.step_index, ensemble.size());
  const Matrix grads = particle_gradients(ensemble.particles, target, rngs);
  const double scale = eps / static_cast<double>(ensemble.size());
  const Matrix drift = scale * svgd_direction(ensemble.particles, grads, kernel);
  if (!noise_enabled) return advance(ensemble, drift);
  const Matrix noise = sample_repulsion_noise(kernel, eps, ensemble.size(), ensemble.dim(), rngs);
  return advance(ensemble, drift + noise);
}

double TraceStore::collection_wall_s() const {
  if (snapshots.empty()) return 0.0;
  return snapshots.back().wall_s - burn_in_wall_s;
}

ParticleEnsemble initialize_ensemble(const TargetDistribution& target, std::size_t particle_count,
                                     const StreamSplitter& streams) {
  ParticleEnsemble ensemble;
  ensemble.particles.resize(static_cast<Eigen::Index>(particle_count), static_cast<Eigen::Index>(target.dim()));
  for (std::size_t i = 0; i < particle_count; ++i) {
    Rng rng = streams.particle(kInitStreamStep, i);
    const Eigen::VectorXd z = target.init_sample(rng);
    if (static_cast<std::size_t>(z.size()) != target.dim()) throw ArgumentError("init sample has wrong dimension");
    ensemble.particles.row(static_cast<Eigen::Index>(i)) = z.transpose();
  }
  check_finite(ensemble.particles, 0);
  return ensemble;
}

TraceStore run(const SamplerConfig& config, const TargetDistribution& target) {
  config.validate();
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  const StreamSplitter streams(config.seed);
  TraceStore trace;
  trace.config_fingerprint = config.fingerprint();
  trace.seed = config.seed;
  trace.particle_count = config.particle_count;
  trace.dim = target.dim();

  ParticleEnsemble ensemble = initialize_ensemble(target, config.particle_count, streams);
  const auto cutoff_step = static_cast<std::size_t>(
      std::floor(config.repulsion_cutoff_fraction * static_cast<double>(config.total_iterations)));
  const bool uses_kernel = config.method != Method::Sgld;
  if (uses_kernel) {
    trace.bandwidths.reserve(config.total_iterations);
    trace.jitters.reserve(config.total_iterations);
  }

  for (std::size_t t = 0; t < config.total_iterations; ++t) {
    const double eps = step_size(config.step, t);
    if (config.method == Method::Sgld) {
      ensemble = sgld_step(ensemble, target, eps, streams, config.noise_enabled);
    } else {
      const KernelMode mode = t < cutoff_step ? config.kernel_mode : KernelMode::Identity;
      KernelState kernel;
      try {
        kernel = build_kernel_state(ensemble.particles, mode, config.kernel_h);
      } catch (const NumericalError& e) {
        NumericalError tagged(std::string(e.what()) + " at step " + std::to_string(t), static_cast<long>(t));
        tagged.offending_matrix = e.offending_matrix;
        throw tagged;
      }
      trace.bandwidths.push_back(kernel.bandwidth);
      trace.jitters.push_back(kernel.jitter_used);
      if (config.method == Method::Svgd) {
        ensemble = svgd_step(ensemble, target, kernel, eps, streams);
      } else {
        ensemble = sgld_r_step(ensemble, target, kernel, eps, streams, config.noise_enabled);
      }
    }

    const std::size_t iteration = t + 1;
    if (iteration == config.burn_in) trace.burn_in_wall_s = elapsed();
    if (iteration > config.burn_in && (iteration - config.burn_in) % config.thin == 0) {
      trace.snapshots.push_back({iteration, ensemble.particles, elapsed()});
    }
  }
  trace.total_wall_s = elapsed();
  return trace;
}

}  // namespace sgldr
