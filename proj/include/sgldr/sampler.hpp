#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgldr/kernels.hpp"
#include "sgldr/random.hpp"
#include "sgldr/targets.hpp"

namespace sgldr {

enum class Method { Sgld, Svgd, SgldR };

std::string to_string(Method method);
Method parse_method(const std::string& text);

// Constant epsilon, or the polynomial decay a * (b + t)^(-gamma).
struct StepSchedule {
  enum class Kind { Constant, Polynomial };
  Kind kind = Kind::Constant;
  double epsilon = 1e-3;
  double a = 1e-3;
  double b = 1.0;
  double gamma = 0.55;

  static StepSchedule constant(double epsilon);
  static StepSchedule polynomial(double a, double b, double gamma);

  // Throws ConfigError unless every step size is positive and finite.
  void validate() const;
};

double step_size(const StepSchedule& schedule, std::size_t t);

struct SamplerConfig {
  Method method = Method::SgldR;
  std::size_t particle_count = 10;
  StepSchedule step = StepSchedule::constant(1e-3);
  std::size_t total_iterations = 1000;
  std::size_t burn_in = 500;
  std::size_t thin = 10;
  KernelMode kernel_mode = KernelMode::RbfMedian;
  double kernel_h = 0.0;  // used by rbf-fixed only
  bool noise_enabled = true;
  // Fraction of the run after which the kernel falls back to identity (no repulsion).
  double repulsion_cutoff_fraction = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  // Canonical text of every field; hashed into the fingerprint.
  std::string canonical() const;
  std::string fingerprint() const;
};

// Sampler state: K particles of dimension d, one per row, and the step count t.
struct ParticleEnsemble {
  ParticleArray particles;
  std::size_t step_index = 0;

  std::size_t size() const { return static_cast<std::size_t>(particles.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(particles.cols()); }
};

// Hands out the per-particle random stream for a given step.
class StreamSplitter {
 public:
  explicit StreamSplitter(std::uint64_t seed) : seed_(seed) {}
  Rng particle(std::size_t step, std::size_t index) const { return particle_stream(seed_, step, index); }
  std::vector<Rng> step_streams(std::size_t step, std::size_t particle_count) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

// K x d matrix of (possibly minibatch) log-density gradients; row i uses streams[i].
Matrix particle_gradients(const ParticleArray& particles, const TargetDistribution& target,
                          std::span<Rng> streams);

// SVGD direction phi_i = sum_j [k(z_j, z_i) grad_j + grad_{z_j} k(z_j, z_i)], in matrix form
// gram * grads + (2 / h) * (rowsum(gram) .* Z - gram * Z). Identity kernels carry no repulsion.
Matrix svgd_direction(const ParticleArray& particles, const Matrix& grads, const KernelState& kernel);

// eta with row i correlated across particles through the kernel: for every coordinate c,
// eta(:, c) = sqrt(2 * (eps / K)) * L * xi(:, c), where row i of xi is drawn from streams[i].
Matrix sample_repulsion_noise(const KernelState& kernel, double eps, std::size_t particle_count,
                              std::size_t dim, std::span<Rng> streams);

// z_i <- z_i + (eps / K) * phi_i. Deterministic given the gradients.
ParticleEnsemble svgd_step(const ParticleEnsemble& ensemble, const TargetDistribution& target,
                           const KernelState& kernel, double eps,
                           const StreamSplitter& streams = StreamSplitter(0));

// Independent Langevin chains: z_i <- z_i + eps * grad_i + N(0, 2 eps I).
ParticleEnsemble sgld_step(const ParticleEnsemble& ensemble, const TargetDistribution& target, double eps,
                           const StreamSplitter& streams, bool noise_enabled = true);

// SVGD drift plus noise with covariance (2 eps / K) * (gram (x) I_d).
ParticleEnsemble sgld_r_step(const ParticleEnsemble& ensemble, const TargetDistribution& target,
                             const KernelState& kernel, double eps, const StreamSplitter& streams,
                             bool noise_enabled = true);

struct Snapshot {
  std::size_t iteration = 0;
  ParticleArray particles;
  double wall_s = 0.0;
};

// Post-burn-in snapshots of the whole ensemble plus per-step kernel statistics.
struct TraceStore {
  std::vector<Snapshot> snapshots;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::size_t particle_count = 0;
  std::size_t dim = 0;
  double burn_in_wall_s = 0.0;  // wall clock when burn-in ended
  double total_wall_s = 0.0;
  std::vector<double> bandwidths;  // per step, empty for sgld
  std::vector<double> jitters;     // per step, empty for sgld

  bool empty() const { return snapshots.empty(); }
  // Wall time spent collecting: last snapshot stamp minus end of burn-in.
  double collection_wall_s() const;
};

ParticleEnsemble initialize_ensemble(const TargetDistribution& target, std::size_t particle_count,
                                     const StreamSplitter& streams);

// Full sampling run. Deterministic in everything except wall-clock stamps.
TraceStore run(const SamplerConfig& config, const TargetDistribution& target);

// Throws NumericalError naming the first particle with a non-finite coordinate.
void check_finite(const ParticleArray& particles, std::size_t step);

}  // namespace sgldr
