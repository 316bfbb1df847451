#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sgldr {

using Matrix = Eigen::MatrixXd;

// K x d array of particles, one particle per row.
using ParticleArray = Eigen::MatrixXd;

enum class KernelMode { RbfMedian, RbfFixed, Identity };

std::string to_string(KernelMode mode);
KernelMode parse_kernel_mode(const std::string& text);

// k(z, z') = exp(-||z - z'||^2 / h). Note the exponent carries no factor 1/2.
double rbf(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::Ref<const Eigen::VectorXd>& z_prime,
           double h);

// Gradient of k(z_j, z_i) with respect to its first argument:
// -(2 / h) * (z_j - z_i) * k(z_j, z_i).
Eigen::VectorXd rbf_grad_first(const Eigen::Ref<const Eigen::VectorXd>& z_j,
                               const Eigen::Ref<const Eigen::VectorXd>& z_i, double h);

Matrix gram_matrix(const ParticleArray& particles, double h);

// h = med^2 / log(K + 1) over the K(K-1)/2 pairwise distances. For an even count the
// lower middle value is used. Floored at kMinBandwidth.
double median_bandwidth(const ParticleArray& particles);
inline constexpr double kMinBandwidth = 1e-8;

// Jitter ladder tried in order when the plain factorization fails.
inline constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6, 1e-4};

struct PsdFactor {
  Matrix lower;         // L with L L^T = gram + jitter * I
  double jitter = 0.0;  // amount added to the diagonal
};

// Cholesky factor of gram + jitter * I, escalating jitter through kJitterLadder.
// Throws NumericalError (with the matrix attached) when the largest jitter fails.
PsdFactor psd_factor(const Matrix& gram);

// Everything the particle updates need from the kernel at one step.
struct KernelState {
  KernelMode mode = KernelMode::RbfMedian;
  double bandwidth = 1.0;
  Matrix gram;
  Matrix psd_factor;
  double jitter_used = 0.0;
};

// Builds the kernel state for the current ensemble. `fixed_h` is used for RbfFixed.
// Identity mode yields gram = L = I and no repulsion.
KernelState build_kernel_state(const ParticleArray& particles, KernelMode mode, double fixed_h = 0.0);

// Index reordering between the two flattenings of a K x d particle array:
//   dimension-major: index c * K + p  (all particles' coordinate c, then c + 1, ...)
//   particle-major:  index p * d + c  (z_1, z_2, ... concatenated)
struct PermutationSpec {
  std::size_t particle_count = 0;
  std::size_t dim = 0;
  // index_map[dimension-major index] = particle-major index.
  std::vector<std::size_t> index_map;

  std::size_t size() const { return index_map.size(); }
  std::vector<std::size_t> inverse() const;
  // Dense P with P * (dimension-major vector) = particle-major vector.
  Matrix matrix() const;
  Eigen::VectorXd to_particle_major(const Eigen::VectorXd& dimension_major) const;
  Eigen::VectorXd to_dimension_major(const Eigen::VectorXd& particle_major) const;
};

PermutationSpec build_permutation(std::size_t particle_count, std::size_t dim);

// blockdiag(gram, ..., gram) with d copies; acts on dimension-major vectors.
Matrix block_diagonal_gram(const Matrix& gram, std::size_t dim);

// Dense Kd x Kd expansion of the gram matrix in the particle-major state ordering:
// P * blockdiag(gram, ..., gram) * P^T. Test oracle only; the samplers never build it.
Matrix build_big_K(const Matrix& gram, std::size_t dim);

// Row-major (particle-major) flattening of a K x d array and its inverse.
Eigen::VectorXd flatten_particle_major(const ParticleArray& a);
ParticleArray unflatten_particle_major(const Eigen::VectorXd& v, std::size_t particle_count, std::size_t dim);

}  // namespace sgldr
