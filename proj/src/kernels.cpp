#include "sgldr/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "sgldr/errors.hpp"

namespace sgldr {

std::string to_string(KernelMode mode) {
  switch (mode) {
    case KernelMode::RbfMedian: return "rbf-median";
    case KernelMode::RbfFixed: return "rbf-fixed";
    case KernelMode::Identity: return "identity";
  }
  return "unknown";
}

KernelMode parse_kernel_mode(const std::string& text) {
  if (text == "rbf-median") return KernelMode::RbfMedian;
  if (text == "rbf-fixed") return KernelMode::RbfFixed;
  if (text == "identity") return KernelMode::Identity;
  throw ArgumentError("unknown kernel mode '" + text + "' (expected rbf-median, rbf-fixed or identity)");
}

namespace {

void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ArgumentError("kernel bandwidth must be positive and finite");
}

}  // namespace

double rbf(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::Ref<const Eigen::VectorXd>& z_prime,
           double h) {
  check_bandwidth(h);
  if (z.size() != z_prime.size()) throw ArgumentError("rbf: dimension mismatch");
  return std::exp(-(z - z_prime).squaredNorm() / h);
}

Eigen::VectorXd rbf_grad_first(const Eigen::Ref<const Eigen::VectorXd>& z_j,
                               const Eigen::Ref<const Eigen::VectorXd>& z_i, double h) {
  const double k = rbf(z_j, z_i, h);
  return (-2.0 / h * k) * (z_j - z_i);
}

Matrix gram_matrix(const ParticleArray& particles, double h) {
  check_bandwidth(h);
  const Eigen::Index n = particles.rows();
  if (n == 0) throw ArgumentError("gram_matrix: empty ensemble");
  Matrix gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = std::exp(-(particles.row(i) - particles.row(j)).squaredNorm() / h);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }
  return gram;
}

double median_bandwidth(const ParticleArray& particles) {
  const Eigen::Index n = particles.rows();
  if (n < 2) throw ArgumentError("median_bandwidth needs at least two particles");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) dist.push_back((particles.row(i) - particles.row(j)).norm());
  }
  // Lower middle element for an even count.
  const auto mid = dist.begin() + static_cast<std::ptrdiff_t>((dist.size() - 1) / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  const double med = *mid;
  const double h = med * med / std::log(static_cast<double>(n) + 1.0);
  if (!std::isfinite(h)) throw NumericalError("median bandwidth overflowed (particles too far apart)");
  return std::max(h, kMinBandwidth);
}

PsdFactor psd_factor(const Matrix& gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) throw ArgumentError("psd_factor: gram must be square");
  const Eigen::Index n = gram.rows();
  for (double jitter : kJitterLadder) {
    Eigen::LLT<Matrix> llt(gram + jitter * Matrix::Identity(n, n));
    if (llt.info() != Eigen::Success) continue;
    Matrix lower = llt.matrixL();
    const auto diag = lower.diagonal().array();
    if (!(diag > 0.0).all() || !lower.allFinite()) continue;
    return {std::move(lower), jitter};
  }
  NumericalError err("kernel matrix is not positive definite even with jitter " +
                     std::to_string(kJitterLadder[std::size(kJitterLadder) - 1]));
  err.offending_matrix = gram;
  throw err;
}

KernelState build_kernel_state(const ParticleArray& particles, KernelMode mode, double fixed_h) {
  KernelState state;
  state.mode = mode;
  const Eigen::Index n = particles.rows();
  if (mode == KernelMode::Identity) {
    state.bandwidth = 0.0;
    state.gram = Matrix::Identity(n, n);
    state.psd_factor = Matrix::Identity(n, n);
    return state;
  }
  if (mode == KernelMode::RbfFixed) {
    check_bandwidth(fixed_h);
    state.bandwidth = fixed_h;
  } else {
    // A single particle has no pairwise distances; its gram is [1] for any h.
    state.bandwidth = n >= 2 ? median_bandwidth(particles) : 1.0;
  }
  state.gram = gram_matrix(particles, state.bandwidth);
  PsdFactor f = psd_factor(state.gram);
  state.psd_factor = std::move(f.lower);
  state.jitter_used = f.jitter;
  return state;
}

// ---------------------------------------------------------------------------

PermutationSpec build_permutation(std::size_t particle_count, std::size_t dim) {
  if (particle_count == 0 || dim == 0) throw ArgumentError("build_permutation: K and d must be >= 1");
  PermutationSpec spec;
  spec.particle_count = particle_count;
  spec.dim = dim;
  spec.index_map.resize(particle_count * dim);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t p = 0; p < particle_count; ++p) spec.index_map[c * particle_count + p] = p * dim + c;
  }
  return spec;
}

std::vector<std::size_t> PermutationSpec::inverse() const {
  std::vector<std::size_t> inv(index_map.size());
  for (std::size_t k = 0; k < index_map.size(); ++k) inv[index_map[k]] = k;
  return inv;
}

Matrix PermutationSpec::matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Matrix p = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < index_map.size(); ++k) {
    p(static_cast<Eigen::Index>(index_map[k]), static_cast<Eigen::Index>(k)) = 1.0;
  }
  return p;
}

Eigen::VectorXd PermutationSpec::to_particle_major(const Eigen::VectorXd& dimension_major) const {
  if (static_cast<std::size_t>(dimension_major.size()) != size()) throw ArgumentError("permutation size mismatch");
  Eigen::VectorXd out(dimension_major.size());
  for (std::size_t k = 0; k < size(); ++k) {
    out[static_cast<Eigen::Index>(index_map[k])] = dimension_major[static_cast<Eigen::Index>(k)];
  }
  return out;
}

Eigen::VectorXd PermutationSpec::to_dimension_major(const Eigen::VectorXd& particle_major) const {
  if (static_cast<std::size_t>(particle_major.size()) != size()) throw ArgumentError("permutation size mismatch");
  Eigen::VectorXd out(particle_major.size());
  for (std::size_t k = 0; k < size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = particle_major[static_cast<Eigen::Index>(index_map[k])];
  }
  return out;
}

Matrix block_diagonal_gram(const Matrix& gram, std::size_t dim) {
  const Eigen::Index n = gram.rows();
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix out = Matrix::Zero(n * d, n * d);
  for (Eigen::Index c = 0; c < d; ++c) out.block(c * n, c * n, n, n) = gram;
  return out;
}

Matrix build_big_K(const Matrix& gram, std::size_t dim) {
  if (gram.rows() != gram.cols()) throw ArgumentError("build_big_K: gram must be square");
  const Matrix p = build_permutation(static_cast<std::size_t>(gram.rows()), dim).matrix();
  return p * block_diagonal_gram(gram, dim) * p.transpose();
}

Eigen::VectorXd flatten_particle_major(const ParticleArray& a) {
  Eigen::VectorXd v(a.size());
  for (Eigen::Index p = 0; p < a.rows(); ++p) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) v[p * a.cols() + c] = a(p, c);
  }
  return v;
}

ParticleArray unflatten_particle_major(const Eigen::VectorXd& v, std::size_t particle_count, std::size_t dim) {
  if (static_cast<std::size_t>(v.size()) != particle_count * dim) throw ArgumentError("unflatten: size mismatch");
  const auto n = static_cast<Eigen::Index>(particle_count);
  const auto d = static_cast<Eigen::Index>(dim);
  ParticleArray a(n, d);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index c = 0; c < d; ++c) a(p, c) = v[p * d + c];
  }
  return a;
}

}  // namespace sgldr
