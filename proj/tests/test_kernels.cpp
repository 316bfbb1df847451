#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sgldr/errors.hpp"
#include "sgldr/kernels.hpp"

using namespace sgldr;

namespace {

Matrix random_particles(Eigen::Index k, Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Matrix z(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index c = 0; c < d; ++c) z(i, c) = nd(rng);
  return z;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Rbf, Examples) {
  EXPECT_EQ(rbf(vec({0.3, -1.0}), vec({0.3, -1.0}), 0.7), 1.0);
  EXPECT_NEAR(rbf(vec({0.0}), vec({1.0}), 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(rbf(vec({0.0, 0.0}), vec({1.0, 1.0}), 2.0), 0.367879441171442, 1e-15);
}

TEST(Rbf, RejectsBadBandwidth) {
  EXPECT_THROW(rbf(vec({0.0}), vec({1.0}), 0.0), ArgumentError);
  EXPECT_THROW(rbf(vec({0.0}), vec({1.0}), -1.0), ArgumentError);
  EXPECT_THROW(rbf_grad_first(vec({0.0}), vec({1.0}), 0.0), ArgumentError);
  EXPECT_THROW(rbf(vec({0.0}), vec({1.0, 2.0}), 1.0), ArgumentError);
}

TEST(Rbf, SymmetricAndBounded) {
  const Matrix z = random_particles(20, 3, 5);
  for (Eigen::Index i = 0; i + 1 < z.rows(); ++i) {
    const double a = rbf(z.row(i).transpose(), z.row(i + 1).transpose(), 0.8);
    EXPECT_EQ(a, rbf(z.row(i + 1).transpose(), z.row(i).transpose(), 0.8));
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(RbfGrad, Examples) {
  EXPECT_EQ(rbf_grad_first(vec({1.0, 2.0}), vec({1.0, 2.0}), 0.5).norm(), 0.0);
  EXPECT_NEAR(rbf_grad_first(vec({1.0}), vec({0.0}), 1.0)[0], -2.0 * std::exp(-1.0), 1e-15);
}

TEST(RbfGrad, MatchesFiniteDifferenceAndIsAntisymmetric) {
  const Matrix z = random_particles(12, 3, 9);
  const double h = 1.3;
  const double step = 1e-6;
  for (Eigen::Index i = 0; i + 1 < z.rows(); ++i) {
    const Eigen::VectorXd a = z.row(i).transpose();
    const Eigen::VectorXd b = z.row(i + 1).transpose();
    const Eigen::VectorXd g = rbf_grad_first(a, b, h);
    for (Eigen::Index c = 0; c < a.size(); ++c) {
      Eigen::VectorXd ap = a, am = a;
      ap[c] += step;
      am[c] -= step;
      EXPECT_NEAR(g[c], (rbf(ap, b, h) - rbf(am, b, h)) / (2 * step), 1e-6);
    }
    EXPECT_LT((g + rbf_grad_first(b, a, h)).norm(), 1e-15);
  }
}

TEST(Gram, SingleParticleAndCoincident) {
  EXPECT_EQ(gram_matrix(Matrix::Constant(1, 2, 0.4), 1.0), Matrix::Ones(1, 1));
  EXPECT_EQ(gram_matrix(Matrix::Constant(2, 3, 0.4), 1.0), Matrix::Ones(2, 2));
}

TEST(Gram, MatchesElementwiseLoop) {
  const Matrix z = random_particles(3, 2, 1);
  const Matrix g = gram_matrix(z, 0.9);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      EXPECT_NEAR(g(i, j), oracle::rbf(z.row(i).transpose(), z.row(j).transpose(), 0.9), 1e-15);
  EXPECT_EQ(g, g.transpose());
  EXPECT_EQ(g.diagonal(), Eigen::VectorXd::Ones(3));
}

TEST(MedianBandwidth, Examples) {
  Matrix two(2, 1);
  two << 0.0, 1.0;
  EXPECT_NEAR(median_bandwidth(two), 1.0 / std::log(3.0), 1e-15);
  EXPECT_NEAR(median_bandwidth(two), 0.910239, 1e-6);
  EXPECT_EQ(median_bandwidth(Matrix::Constant(5, 2, 1.5)), 1e-8);
  EXPECT_THROW(median_bandwidth(Matrix::Zero(1, 2)), ArgumentError);
}

TEST(MedianBandwidth, LowerMiddleForEvenCount) {
  // Four particles on a line give six distances {1,2,3,1,2,1}: sorted 1,1,1,2,2,3, lower middle 1.
  Matrix z(4, 1);
  z << 0.0, 1.0, 2.0, 3.0;
  EXPECT_NEAR(median_bandwidth(z), 1.0 / std::log(5.0), 1e-15);
}

TEST(MedianBandwidth, ScalesQuadratically) {
  const Matrix z = random_particles(7, 3, 4);
  const double h = median_bandwidth(z);
  EXPECT_NEAR(median_bandwidth(3.0 * z), 9.0 * h, 1e-12 * h);
}

TEST(PsdFactor, Identity) {
  const PsdFactor f = psd_factor(Matrix::Identity(4, 4));
  EXPECT_EQ(f.jitter, 0.0);
  EXPECT_EQ(f.lower, Matrix::Identity(4, 4));
}

TEST(PsdFactor, CoincidentParticlesNeedJitter) {
  const Matrix ones = Matrix::Ones(2, 2);
  const PsdFactor f = psd_factor(ones);
  EXPECT_GT(f.jitter, 0.0);
  EXPECT_LE(f.jitter, 1e-8);
  EXPECT_LT((f.lower * f.lower.transpose() - ones).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(PsdFactor, ReconstructsRandomGram) {
  const Matrix z = random_particles(5, 2, 17);
  const Matrix g = gram_matrix(z, median_bandwidth(z));
  const PsdFactor f = psd_factor(g);
  const Matrix rebuilt = f.lower * f.lower.transpose();
  const Matrix target = g + f.jitter * Matrix::Identity(5, 5);
  EXPECT_LT((rebuilt - target).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(f.lower.isLowerTriangular());
}

TEST(PsdFactor, FailureCarriesMatrix) {
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  try {
    psd_factor(bad);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.offending_matrix, bad);
  }
}

TEST(PsdFactor, GramIsPsdForManyEnsembles) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix z = random_particles(2 + static_cast<Eigen::Index>(s % 20), 1 + static_cast<Eigen::Index>(s % 3), s);
    const PsdFactor f = psd_factor(gram_matrix(z, median_bandwidth(z)));
    EXPECT_LE(f.jitter, 1e-8) << s;
  }
}

TEST(KernelState, ModesAndInvariants) {
  const Matrix z = random_particles(6, 2, 8);
  const KernelState med = build_kernel_state(z, KernelMode::RbfMedian);
  EXPECT_NEAR(med.bandwidth, median_bandwidth(z), 0.0);
  EXPECT_EQ(med.gram.diagonal(), Eigen::VectorXd::Ones(6));
  EXPECT_TRUE((med.gram.array() > 0.0).all() && (med.gram.array() <= 1.0).all());
  EXPECT_LT((med.psd_factor * med.psd_factor.transpose() - med.gram - med.jitter_used * Matrix::Identity(6, 6))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);

  const KernelState fixed = build_kernel_state(z, KernelMode::RbfFixed, 0.25);
  EXPECT_EQ(fixed.bandwidth, 0.25);
  EXPECT_THROW(build_kernel_state(z, KernelMode::RbfFixed, 0.0), ArgumentError);

  const KernelState id = build_kernel_state(z, KernelMode::Identity);
  EXPECT_EQ(id.gram, Matrix::Identity(6, 6));
  EXPECT_EQ(id.psd_factor, Matrix::Identity(6, 6));
}

TEST(KernelState, SingleParticleUsesUnitGram) {
  const KernelState s = build_kernel_state(Matrix::Constant(1, 3, 2.0), KernelMode::RbfMedian);
  EXPECT_EQ(s.gram, Matrix::Ones(1, 1));
  EXPECT_EQ(s.psd_factor, Matrix::Ones(1, 1));
}

TEST(KernelMode, RoundTrip) {
  for (KernelMode m : {KernelMode::RbfMedian, KernelMode::RbfFixed, KernelMode::Identity}) {
    EXPECT_EQ(parse_kernel_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_kernel_mode("rbf"), ArgumentError);
}

TEST(Permutation, TrivialCases) {
  for (std::size_t d = 1; d <= 4; ++d) {
    const PermutationSpec p = build_permutation(1, d);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p.index_map[i], i);
  }
  for (std::size_t k = 1; k <= 5; ++k) {
    const PermutationSpec p = build_permutation(k, 1);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p.index_map[i], i);
  }
}

TEST(Permutation, MapsDimensionMajorToParticleMajor) {
  const std::size_t k = 2, d = 2;
  const PermutationSpec p = build_permutation(k, d);
  const Matrix z = random_particles(2, 2, 21);
  Eigen::VectorXd dm(4), pm(4);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t q = 0; q < k; ++q) {
      dm[static_cast<Eigen::Index>(c * k + q)] = z(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c));
      pm[static_cast<Eigen::Index>(q * d + c)] = z(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c));
    }
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t q = 0; q < k; ++q) EXPECT_EQ(p.index_map[c * k + q], q * d + c);
  EXPECT_EQ(p.matrix() * dm, pm);
  EXPECT_EQ(p.to_particle_major(dm), pm);
  EXPECT_EQ(p.to_dimension_major(pm), dm);
  EXPECT_EQ(flatten_particle_major(z), pm);
}

TEST(Permutation, BijectionAndOrthogonal) {
  for (std::size_t k = 1; k <= 5; ++k)
    for (std::size_t d = 1; d <= 4; ++d) {
      const PermutationSpec p = build_permutation(k, d);
      const auto inv = p.inverse();
      for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(inv[p.index_map[i]], i);
      const Matrix m = p.matrix();
      EXPECT_EQ(m * m.transpose(), Matrix::Identity(m.rows(), m.cols()));
    }
}

TEST(BigK, IdentityKernelIsIdentity) {
  const Matrix big = build_big_K(Matrix::Identity(3, 3), 2);
  EXPECT_EQ(big, Matrix::Identity(6, 6));
  const Matrix g = random_particles(3, 2, 2);
  EXPECT_EQ(unflatten_particle_major(big * flatten_particle_major(g), 3, 2), g);
}

TEST(BigK, DimensionOneIsGram) {
  Matrix g(2, 2);
  g << 1.0, 0.3, 0.3, 1.0;
  EXPECT_EQ(build_big_K(g, 1), g);
}

TEST(BigK, MatchesIndexOracleAndGramProduct) {
  const Matrix z = random_particles(3, 2, 13);
  const Matrix gram = gram_matrix(z, median_bandwidth(z));
  const Matrix grads = random_particles(3, 2, 14);
  const Matrix big = build_big_K(gram, 2);
  EXPECT_LT((big - oracle::big_K(gram, 2)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(big, big.transpose());
  const Matrix reshaped = unflatten_particle_major(big * flatten_particle_major(grads), 3, 2);
  EXPECT_LT((reshaped - gram * grads).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BigK, LiteralBlockDiagonalProductInDimensionMajorOrder) {
  // blockdiag(gram) applied after reordering the particle-major gradient into dimension-major
  // order yields gram * grads flattened dimension-major.
  const std::size_t k = 4, d = 3;
  const Matrix z = random_particles(4, 3, 30);
  const Matrix gram = gram_matrix(z, median_bandwidth(z));
  const Matrix grads = random_particles(4, 3, 31);
  const PermutationSpec p = build_permutation(k, d);
  const Eigen::VectorXd out = block_diagonal_gram(gram, d) * p.matrix().transpose() * flatten_particle_major(grads);
  const Matrix expected = gram * grads;
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t q = 0; q < k; ++q)
      EXPECT_NEAR(out[static_cast<Eigen::Index>(c * k + q)],
                  expected(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c)), 1e-12);
}

TEST(BigK, FlattenRoundTrip) {
  const Matrix z = random_particles(5, 4, 3);
  EXPECT_EQ(unflatten_particle_major(flatten_particle_major(z), 5, 4), z);
  EXPECT_THROW(unflatten_particle_major(Eigen::VectorXd::Zero(7), 2, 4), ArgumentError);
}
