#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sgldr/errors.hpp"
#include "sgldr/targets.hpp"

using namespace sgldr;

namespace {

std::shared_ptr<const TargetDistribution> moe_log() {
  return std::make_shared<LogReparameterizedTarget>(
      std::make_shared<MixtureOfExponentials>(MixtureOfExponentials::standard()));
}

double rel_err(const Vector& a, const Vector& b) { return (a - b).norm() / (a.norm() + 1e-12); }

}  // namespace

TEST(StandardGaussian, LogDensityAtModeIsZero) {
  StandardGaussian g(3);
  EXPECT_EQ(log_density(g, Vector::Zero(3)), 0.0);
  Vector z(3);
  z << 1.0, -2.0, 0.5;
  EXPECT_DOUBLE_EQ(g.log_density(z), -0.5 * 5.25);
}

TEST(StandardGaussian, Gradient) {
  StandardGaussian g(2);
  Vector z(2);
  z << 1.0, -2.0;
  const Vector grad = grad_log_density(g, z);
  EXPECT_DOUBLE_EQ(grad[0], -1.0);
  EXPECT_DOUBLE_EQ(grad[1], 2.0);
}

TEST(StandardGaussian, DimensionMismatchThrows) {
  StandardGaussian g(2);
  EXPECT_THROW(g.log_density(Vector::Zero(3)), ArgumentError);
  EXPECT_THROW(g.grad_log_density(Vector::Zero(1)), ArgumentError);
}

TEST(MixtureOfExponentials, DensityAtOne) {
  const auto moe = MixtureOfExponentials::standard();
  const double expected = std::log((1.0 / 3.0) * 1.5 * std::exp(-1.5) + (2.0 / 3.0) * 0.5 * std::exp(-0.5));
  EXPECT_NEAR(moe.log_density(Vector::Constant(1, 1.0)), expected, 1e-14);
  EXPECT_NEAR(moe.log_density(Vector::Constant(1, 1.0)), -1.159184, 1e-6);
}

TEST(MixtureOfExponentials, OutsideSupport) {
  const auto moe = MixtureOfExponentials::standard();
  EXPECT_EQ(moe.log_density(Vector::Constant(1, -0.5)), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(moe.pdf(0.0), 0.0);
}

TEST(MixtureOfExponentials, PdfIntegratesToOne) {
  const auto moe = MixtureOfExponentials::standard();
  const double mass = oracle::simpson([&](double z) { return moe.pdf(z); }, 1e-12, 80.0, 200000);
  EXPECT_NEAR(mass, 1.0, 1e-9);
}

TEST(MixtureOfExponentials, AnalyticMoments) {
  const auto moe = MixtureOfExponentials::standard();
  EXPECT_NEAR(moe.analytic_moment(1), 14.0 / 9.0, 1e-14);
  EXPECT_NEAR(analytic_moment(moe, 2), 152.0 / 27.0, 1e-13);
  const MixtureOfExponentials unit({1.0}, {1.0});
  EXPECT_NEAR(unit.analytic_moment(3), 6.0, 1e-12);
  EXPECT_THROW(moe.analytic_moment(0), ArgumentError);
}

TEST(MixtureOfExponentials, MomentsMatchQuadrature) {
  const auto moe = MixtureOfExponentials::standard();
  for (int n = 1; n <= 3; ++n) {
    const double q = oracle::simpson([&](double z) { return std::pow(z, n) * moe.pdf(z); }, 0.0, 120.0, 400000);
    EXPECT_NEAR(moe.analytic_moment(n), q, 1e-7 * q) << "n=" << n;
  }
}

TEST(MixtureOfExponentials, BadParameters) {
  EXPECT_THROW(MixtureOfExponentials({1.0}, {0.5, 0.5}), ArgumentError);
  EXPECT_THROW(MixtureOfExponentials({}, {}), ArgumentError);
}

TEST(LogReparameterized, DensityIsBaseTimesJacobian) {
  const auto moe = MixtureOfExponentials::standard();
  const auto t = moe_log();
  for (double y : {-3.0, -0.2, 0.0, 0.7, 2.5}) {
    EXPECT_NEAR(t->log_density(Vector::Constant(1, y)), std::log(moe.pdf(std::exp(y))) + y, 1e-12);
  }
}

TEST(LogReparameterized, GradientAtZeroMatchesFiniteDifference) {
  const auto t = moe_log();
  const Vector y = Vector::Zero(1);
  EXPECT_NEAR(t->grad_log_density(y)[0], finite_diff_gradient(*t, y, 1e-5)[0], 1e-6);
}

TEST(LogReparameterized, GradientAtHalf) {
  const auto t = moe_log();
  const Vector y = Vector::Constant(1, 0.5);
  EXPECT_LT(rel_err(t->grad_log_density(y), finite_diff_gradient(*t, y, 1e-5)), 1e-5);
}

TEST(LogReparameterized, FiniteOnWholeLine) {
  const auto t = moe_log();
  for (double y : {-800.0, -50.0, 5.0}) {
    EXPECT_TRUE(std::isfinite(t->log_density(Vector::Constant(1, y)))) << y;
    EXPECT_TRUE(std::isfinite(t->grad_log_density(Vector::Constant(1, y))[0])) << y;
  }
  EXPECT_DOUBLE_EQ(t->grad_log_density(Vector::Constant(1, -800.0))[0], 1.0);
}

TEST(LogReparameterized, DensityNormalizedOverY) {
  const auto t = moe_log();
  const double mass =
      oracle::simpson([&](double y) { return std::exp(t->log_density(Vector::Constant(1, y))); }, -40.0, 5.0, 200000);
  EXPECT_NEAR(mass, 1.0, 1e-8);
}

TEST(LogReparameterized, ExactSamplesReproduceFirstMoment) {
  const auto moe = MixtureOfExponentials::standard();
  Rng rng(42);
  const int n = 1000000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    // Round trip through log space, as the sampler sees it.
    const double y = std::log(moe.sample_exact(rng));
    const double z = std::exp(y);
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - 14.0 / 9.0), 3.0 * se);
}

TEST(GaussianGrid, SymmetricUnderReflectionAndSwap) {
  const auto g = GaussianGridMixture::grid3x3();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    Vector z(2);
    z << u(rng), u(rng);
    const double v = g.log_density(z);
    EXPECT_NEAR(v, g.log_density(-z), 1e-12);
    Vector sw(2);
    sw << z[1], z[0];
    EXPECT_NEAR(v, g.log_density(sw), 1e-12);
  }
  Vector a(2), b(2);
  a << 2.0, 2.0;
  b << -2.0, -2.0;
  EXPECT_NEAR(g.log_density(a), g.log_density(b), 1e-12);
}

TEST(GaussianGrid, GradientVanishesAtOrigin) {
  const auto g = GaussianGridMixture::grid3x3();
  const Vector grad = g.grad_log_density(Vector::Zero(2));
  EXPECT_NEAR(grad[0], 0.0, 1e-15);
  EXPECT_NEAR(grad[1], 0.0, 1e-15);
}

TEST(GaussianGrid, CentersAndCovariance) {
  const auto g = GaussianGridMixture::grid3x3();
  ASSERT_EQ(g.centers().size(), 9u);
  EXPECT_EQ(g.covariance_diagonal(), Eigen::Vector2d(0.1, 0.1));
  int corners = 0;
  for (const auto& c : g.centers()) corners += (std::abs(c[0]) == 2.0 && std::abs(c[1]) == 2.0);
  EXPECT_EQ(corners, 4);
}

TEST(GaussianGrid, FarFromModesStaysFinite) {
  const auto g = GaussianGridMixture::grid3x3();
  Vector z(2);
  z << 60.0, -45.0;
  EXPECT_TRUE(std::isfinite(g.log_density(z)));
  EXPECT_TRUE(g.grad_log_density(z).allFinite());
}

TEST(FiniteDiff, GaussianExample) {
  StandardGaussian g(1);
  EXPECT_NEAR(finite_diff_gradient(g, Vector::Constant(1, 1.0), 1e-5)[0], -1.0, 1e-6);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  StandardGaussian g(1);
  EXPECT_THROW(finite_diff_gradient(g, Vector::Zero(1), 0.0), ArgumentError);
  EXPECT_THROW(finite_diff_gradient(g, Vector::Zero(1), -1e-3), ArgumentError);
}

TEST(FiniteDiff, NonFiniteProbeIsNumericalError) {
  const auto moe = MixtureOfExponentials::standard();
  EXPECT_THROW(finite_diff_gradient(moe, Vector::Constant(1, 1e-7), 1e-5), NumericalError);
}

TEST(GradientProperty, AllSyntheticTargetsAgreeWithFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0.0, 1.0);
  const std::vector<std::shared_ptr<const TargetDistribution>> targets = {
      moe_log(), std::make_shared<GaussianGridMixture>(GaussianGridMixture::grid3x3()),
      std::make_shared<StandardGaussian>(4)};
  for (const auto& t : targets) {
    for (int i = 0; i < 100; ++i) {
      Vector z(static_cast<Eigen::Index>(t->dim()));
      for (Eigen::Index c = 0; c < z.size(); ++c) z[c] = 1.5 * nd(rng);
      EXPECT_LT(rel_err(t->grad_log_density(z), finite_diff_gradient(*t, z, 1e-5)), 1e-5) << t->name();
    }
  }
}

TEST(LogSumExp, StableForLargeMagnitudes) {
  Vector v(3);
  v << 1000.0, 1000.0, -1e6;
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
  Vector w = Vector::Constant(2, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(log_sum_exp(w), -std::numeric_limits<double>::infinity());
}

TEST(InitSample, DefaultIsStandardNormalShape) {
  StandardGaussian g(3);
  Rng rng(1);
  const Vector z = g.init_sample(rng);
  EXPECT_EQ(z.size(), 3);
  EXPECT_TRUE(std::isfinite(g.log_density(z)));
}
