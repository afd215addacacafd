#include "abc/kernels.hpp"
#include "abc/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace {

using abc::DensityKernel;
using abc::KernelShape;
using abc::Matrix;
using abc::Vector;

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

TEST(Kernel, GaussianIsOneAtOrigin) {
  EXPECT_DOUBLE_EQ(DensityKernel::gaussian(2).evaluate(v({0, 0})), 1.0);
}

TEST(Kernel, UniformIndicator) {
  const DensityKernel k = DensityKernel::uniform(1);
  EXPECT_EQ(k.evaluate(v({0.5})), 1.0);
  EXPECT_EQ(k.evaluate(v({1.5})), 0.0);
  EXPECT_EQ(k.log_evaluate(v({1.5})), -std::numeric_limits<double>::infinity());
}

TEST(Kernel, GaussianClosedForm) {
  const DensityKernel k(KernelShape::Gaussian, Matrix::Constant(1, 1, 4.0), 1.0);
  // exp(-x'Ax / 2) with A = 4, x = 1.
  EXPECT_NEAR(k.evaluate(v({1})), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(k.evaluate(v({1})), 0.1353352832366127, 1e-15);
}

TEST(Kernel, BandwidthScalesArgument) {
  const DensityKernel k = DensityKernel::gaussian(1, 0.5);
  EXPECT_NEAR(k.accept_weight(v({1})), std::exp(-2.0), 1e-15);
  const DensityKernel exact = DensityKernel::uniform(1, 0.0);
  EXPECT_EQ(exact.accept_weight(v({0})), 1.0);
  EXPECT_EQ(exact.accept_weight(v({1e-300})), 0.0);
}

TEST(Kernel, QuadraticForm) {
  const DensityKernel id = DensityKernel::uniform(2);
  EXPECT_EQ(id.quadratic_form(v({1, 2}) - v({1, 2})), 0.0);
  EXPECT_EQ(id.quadratic_form(v({1, 2})), 5.0);
  const DensityKernel w(KernelShape::UniformEllipsoid, Vector(v({4, 1})).asDiagonal(), 1.0);
  EXPECT_EQ(w.quadratic_form(v({1, 0})), 4.0);
}

TEST(Kernel, RejectsNonPositiveDefiniteMetric) {
  EXPECT_THROW(DensityKernel(KernelShape::Gaussian, Matrix::Zero(2, 2), 1.0), std::invalid_argument);
  EXPECT_THROW(DensityKernel::gaussian(1, -1.0), std::invalid_argument);
}

TEST(KernelSample, UniformSupport) {
  abc::RngStream rng(1, 0);
  const DensityKernel k = DensityKernel::uniform(1);
  for (int i = 0; i < 10000; ++i) {
    const double x = k.sample(rng)[0];
    ASSERT_GT(x, -1.0);
    ASSERT_LT(x, 1.0);
  }
  const DensityKernel e(KernelShape::UniformEllipsoid, Vector(v({1, 4})).asDiagonal(), 1.0);
  for (int i = 0; i < 10000; ++i) {
    const Vector x = e.sample(rng);
    ASSERT_LT(x[0] * x[0] + 4 * x[1] * x[1], 1.0);
  }
}

// Uniform on the unit interval (-1, 1) has variance 1/3; the 2-D unit disc
// has per-axis variance 1/4.
TEST(KernelSample, UniformMoments) {
  abc::RngStream rng(2, 0);
  const int n = 100000;
  double ss1 = 0, ss2 = 0;
  const DensityKernel k1 = DensityKernel::uniform(1);
  const DensityKernel k2 = DensityKernel::uniform(2);
  for (int i = 0; i < n; ++i) {
    ss1 += std::pow(k1.sample(rng)[0], 2);
    ss2 += std::pow(k2.sample(rng)[0], 2);
  }
  EXPECT_NEAR(ss1 / n, 1.0 / 3.0, 0.005);
  EXPECT_NEAR(ss2 / n, 0.25, 0.005);
}

TEST(KernelSample, GaussianCovarianceIsIdentity) {
  abc::RngStream rng(3, 0);
  const DensityKernel k = DensityKernel::gaussian(2);
  const int n = 100000;
  Matrix s = Matrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const Vector x = k.sample(rng);
    s += x * x.transpose();
  }
  s /= n;
  // Standard error of a variance estimate is sqrt(2 / n), of a covariance
  // sqrt(1 / n).
  EXPECT_NEAR(s(0, 0), 1.0, 3 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s(1, 1), 1.0, 3 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s(0, 1), 0.0, 3 * std::sqrt(1.0 / n));
}

TEST(Loss, QuadraticLoss) {
  EXPECT_EQ(abc::quadratic_loss(v({1, 2}), v({1, 2}), abc::LossMatrix::identity(2)), 0.0);
  EXPECT_EQ(abc::quadratic_loss(v({1, 2}), v({0, 0}), abc::LossMatrix::identity(2)), 5.0);
  EXPECT_EQ(abc::quadratic_loss(v({1, 0}), v({0, 0}), abc::LossMatrix::inverse_variances(v({0.25, 1}))), 4.0);
}

TEST(Ess, HandArithmetic) {
  const std::vector<double> equal(100, 0.7);
  EXPECT_NEAR(abc::effective_sample_size(std::span<const double>(equal)), 100.0, 1e-12);
  const std::vector<double> one{1, 0, 0, 0};
  EXPECT_NEAR(abc::effective_sample_size(std::span<const double>(one)), 1.0, 1e-12);
  const std::vector<double> mixed{2, 2, 1, 1};
  EXPECT_NEAR(abc::effective_sample_size(std::span<const double>(mixed)), 3.6, 1e-12);
}

TEST(Ess, BoundedByCount) {
  abc::RngStream rng(4, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w(20);
    for (double& x : w) x = rng.exponential(1.0);
    const double ess = abc::effective_sample_size(std::span<const double>(w));
    EXPECT_GE(ess, 1.0 - 1e-12);
    EXPECT_LE(ess, 20.0 + 1e-12);
  }
}

TEST(PosteriorSummaries, SinglePointIsAnError) {
  abc::WeightedSample s;
  s.push_back(v({3}), 1.0);
  EXPECT_EQ(abc::weighted_mean(s)[0], 3.0);
  EXPECT_THROW(abc::posterior_summaries(s), std::exception);
}

TEST(PosteriorSummaries, HandArithmetic) {
  abc::WeightedSample two;
  two.push_back(v({0}), 1.0);
  two.push_back(v({1}), 1.0);
  EXPECT_DOUBLE_EQ(abc::posterior_summaries(two).mean[0], 0.5);

  abc::WeightedSample three;
  three.push_back(v({0}), 1.0);
  three.push_back(v({1}), 2.0);
  three.push_back(v({2}), 1.0);
  const abc::PosteriorSummary s = abc::posterior_summaries(three, 0.5);
  EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(s.covariance(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(0.5 * (s.intervals(0, 0) + s.intervals(0, 1)), 1.0);
  EXPECT_DOUBLE_EQ(s.intervals(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(s.intervals(0, 1), 1.5);
}

TEST(WeightedSample, ValidateRejectsNegativeWeights) {
  abc::WeightedSample s;
  s.push_back(v({0}), -1.0);
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Stats, NormalQuantile) {
  EXPECT_EQ(abc::normal_quantile(0.5), 0.0);
  EXPECT_NEAR(abc::normal_quantile(0.975), 1.959963984540054, 1e-15);
  EXPECT_NEAR(abc::normal_quantile(1e-10), -6.361340902404056, 1e-13);
  for (double p : {1e-6, 0.01, 0.3, 0.8413, 0.999}) EXPECT_NEAR(abc::normal_cdf(abc::normal_quantile(p)), p, 1e-14);
  EXPECT_THROW(abc::normal_quantile(0.0), std::invalid_argument);
}

TEST(Stats, WeightedQuantileMidpoint) {
  const std::vector<double> x{0, 1};
  const std::vector<double> w{1, 1};
  EXPECT_DOUBLE_EQ(abc::weighted_quantile(x, w, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(abc::weighted_quantile(x, w, 0.4), 0.0);
  EXPECT_DOUBLE_EQ(abc::weighted_quantile(x, w, 0.6), 1.0);
}

TEST(Stats, SampleQuantileType7) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(abc::sample_quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(abc::sample_quantile(x, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(abc::sample_quantile(x, 0.5), 2.5);
}

TEST(Stats, BinomialBand) {
  // Binomial(200, 0.95) 0.5% and 99.5% quantiles are 181 and 197.
  const auto [lo, hi] = abc::binomial_band(200, 0.95, 0.01);
  EXPECT_DOUBLE_EQ(lo, 181.0 / 200.0);
  EXPECT_DOUBLE_EQ(hi, 197.0 / 200.0);
  EXPECT_NEAR(std::exp(abc::binomial_log_pmf(2, 4, 0.5)), 6.0 / 16.0, 1e-14);
}

}  // namespace
