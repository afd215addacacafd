#include "abc/engines.hpp"
#include "abc/models.hpp"
#include "abc/summaries.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

namespace {

using abc::AbcProblem;
using abc::DensityKernel;
using abc::Vector;

AbcProblem toy_problem(int y, double h) {
  AbcProblem p;
  p.model = std::make_shared<abc::DiscreteToyModel>();
  p.summary = std::make_shared<abc::IdentityMap>(1);
  p.s_obs = Vector{{double(y)}};
  p.kernel = DensityKernel::uniform(1, h);
  return p;
}

AbcProblem normal_mean_problem(double ybar, double h, abc::KernelShape shape = abc::KernelShape::UniformEllipsoid) {
  AbcProblem p;
  p.model = std::make_shared<abc::NormalMeanModel>(1.0, 10);
  p.summary = std::make_shared<abc::MeanMap>();
  p.s_obs = Vector{{ybar}};
  p.kernel = DensityKernel(shape, abc::Matrix::Identity(1, 1), h);
  return p;
}

std::vector<double> posterior_frequencies(const abc::WeightedSample& s) {
  std::vector<double> f(5, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    f[static_cast<std::size_t>(s.points[i][0]) - 1] += s.weights[i];
    total += s.weights[i];
  }
  for (double& x : f) x /= total;
  return f;
}

TEST(Importance, MatchesEnumeration) {
  const abc::DiscreteToyModel toy;
  for (int y : {1, 3}) {
    const auto r = abc::abc_importance(toy_problem(y, 0.5), 100000, {1, 0, "toy"});
    const auto f = posterior_frequencies(r.sample);
    const Vector exact = toy.exact_posterior(y);
    for (int k = 0; k < 5; ++k) {
      const double se = std::sqrt(exact[k] * (1 - exact[k]) / double(r.accepted));
      EXPECT_NEAR(f[static_cast<std::size_t>(k)], exact[k], 3 * se) << "y=" << y << " theta=" << k + 1;
    }
  }
}

TEST(Importance, RejectionModeHasUnitWeights) {
  const auto r = abc::abc_importance(normal_mean_problem(0.3, 0.2), 5000, {2, 0, "rej"});
  ASSERT_GT(r.accepted, 0u);
  for (double w : r.sample.weights) EXPECT_EQ(w, 1.0);
  EXPECT_EQ(r.proposals, 5000u);
  EXPECT_EQ(r.sample.size(), r.accepted);
}

TEST(Importance, HugeBandwidthReturnsPrior) {
  AbcProblem p = normal_mean_problem(0.3, 1e9);
  const auto r = abc::abc_importance(p, 20000, {3, 0, "wide"});
  EXPECT_EQ(r.accepted, 20000u);
  const Vector m = abc::weighted_mean(r.sample);
  EXPECT_NEAR(m[0], 0.0, 3 / std::sqrt(20000.0));
}

TEST(Importance, ThreadCountDoesNotChangeResult) {
  const AbcProblem p = normal_mean_problem(0.3, 0.3, abc::KernelShape::Gaussian);
  const auto a = abc::abc_importance(p, 5000, {4, 1, "det"});
  const auto b = abc::abc_importance(p, 5000, {4, 4, "det"});
  ASSERT_EQ(a.sample.size(), b.sample.size());
  for (std::size_t i = 0; i < a.sample.size(); ++i) {
    EXPECT_EQ(a.sample.points[i], b.sample.points[i]);
    EXPECT_EQ(a.sample.weights[i], b.sample.weights[i]);
  }
}

// With an importance proposal the weights carry pi / g; the posterior mean
// still matches the conjugate one at small h.
TEST(Importance, GaussianProposalIsUnbiased) {
  const abc::NormalMeanModel model(1.0, 10);
  const AbcProblem p = normal_mean_problem(1.0, 0.05);
  const abc::GaussianProposal g(Vector{{model.posterior_mean(1.0)}}, abc::Matrix::Constant(1, 1, 0.2));
  const auto r = abc::abc_importance(p, 100000, {5, 0, "is"}, &g);
  const double ess = abc::effective_sample_size(r.sample);
  EXPECT_NEAR(abc::weighted_mean(r.sample)[0], model.posterior_mean(1.0),
              3 * std::sqrt(model.posterior_var() / ess) + 0.002);
}

// Errors in the posterior mean shrink with h: each smaller bandwidth beats
// the next larger one in at least 80 of 100 runs.
TEST(Importance, ErrorDecreasesWithBandwidth) {
  const abc::NormalMeanModel model(1.0, 10);
  const double ybar = 2.5;
  const double exact = model.posterior_mean(ybar);
  const abc::GaussianProposal g(Vector{{exact}}, abc::Matrix::Constant(1, 1, 2 * model.posterior_var()));
  const std::vector<double> hs{1.0, 0.3, 0.1, 0.03};
  std::vector<int> wins(hs.size() - 1, 0);
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    std::vector<double> err;
    for (double h : hs) {
      const auto r = abc::abc_importance(normal_mean_problem(ybar, h, abc::KernelShape::Gaussian), 50000,
                                         {abc::derive_seed(6, "rep", rep), 0, "h"}, &g);
      err.push_back(std::abs(abc::weighted_mean(r.sample)[0] - exact));
    }
    for (std::size_t k = 0; k + 1 < hs.size(); ++k) wins[k] += err[k + 1] < err[k];
  }
  for (int w : wins) EXPECT_GE(w, 80);
}

TEST(Mcmc, MatchesEnumeration) {
  const abc::DiscreteToyModel toy;
  abc::McmcConfig c;
  c.length = 1000000;
  c.theta0 = Vector{{3.0}};
  c.integer_lattice = true;
  const auto r = abc::abc_mcmc(toy_problem(2, 0.5), c, {7, 1, "chain"});
  const Vector exact = toy.exact_posterior(2);
  // Batch means standard error over 100 batches.
  const std::size_t n = r.sample.size();
  const std::size_t batch = n / 100;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> means;
    for (std::size_t b = 0; b < 100; ++b) {
      double hits = 0;
      for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) hits += r.sample.points[i][0] == k + 1;
      means.push_back(hits / batch);
    }
    double m = 0, ss = 0;
    for (double x : means) m += x;
    m /= 100;
    for (double x : means) ss += (x - m) * (x - m);
    const double se = std::sqrt(ss / 99 / 100);
    EXPECT_NEAR(m, exact[k], 3 * se + 1e-3) << "theta=" << k + 1;
  }
}

// A flat prior, symmetric proposal and a kernel accepting everything give
// Metropolis-Hastings ratio one.
TEST(Mcmc, RatioOfOnesAlwaysAccepts) {
  AbcProblem p;
  p.model = std::make_shared<abc::NormalVarianceModel>(5);
  p.summary = std::make_shared<abc::MeanMap>();
  p.s_obs = Vector{{0.0}};
  p.kernel = DensityKernel::uniform(1, 1e9);
  abc::McmcConfig c;
  c.length = 2000;
  c.theta0 = Vector{{1.0}};
  c.proposal_cov = abc::Matrix::Constant(1, 1, 1e-14);
  const auto r = abc::abc_mcmc(p, c, {8, 1, "flat"});
  EXPECT_EQ(r.accepted_moves, r.steps);
  for (const Vector& x : r.sample.points) EXPECT_NEAR(x[0], 1.0, 1e-5);
}

/// Counts simulator calls; the engines may use nothing else.
class CountingModel : public abc::NormalMeanModel {
 public:
  CountingModel() : NormalMeanModel(1.0, 10) {}
  std::optional<abc::Dataset> simulate(const Vector& theta, abc::RngStream& rng) const override {
    ++calls;
    return NormalMeanModel::simulate(theta, rng);
  }
  mutable std::atomic<std::size_t> calls{0};
};

TEST(Mcmc, OnlySimulatesThroughTheModel) {
  auto model = std::make_shared<CountingModel>();
  AbcProblem p = normal_mean_problem(0.5, 0.3);
  p.model = model;
  abc::McmcConfig c;
  c.length = 3000;
  c.theta0 = Vector{{0.4}};
  c.proposal_cov = abc::Matrix::Constant(1, 1, 0.04);
  const auto r = abc::abc_mcmc(p, c, {9, 1, "count"});
  EXPECT_EQ(model->calls.load(), r.simulations);
  EXPECT_GE(r.simulations, c.length);
}

TEST(Mcmc, FailsWithoutStartingMatch) {
  abc::McmcConfig c;
  c.length = 10;
  c.theta0 = Vector{{0.0}};
  c.proposal_cov = abc::Matrix::Constant(1, 1, 0.1);
  c.init_attempts = 100;
  EXPECT_THROW(abc::abc_mcmc(normal_mean_problem(50.0, 0.01), c, {1, 1, "x"}), abc::Error);
}

TEST(Mcmc, DeterministicForSeed) {
  abc::McmcConfig c;
  c.length = 2000;
  c.theta0 = Vector{{0.4}};
  c.proposal_cov = abc::Matrix::Constant(1, 1, 0.04);
  const auto a = abc::abc_mcmc(normal_mean_problem(0.5, 0.3), c, {10, 1, "d"});
  const auto b = abc::abc_mcmc(normal_mean_problem(0.5, 0.3), c, {10, 4, "d"});
  EXPECT_EQ(a.sample.points, b.sample.points);
}

TEST(Noisy, ZeroBandwidthLeavesObservation) {
  abc::RngStream rng(1, 0);
  const auto n = abc::make_noisy(normal_mean_problem(0.7, 0.0), rng);
  EXPECT_EQ(n.problem.s_obs[0], 0.7);
  EXPECT_EQ(n.perturbation[0], 0.0);
}

TEST(Noisy, UniformPerturbationInsideBandwidth) {
  double sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    abc::RngStream rng(2, static_cast<std::uint64_t>(i));
    const auto noisy = abc::make_noisy(normal_mean_problem(0.7, 0.25), rng);
    ASSERT_LT(std::abs(noisy.perturbation[0]), 0.25);
    EXPECT_EQ(noisy.original[0], 0.7);
    EXPECT_DOUBLE_EQ(noisy.problem.s_obs[0], 0.7 + noisy.perturbation[0]);
    sum += noisy.perturbation[0];
  }
  // Uniform on (-h, h): sd h / sqrt(3). Four standard errors keeps the
  // false-alarm rate near 1e-4 across seeds.
  EXPECT_NEAR(sum / n, 0.0, 4 * 0.25 / std::sqrt(3.0 * n));
}

TEST(Bandwidth, AcceptAll) {
  const auto t = abc::tune_bandwidth(normal_mean_problem(0.0, 1.0), 1.0, 2000, {1, 0, "tune"});
  const auto r = abc::abc_importance(normal_mean_problem(0.0, t.bandwidth), 2000, {1, 0, "tune"});
  EXPECT_EQ(r.accepted, 2000u);
}

TEST(Bandwidth, AllDistancesZero) {
  const auto t = abc::bandwidth_from_distances(std::vector<double>(50, 0.0), abc::KernelShape::UniformEllipsoid, 0.1);
  EXPECT_TRUE(t.degenerate);
  EXPECT_GT(t.bandwidth, 0.0);
  EXPECT_EQ(t.bandwidth, std::numeric_limits<double>::denorm_min());
}

TEST(Bandwidth, QuantileOfDistances) {
  std::vector<double> d;
  for (int i = 1; i <= 100; ++i) d.push_back(i);
  const auto t = abc::bandwidth_from_distances(d, abc::KernelShape::UniformEllipsoid, 0.1);
  // Ten of the hundred distances must be strictly inside.
  int inside = 0;
  for (double x : d) inside += x < t.bandwidth;
  EXPECT_EQ(inside, 10);
}

TEST(Bandwidth, FreshRunHitsTarget) {
  for (auto shape : {abc::KernelShape::UniformEllipsoid, abc::KernelShape::Gaussian}) {
    const auto t = abc::tune_bandwidth(normal_mean_problem(0.4, 1.0, shape), 0.01, 100000, {2, 0, "tune"});
    const auto r = abc::abc_importance(normal_mean_problem(0.4, t.bandwidth, shape), 100000, {3, 0, "fresh"});
    const double rate = shape == abc::KernelShape::Gaussian
                            ? [&] {
                                double s = 0;
                                for (double k : r.kernel_values) s += k;
                                return s / 100000;
                              }()
                            : r.acceptance_rate();
    EXPECT_GE(rate, 0.005);
    EXPECT_LE(rate, 0.02);
  }
}

TEST(QuantileRejection, KeepsRequestedFraction) {
  const auto r = abc::abc_rejection_quantile(normal_mean_problem(0.4, 1.0), 10000, 0.01, {4, 0, "q"});
  EXPECT_EQ(r.result.accepted, 100u);
  EXPECT_GT(r.bandwidth, 0.0);
}

TEST(TruncatedPrior, FullBoxEqualsPrior) {
  const abc::BoxUniformPrior prior(Vector{{0.0, 0.0}}, Vector{{1.0, 2.0}});
  const abc::TruncatedPriorSampler s(prior, abc::TrainingRegion{Vector{{0.0, 0.0}}, Vector{{1.0, 2.0}}});
  abc::RngStream rng(1, 0);
  Vector m = Vector::Zero(2);
  const int n = 20000;
  for (int i = 0; i < n; ++i) m += s.draw(rng);
  m /= n;
  EXPECT_NEAR(m[0], 0.5, 3 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(m[1], 1.0, 3 * std::sqrt(4.0 / 12 / n));
}

TEST(Problem, DimensionMismatchIsRejected) {
  AbcProblem p = normal_mean_problem(0.4, 1.0);
  p.kernel = DensityKernel::uniform(2);
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
