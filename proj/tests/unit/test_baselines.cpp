#include "abc/baselines.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace {

using abc::Vector;

abc::WeightedSample linear_sample(double slope, int n) {
  abc::WeightedSample s;
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + 2.0 * i / (n - 1);
    s.push_back(Vector{{0.7 + slope * x}}, 1.0, Vector{{x}});
  }
  return s;
}

TEST(Beaumont, ZeroSlopeLeavesDrawsUnchanged) {
  const auto s = linear_sample(0.0, 40);
  const auto c = abc::beaumont_correct(s, Vector{{0.3}});
  ASSERT_TRUE(c.applied);
  EXPECT_NEAR(c.slopes(0, 0), 0.0, 1e-12);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(c.sample.points[i][0], 0.7, 1e-12);
}

TEST(Beaumont, ExactLinearRelationCollapsesToObserved) {
  abc::WeightedSample s;
  for (int i = 0; i < 40; ++i) {
    const double x = 0.05 * i;
    s.push_back(Vector{{x}}, 1.0 + 0.01 * i, Vector{{x}});
  }
  const auto c = abc::beaumont_correct(s, Vector{{0.9}});
  ASSERT_TRUE(c.applied);
  for (const Vector& th : c.sample.points) EXPECT_NEAR(th[0], 0.9, 1e-10);
}

TEST(Beaumont, TooFewAcceptancesNotApplied) {
  const auto s = linear_sample(1.0, 15);
  const auto c = abc::beaumont_correct(s, Vector{{0.0}});
  EXPECT_FALSE(c.applied);
  EXPECT_FALSE(c.warning.empty());
  EXPECT_EQ(c.sample.points, s.points);
}

// With a wide acceptance window the corrected mean should usually be closer
// to the exact conjugate posterior mean than the raw ABC mean.
TEST(Beaumont, ImprovesWideWindowEstimates) {
  const auto model = std::make_shared<abc::NormalMeanModel>(1.0, 10);
  int wins = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    abc::RngStream rng(50, static_cast<std::uint64_t>(r));
    const double truth = rng.normal();
    const abc::Dataset obs = *model->simulate(Vector{{truth}}, rng);
    abc::AbcProblem p;
    p.model = model;
    p.summary = std::make_shared<abc::MeanMap>();
    p.s_obs = p.summary->apply(obs);
    const auto run = abc::abc_rejection_quantile(p, 4000, 0.5, {static_cast<std::uint64_t>(r), 1, "beaumont"});
    const double exact = model->posterior_mean(p.s_obs[0]);
    const auto c = abc::beaumont_correct(run.result.sample, p.s_obs);
    ASSERT_TRUE(c.applied);
    const double raw = abc::weighted_mean(run.result.sample)[0];
    const double adj = abc::weighted_mean(c.sample)[0];
    if (std::abs(adj - exact) < std::abs(raw - exact)) ++wins;
  }
  EXPECT_GE(wins, 80);
}

TEST(SyntheticLoglik, MatchesGaussianDensity) {
  std::vector<Vector> sims{Vector{{1.0}}, Vector{{2.0}}, Vector{{3.0}}, Vector{{4.0}}, Vector{{6.0}}};
  // Mean 3.2, unbiased variance 3.7, plus the 1e-8 trace / d ridge.
  const double v = 3.7 * (1 + 1e-8);
  const double expected = -0.5 * (std::log(2 * std::numbers::pi * v) + 1.2 * 1.2 / v);
  EXPECT_NEAR(abc::synthetic_loglik(sims, Vector{{2.0}}), expected, 1e-12);
}

TEST(SyntheticLoglik, NeedsMoreThanDPlusTwo) {
  std::vector<Vector> sims(4, Vector{{1.0, 2.0}});
  EXPECT_THROW(abc::synthetic_loglik(sims, Vector{{1.0, 2.0}}), std::invalid_argument);
}

TEST(SyntheticLoglik, ConstantReplicatesStayFinite) {
  std::vector<Vector> sims(10, Vector{{1.0, 2.0}});
  EXPECT_TRUE(std::isfinite(abc::synthetic_loglik(sims, Vector{{1.0, 2.0}})));
}

TEST(SyntheticLoglik, OrderInvariant) {
  abc::RngStream rng(1, 0);
  std::vector<Vector> sims;
  for (int i = 0; i < 30; ++i) sims.push_back(Vector{{rng.normal(), rng.normal(), rng.exponential(1.0)}});
  const Vector obs{{0.1, -0.2, 0.8}};
  const double a = abc::synthetic_loglik(sims, obs);
  std::reverse(sims.begin(), sims.end());
  std::swap(sims[3], sims[17]);
  EXPECT_EQ(abc::synthetic_loglik(sims, obs), a);
}

// The sample mean is exactly Gaussian, so synthetic likelihood targets the
// conjugate posterior up to covariance estimation noise.
TEST(SyntheticLikelihood, NormalMeanPosterior) {
  const auto model = std::make_shared<abc::NormalMeanModel>(1.0, 10);
  abc::AbcProblem p;
  p.model = model;
  p.summary = std::make_shared<abc::MeanMap>();
  p.s_obs = Vector{{0.6}};
  abc::SyntheticLikelihoodConfig c;
  c.replicates = 100;
  c.length = 20000;
  c.proposal_cov = abc::Matrix::Constant(1, 1, 0.1);
  c.theta0 = Vector{{0.0}};
  const auto r = abc::synthetic_likelihood_mcmc(p, c, {3, 1, "synthlik"});
  // The starting point is evaluated once before the first move.
  EXPECT_EQ(r.simulations, (c.length + 1) * c.replicates);
  const auto post = abc::posterior_summaries(r.sample);
  const double sd = std::sqrt(model->posterior_var());
  EXPECT_NEAR(post.mean[0], model->posterior_mean(0.6), 0.1 * sd);
  EXPECT_NEAR(std::sqrt(post.covariance(0, 0)), sd, 0.1 * sd);
}

TEST(NelderMead, FindsQuadraticMinimum) {
  const auto f = [](const Vector& x) { return std::pow(x[0] - 1.0, 2) + 10 * std::pow(x[1] + 2.0, 2) + 3.0; };
  const auto r = abc::nelder_mead(f, Vector{{0.0, 0.0}}, Vector{{0.5, 0.5}});
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.flat);
  EXPECT_NEAR(r.x[0], 1.0, 1e-3);
  EXPECT_NEAR(r.x[1], -2.0, 1e-3);
  EXPECT_NEAR(r.value, 3.0, 1e-7);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
}

TEST(NelderMead, FlatObjectiveFlagged) {
  const auto r = abc::nelder_mead([](const Vector&) { return 2.0; }, Vector{{0.0, 0.0}}, Vector{{1.0, 1.0}});
  EXPECT_TRUE(r.flat);
}

TEST(NelderMead, NonFiniteTreatedAsInfinity) {
  const auto f = [](const Vector& x) { return x[0] < 0 ? std::nan("") : (x[0] - 2) * (x[0] - 2); };
  const auto r = abc::nelder_mead(f, Vector{{0.5}}, Vector{{1.0}});
  EXPECT_NEAR(r.x[0], 2.0, 1e-3);
}

TEST(IndirectInference, NormalMeanRecoversSampleMean) {
  const abc::NormalMeanModel model(1.0, 10);
  abc::Dataset obs;
  obs.values = {0.2, 1.1, -0.3, 0.9, 0.4, 1.6, 0.0, 0.7, 0.5, 0.9};
  abc::IndirectConfig c;
  c.theta0 = Vector{{0.0}};
  const auto r = abc::indirect_inference(model, std::make_shared<abc::MeanMap>(), obs, c, {4, 1, "ii"});
  EXPECT_TRUE(r.converged);
  // Common random numbers leave the replicate-mean noise, sd 1 / sqrt(10 * 50).
  EXPECT_NEAR(r.estimate[0], 0.6, 3 / std::sqrt(500.0));
  EXPECT_EQ(r.simulations % c.replicates, 0u);
}

class ConstantMap : public abc::SummaryMap {
 public:
  std::string name() const override { return "constant"; }
  int dim() const override { return 1; }
  Vector apply(const abc::Dataset&) const override { return Vector{{1.0}}; }
};

TEST(IndirectInference, UninformativeAuxiliaryIsFlat) {
  const abc::NormalMeanModel model(1.0, 10);
  abc::Dataset obs;
  obs.values.assign(10, 0.5);
  abc::IndirectConfig c;
  c.theta0 = Vector{{0.0}};
  const auto r = abc::indirect_inference(model, std::make_shared<ConstantMap>(), obs, c, {5, 1, "ii"});
  EXPECT_TRUE(r.flat);
  EXPECT_FALSE(r.converged);
}

TEST(Mg1Auxiliary, MeanMinMax) {
  abc::Dataset d;
  d.values = {2.0, 0.5, 3.0, 1.5};
  const Vector a = abc::Mg1AuxiliaryMap().apply(d);
  EXPECT_EQ(a, (Vector{{1.75, 0.5, 3.0}}));
}

TEST(Mg1Auxiliary, SteadyStateMleIsUsed) {
  const abc::Mg1Model model(200);
  abc::RngStream rng(6, 0);
  const abc::Dataset d = *model.simulate(Vector{{1.0, 4.0, 0.2}}, rng);
  const double t2 = abc::mg1_steady_state_theta2(d.values);
  const double y_min = *std::min_element(d.values.begin(), d.values.end());
  EXPECT_GT(t2, 0.0);
  EXPECT_TRUE(std::isfinite(t2));
  // theta2 bounds the service time from above and theta1 <= min y.
  EXPECT_GT(t2, 0.5 * y_min);
  EXPECT_EQ(abc::Mg1AuxiliaryMap(true).apply(d)[2], t2);
}

}  // namespace
