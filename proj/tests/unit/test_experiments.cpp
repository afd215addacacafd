#include "abc/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using abc::Vector;

/// Data are the parameter itself, so the identity estimator is exact.
class RevealingModel : public abc::Model {
 public:
  RevealingModel() : prior_(std::make_shared<abc::BoxUniformPrior>(Vector{{0.0, -1.0}}, Vector{{1.0, 1.0}})) {}
  std::string name() const override { return "revealing"; }
  std::vector<std::string> param_names() const override { return {"a", "b"}; }
  const abc::Prior& prior() const override { return *prior_; }
  abc::PriorPtr prior_ptr() const override { return prior_; }
  std::optional<abc::Dataset> simulate(const Vector& theta, abc::RngStream&) const override {
    abc::Dataset d;
    d.values = {theta[0], theta[1]};
    return d;
  }

 private:
  abc::PriorPtr prior_;
};

TEST(LossTable, ExactEstimatorHasZeroLoss) {
  const RevealingModel model;
  const auto exact = abc::single_method("exact", [](const abc::Dataset& d, const abc::RunOptions&) {
    return Vector{{d.values[0], d.values[1]}};
  });
  const auto t = abc::loss_table({exact}, model, 50, [&](abc::RngStream& rng) { return model.prior().sample(rng); },
                                 {1, 1, "loss"});
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row.mean_loss, 0.0);
    EXPECT_EQ(row.n_datasets, 50u);
    EXPECT_EQ(row.n_failures, 0u);
  }
}

TEST(LossTable, PriorMeanLossIsPriorVariance) {
  const abc::NormalMeanModel model(2.0, 5);
  const auto zero = abc::single_method("zero", [](const abc::Dataset&, const abc::RunOptions&) { return Vector{{0.0}}; });
  const std::size_t reps = 4000;
  const auto t = abc::loss_table({zero}, model, reps, [&](abc::RngStream& rng) { return model.prior().sample(rng); },
                                 {2, 0, "loss"});
  // theta^2 has mean 2 and sd 2 sqrt(2).
  EXPECT_NEAR(t.rows[0].mean_loss, 2.0, 3 * 2 * std::sqrt(2.0 / reps));
}

TEST(LossTable, FailuresAreCountedPerOutput) {
  const RevealingModel model;
  abc::LossMethod pair;
  pair.names = {"first", "second"};
  pair.estimate = [](const abc::Dataset& d, const abc::RunOptions&) -> std::vector<Vector> {
    if (d.values[0] < 0.5) throw abc::Error("refused");
    return {Vector{{d.values[0], d.values[1]}}, Vector{{0.0, 0.0}}};
  };
  const auto t = abc::loss_table({pair}, model, 40, [&](abc::RngStream& rng) { return model.prior().sample(rng); },
                                 {3, 1, "loss"});
  ASSERT_EQ(t.outputs, (std::vector<std::string>{"first", "second"}));
  ASSERT_EQ(t.rows.size(), 4u);
  std::size_t expected_fail = 0;
  for (const Vector& th : t.truths) expected_fail += th[0] < 0.5;
  for (const auto& row : t.rows) {
    EXPECT_EQ(row.n_failures, expected_fail);
    EXPECT_EQ(row.n_datasets + row.n_failures, 40u);
  }
  EXPECT_EQ(t.rows[0].mean_loss, 0.0);
}

TEST(LossTable, ThreadCountDoesNotChangeTable) {
  const abc::NormalMeanModel model(1.0, 5);
  const auto mean = abc::single_method("mean", [](const abc::Dataset& d, const abc::RunOptions& o) {
    abc::RngStream rng(o.seed, 0);
    return Vector{{d.values[0] + 0.1 * rng.normal()}};
  });
  const auto gen = [&](abc::RngStream& rng) { return model.prior().sample(rng); };
  const auto a = abc::loss_table({mean}, model, 30, gen, {4, 1, "loss"});
  const auto b = abc::loss_table({mean}, model, 30, gen, {4, 3, "loss"});
  EXPECT_EQ(a.rows[0].mean_loss, b.rows[0].mean_loss);
}

// An engine that ignores the data returns the prior, which is calibrated.
TEST(Calibration, PriorEngineIsCalibrated) {
  const abc::NormalMeanModel model(1.0, 5);
  const abc::PosteriorEngine prior_engine = [&](const abc::Dataset&, const abc::RunOptions& o) {
    abc::WeightedSample s;
    abc::RngStream rng(o.seed, 0);
    for (int i = 0; i < 2000; ++i) s.push_back(model.prior().sample(rng), 1.0);
    return s;
  };
  const auto c = abc::calibration_study(model, prior_engine, 0.9, 300, {5, 1, "cal"});
  EXPECT_EQ(c.replications, 300u);
  EXPECT_EQ(c.failures, 0u);
  EXPECT_TRUE(c.inside_band(0)) << c.frequency[0];
  EXPECT_LT(c.band_lower, 0.9);
  EXPECT_GT(c.band_upper, 0.9);
}

TEST(KernelMoment, UniformAndGaussian) {
  EXPECT_NEAR(abc::kernel_second_moment(abc::DensityKernel::uniform(1), abc::Matrix::Identity(1, 1)), 1.0 / 3, 1e-15);
  // Metric 4 is the interval [-1/2, 1/2].
  const abc::DensityKernel half(abc::KernelShape::UniformEllipsoid, abc::Matrix::Constant(1, 1, 4.0), 1.0);
  EXPECT_NEAR(abc::kernel_second_moment(half, abc::Matrix::Identity(1, 1)), 1.0 / 12, 1e-15);
  EXPECT_NEAR(abc::kernel_second_moment(abc::DensityKernel::uniform(3), abc::Matrix::Identity(3, 3)), 3.0 / 5, 1e-15);
  const abc::Matrix a = abc::Vector{{1.0, 2.0}}.asDiagonal();
  EXPECT_NEAR(abc::kernel_second_moment(abc::DensityKernel::gaussian(2), a), 3.0, 1e-15);
}

// Monte Carlo check of the closed form for the unit ball in 2-D.
TEST(KernelMoment, MatchesSampling) {
  const auto k = abc::DensityKernel::uniform(2);
  abc::RngStream rng(1, 0);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += abc::kernel_sample(k, rng).squaredNorm();
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(Expansion, ZeroBandwidthHasNoExcess) {
  abc::ExpansionConfig c;
  c.h_grid = {0.0};
  c.replications = 10;
  const auto rows = abc::loss_expansion_check(c, {1, 1, "exp"});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].predicted, 0.0);
  EXPECT_EQ(rows[0].noisy_excess, 0.0);
  EXPECT_EQ(rows[0].standard_excess, 0.0);
}

TEST(Dominance, PosteriorMeanNotBeaten) {
  abc::DominanceConfig c;
  c.replications = 200;
  c.proposals = 10000;
  const std::vector<abc::Competitor> competitors{{"zero", [](double) { return 0.0; }},
                                                 {"summary", [](double s) { return s; }},
                                                 {"double", [](double s) { return 2 * s; }}};
  const auto rows = abc::estimator_dominance_check(c, competitors, {2, 0, "dom"});
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) EXPECT_TRUE(row.abc_not_worse) << row.competitor;
  EXPECT_LT(rows[0].abc_loss, rows[0].competitor_loss);
}

TEST(Scaling, OneDimensionalSlopeIsOne) {
  abc::AbcProblem p;
  p.model = std::make_shared<abc::NormalMeanModel>(1.0, 10);
  p.summary = std::make_shared<abc::MeanMap>();
  p.s_obs = Vector{{0.3}};
  const auto r = abc::acceptance_scaling(p, {0.01, 0.02, 0.04, 0.08}, 200000, {3, 0, "scale"});
  ASSERT_EQ(r.acceptance.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_GT(r.acceptance[i], r.acceptance[i - 1]);
  EXPECT_NEAR(r.slope, 1.0, 0.1);
}

TEST(Scaling, NeedsTwoBandwidths) {
  abc::AbcProblem p;
  p.model = std::make_shared<abc::NormalMeanModel>(1.0, 10);
  p.summary = std::make_shared<abc::MeanMap>();
  p.s_obs = Vector{{0.3}};
  EXPECT_THROW(abc::acceptance_scaling(p, {0.1}, 100, {}), std::invalid_argument);
}

}  // namespace
