#include "abc/models.hpp"
#include "abc/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace {

using abc::Vector;

double mean_of(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double sd_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / (x.size() - 1));
}

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

// ---------------------------------------------------------------------------
// g-and-k

TEST(GkInverseCdf, MedianIsLocation) {
  for (double a : {-2.0, 0.0, 3.0})
    EXPECT_DOUBLE_EQ(abc::gk_inverse_cdf(0.5, {a, 1.7, 2.0, 0.5}), a);
}

TEST(GkInverseCdf, ReducesToNormal) {
  for (double u : {0.01, 0.3, 0.9}) {
    const double z = abc::normal_quantile(u);
    EXPECT_NEAR(abc::gk_inverse_cdf(u, {1.0, 2.0, 0.0, 0.0}), 1.0 + 2.0 * z, 1e-14);
  }
}

// Reference value from a 40-digit evaluation of the closed form.
TEST(GkInverseCdf, HighPrecisionReference) {
  EXPECT_NEAR(abc::gk_inverse_cdf(0.8413, {3.0, 1.0, 2.0, 0.5}), 5.2751399615502564867, 1e-12);
}

TEST(GkInverseCdf, Monotone) {
  double prev = -INFINITY;
  for (int i = 1; i < 1000; ++i) {
    const double x = abc::gk_inverse_cdf(i / 1000.0, {3.0, 1.0, 2.0, 0.5});
    ASSERT_GT(x, prev);
    prev = x;
  }
}

TEST(GkOrderStats, EvenlySpacedRanks) {
  EXPECT_EQ(abc::evenly_spaced_ranks(3, 3), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(abc::evenly_spaced_ranks(1, 99), (std::vector<std::size_t>{50}));
  const auto r = abc::evenly_spaced_ranks(100, 1000);
  // floor(j (n + 1) / (m + 1)).
  EXPECT_EQ(r.front(), 9u);
  EXPECT_EQ(r.back(), 991u);
}

TEST(GkOrderStats, SingleDrawIsQuantileOfUniform) {
  abc::RngStream rng(1, 0);
  std::vector<double> u;
  for (int i = 0; i < 5000; ++i) u.push_back(abc::gk_simulate_order_stats({0, 1, 0, 0}, 1, 1, rng)[0]);
  // With g = k = 0, A = 0, B = 1 a single draw is standard normal.
  std::vector<double> p;
  for (double x : u) p.push_back(abc::normal_cdf(x));
  std::vector<double> ref(5000);
  for (int i = 0; i < 5000; ++i) ref[i] = (i + 0.5) / 5000;
  EXPECT_LT(ks_statistic(p, ref), 1.63 * std::sqrt(2.0 / 5000));
}

TEST(GkOrderStats, AlwaysSorted) {
  abc::RngStream rng(2, 0);
  for (int t = 0; t < 1000; ++t) {
    const auto x = abc::gk_simulate_order_stats({0, 1, 0, 0}, 3, 3, rng);
    ASSERT_TRUE(std::is_sorted(x.begin(), x.end()));
  }
  const auto big = abc::gk_simulate_order_stats({3, 1, 2, 0.5}, 100, 1000, rng);
  EXPECT_EQ(big.size(), 100u);
  EXPECT_TRUE(std::is_sorted(big.begin(), big.end()));
}

// Spacings-method order statistics against sorting n uniforms: per-rank
// two-sample KS at the 1% level over 2000 replicates.
TEST(GkOrderStats, SpacingsMatchSorting) {
  const std::size_t n = 1000, m = 50, reps = 2000;
  const auto ranks = abc::evenly_spaced_ranks(m, n);
  abc::RngStream fast(3, 0);
  std::mt19937_64 slow(12345);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> a(m), b(m);
  std::vector<double> u(n);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto x = abc::uniform_order_stats(ranks, n, fast);
    for (double& v : u) v = unif(slow);
    std::sort(u.begin(), u.end());
    for (std::size_t j = 0; j < m; ++j) {
      a[j].push_back(x[j]);
      b[j].push_back(u[ranks[j] - 1]);
    }
  }
  const double critical = 1.628 * std::sqrt(2.0 / reps);
  int exceed = 0;
  for (std::size_t j = 0; j < m; ++j) exceed += ks_statistic(a[j], b[j]) > critical;
  // Each rank exceeds with probability 1%; a handful is expected by chance.
  EXPECT_LE(exceed, 4);
  EXPECT_LT(ks_statistic(a[m / 2], b[m / 2]), critical);
}

// ---------------------------------------------------------------------------
// Lotka-Volterra

TEST(LotkaVolterra, ExtinctStateIsAbsorbing) {
  abc::RngStream rng(1, 0);
  const auto r = abc::lv_gillespie(Vector{{0.5, 0.0025, 0.3}}, {0, 0}, {0.0, 1.0, 5.0}, rng);
  for (const auto& s : r.states) {
    EXPECT_EQ(s.prey, 0);
    EXPECT_EQ(s.predator, 0);
  }
  EXPECT_EQ(r.events, 0u);
}

// Total rate 50 + 25 + 30 = 105, so P(no event by t = 1/105) = e^{-1}.
TEST(LotkaVolterra, FirstEventIsExponential) {
  const Vector theta{{0.5, 0.0025, 0.3}};
  const int n = 100000;
  int quiet = 0;
  for (int i = 0; i < n; ++i) {
    abc::RngStream rng(9, static_cast<std::uint64_t>(i));
    quiet += abc::lv_gillespie(theta, {100, 100}, {1.0 / 105.0}, rng).events == 0;
  }
  const double p = std::exp(-1.0);
  EXPECT_NEAR(double(quiet) / n, p, 3 * std::sqrt(p * (1 - p) / n));
}

TEST(LotkaVolterra, NoPredatorsMeansOnlyBirths) {
  abc::RngStream rng(1, 0);
  const auto r = abc::lv_gillespie(Vector{{0.5, 0.0025, 7.0}}, {1, 0}, {1.0, 2.0, 3.0}, rng);
  std::int64_t prev = 1;
  for (const auto& s : r.states) {
    EXPECT_EQ(s.predator, 0);
    EXPECT_GE(s.prey, prev);
    prev = s.prey;
  }
}

TEST(LotkaVolterra, EventCapFlagsOverflow) {
  abc::RngStream rng(1, 0);
  const auto r = abc::lv_gillespie(Vector{{5.0, 0.00025, 0.03}}, {100, 100}, {100.0}, rng, 1000);
  EXPECT_TRUE(r.overflow);
}

TEST(LotkaVolterra, ModelSequenceShape) {
  const abc::LotkaVolterraModel model({100, 100}, 0.1, 5);
  abc::RngStream rng(4, 0);
  const auto data = model.simulate(Vector{{0.5, 0.0025, 0.3}}, rng);
  ASSERT_TRUE(data);
  EXPECT_EQ(data->rows(), 6u);
  const abc::StateSequence seq = model.to_sequence(*data);
  EXPECT_EQ(seq.observations.size(), 5u);
  EXPECT_EQ(seq.initial[0], 100.0);
  for (double dt : seq.intervals) EXPECT_NEAR(dt, 0.1, 1e-12);
}

// ---------------------------------------------------------------------------
// Ricker

TEST(Ricker, FixedPointAtLogROne) {
  abc::RngStream rng(1, 0);
  const auto r = abc::ricker_simulate(Vector{{1.0, 0.0, 10.0}}, rng);
  ASSERT_EQ(r.latent.size(), 50u);
  for (double n : r.latent) EXPECT_NEAR(n, 1.0, 1e-12);
  EXPECT_NEAR(mean_of(r.counts), 10.0, 4 * std::sqrt(10.0 / 50));
}

TEST(Ricker, ZeroPhiGivesZeroCounts) {
  abc::RngStream rng(1, 0);
  for (double c : abc::ricker_simulate(Vector{{3.8, 0.3, 0.0}}, rng).counts) EXPECT_EQ(c, 0.0);
}

TEST(Ricker, DeterministicPathMatchesScalarIteration) {
  abc::RngStream rng(1, 0);
  const auto r = abc::ricker_simulate(Vector{{std::log(2.0), 0.0, 5.0}}, rng);
  double n = 1.0;
  std::vector<double> expected;
  for (int t = 1; t <= 100; ++t) {
    n = 2.0 * n * std::exp(-n);
    if (t > 50) expected.push_back(n);
  }
  for (std::size_t t = 0; t < 50; ++t) EXPECT_NEAR(r.latent[t], expected[t], 1e-12);
}

TEST(Ricker, DiscardRule) {
  const abc::RickerModel model;
  abc::Dataset d;
  d.values.assign(50, 1.0);
  std::fill(d.values.begin(), d.values.begin() + 44, 0.0);
  EXPECT_FALSE(model.discard(d));
  d.values[44] = 0.0;
  EXPECT_TRUE(model.discard(d));
}

TEST(Ricker, PriorIsImproper) {
  const abc::RickerModel model;
  EXPECT_FALSE(model.prior().proper());
  EXPECT_TRUE(std::isfinite(model.prior().log_density(Vector{{3.8, 0.3, 10.0}})));
  EXPECT_FALSE(std::isfinite(model.prior().log_density(Vector{{3.8, 1.5, 10.0}})));
}

// ---------------------------------------------------------------------------
// M/G/1

TEST(Mg1, SaturatedQueueGivesServiceTimes) {
  abc::RngStream rng(1, 0);
  const auto y = abc::mg1_simulate(Vector{{1.0, 3.0, 1e9}}, 20000, rng);
  for (double v : y) {
    ASSERT_GE(v, 1.0);
    ASSERT_LE(v, 3.0 + 1e-6);
  }
  EXPECT_NEAR(mean_of(y), 2.0, 4 * std::sqrt(1.0 / 3.0 / 20000));
}

TEST(Mg1, FirstDepartureIsArrivalPlusService) {
  const int n = 20000;
  std::vector<double> waits;
  for (int i = 0; i < n; ++i) {
    abc::RngStream rng(5, static_cast<std::uint64_t>(i));
    const auto y = abc::mg1_simulate(Vector{{2.0, 2.0, 0.5}}, 1, rng);
    ASSERT_GE(y[0], 2.0);
    waits.push_back(y[0] - 2.0);
  }
  EXPECT_NEAR(mean_of(waits), 2.0, 3 * 2.0 / std::sqrt(n));
}

// Mean inter-departure time against an independently coded Lindley
// recursion; for a stable queue it is close to the mean arrival gap 5.
TEST(Mg1, MeanMatchesLindleyRecursion) {
  const Vector theta{{1.0, 2.0, 0.2}};
  const int reps = 10000;
  std::vector<double> ours, ref;
  std::mt19937_64 gen(77);
  std::exponential_distribution<double> arrival(0.2);
  std::uniform_real_distribution<double> service(1.0, 2.0);
  for (int r = 0; r < reps; ++r) {
    abc::RngStream rng(6, static_cast<std::uint64_t>(r));
    ours.push_back(mean_of(abc::mg1_simulate(theta, 50, rng)));
    double a = 0, wait = 0, last_service = 0, last_arrival_gap = 0, depart = 0;
    for (int i = 0; i < 50; ++i) {
      last_arrival_gap = arrival(gen);
      a += last_arrival_gap;
      wait = i == 0 ? 0.0 : std::max(0.0, wait + last_service - last_arrival_gap);
      last_service = service(gen);
      depart = a + wait + last_service;
    }
    ref.push_back(depart / 50);
  }
  const double se = std::sqrt(std::pow(sd_of(ours), 2) / reps + std::pow(sd_of(ref), 2) / reps);
  EXPECT_NEAR(mean_of(ours), mean_of(ref), 3 * se);
  EXPECT_NEAR(mean_of(ours), 5.0, 0.1);
}

TEST(Mg1, PriorSupport) {
  const abc::Mg1Model model;
  EXPECT_TRUE(std::isfinite(model.prior().log_density(Vector{{1.0, 5.0, 0.2}})));
  EXPECT_FALSE(std::isfinite(model.prior().log_density(Vector{{5.0, 1.0, 0.2}})));
  EXPECT_FALSE(std::isfinite(model.prior().log_density(Vector{{1.0, 5.0, 0.4}})));
  abc::RngStream rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vector t = model.prior().sample(rng);
    ASSERT_LE(t[0], t[1]);
    ASSERT_TRUE(std::isfinite(model.prior().log_density(t)));
  }
}

// ---------------------------------------------------------------------------
// Tuberculosis

TEST(Tb, NoMutationGivesOneCluster) {
  abc::RngStream rng(1, 0);
  const auto r = abc::tb_simulate(Vector{{0.6, 0.4}}, 200, 50, rng);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0], 50);
}

// Between births every bacterium mutates many times, so usually only the
// final birth leaves two bacteria sharing a genotype. The pair from the
// previous birth survives unmutated with probability about
// p / (1 - (1 - p)(1 - 2/19)) = 0.088 for p = 0.01.
TEST(Tb, MutationDominatedGivesOnePair) {
  int one_pair = 0;
  for (int i = 0; i < 100; ++i) {
    abc::RngStream rng(2, static_cast<std::uint64_t>(i));
    one_pair += abc::tb_simulate(Vector{{0.01, 0.0}}, 20, 20, rng).clusters.size() == 19;
  }
  EXPECT_GE(one_pair, 82);
  EXPECT_LE(one_pair, 98);
}

// Reference from an independent cluster-size event loop: 4000 runs, mean
// 69.45525, sd 5.2325751.
TEST(Tb, ClusterCountMatchesReference) {
  const int runs = 500;
  std::vector<double> g;
  for (int i = 0; i < runs; ++i) {
    abc::RngStream rng(3, static_cast<std::uint64_t>(i));
    const auto r = abc::tb_simulate(Vector{{0.6, 0.2}}, 1000, 100, rng);
    ASSERT_FALSE(r.restart_cap_hit);
    g.push_back(static_cast<double>(r.clusters.size()));
  }
  const double se = std::sqrt(std::pow(sd_of(g), 2) / runs + std::pow(5.2325751, 2) / 4000);
  EXPECT_NEAR(mean_of(g), 69.45525, 3 * se);
}

TEST(Tb, SummariesOfExtremes) {
  const auto one = abc::tb_summaries({473});
  EXPECT_DOUBLE_EQ(one[0], 1.0 / 473);
  EXPECT_DOUBLE_EQ(one[1], 0.0);
  const auto singles = abc::tb_summaries(std::vector<std::int64_t>(473, 1));
  EXPECT_DOUBLE_EQ(singles[0], 1.0);
  EXPECT_NEAR(singles[1], 1.0 - 473.0 / (473.0 * 473.0), 1e-15);
}

TEST(Tb, ObservedData) {
  const auto clusters = abc::tb_observed_clusters();
  EXPECT_EQ(clusters.size(), 326u);
  EXPECT_EQ(std::accumulate(clusters.begin(), clusters.end(), std::int64_t{0}), 473);
  const auto s = abc::tb_summaries(clusters);
  EXPECT_NEAR(s[0], 326.0 / 473.0, 1e-15);
  EXPECT_NEAR(s[0], 0.689218, 5e-7);
  EXPECT_NEAR(s[1], 1.0 - 2411.0 / 223729.0, 1e-15);
  // The quoted six-digit value is truncated, not rounded.
  EXPECT_NEAR(s[1], 0.989223, 1e-6);
}

TEST(Tb, PriorConstraint) {
  const abc::TbModel model;
  abc::RngStream rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vector t = model.prior().sample(rng);
    ASSERT_GE(t[1], 0.0);
    ASSERT_LE(t[1], t[0]);
    ASSERT_LT(t[0] + t[1], 1.0);
  }
}

// ---------------------------------------------------------------------------
// Analytic models

TEST(NormalMean, ConjugatePosterior) {
  const abc::NormalMeanModel model(1.0, 1);
  EXPECT_EQ(model.posterior_mean(0.0), 0.0);
  EXPECT_DOUBLE_EQ(model.shrinkage(), 0.5);
  EXPECT_DOUBLE_EQ(model.posterior_var(), 0.5);
  const abc::NormalMeanModel ten(2.0, 10);
  EXPECT_DOUBLE_EQ(ten.shrinkage(), 20.0 / 21.0);
}

TEST(DiscreteToy, EnumerationPosterior) {
  const abc::DiscreteToyModel model;
  const abc::Matrix& t = model.transition();
  for (int y = 1; y <= 5; ++y) {
    const Vector post = model.exact_posterior(y);
    const double norm = t.col(y - 1).sum();
    for (int theta = 1; theta <= 5; ++theta) EXPECT_NEAR(post[theta - 1], t(theta - 1, y - 1) / norm, 1e-15);
  }
  for (int r = 0; r < 5; ++r) EXPECT_NEAR(t.row(r).sum(), 1.0, 1e-15);
}

TEST(DiscreteToy, SimulationFrequencies) {
  const abc::DiscreteToyModel model;
  abc::RngStream rng(1, 0);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<int>(model.simulate(Vector{{2.0}}, rng)->values[0]) - 1];
  for (int y = 0; y < 5; ++y) {
    const double p = model.transition()(1, y);
    EXPECT_NEAR(double(counts[y]) / n, p, 4 * std::sqrt(p * (1 - p) / n));
  }
}

TEST(NormalVariance, NoisyObservationVariance) {
  // y + N(0, tau) noise has variance sigma^2 + tau.
  const abc::NormalVarianceModel model(20000);
  abc::RngStream rng(1, 0);
  const auto y = model.simulate(Vector{{1.0}}, rng)->values;
  std::vector<double> noisy;
  for (double v : y) noisy.push_back(v + rng.normal(0.0, 0.5));
  EXPECT_NEAR(std::pow(sd_of(noisy), 2), 1.25, 4 * 1.25 * std::sqrt(2.0 / 20000));
}

TEST(Models, FactoryKnowsEveryId) {
  for (const std::string& id : abc::model_ids()) {
    const abc::ModelPtr m = abc::make_model(id);
    ASSERT_TRUE(m);
    abc::RngStream rng(1, 0);
    if (!m->prior().proper()) continue;
    const Vector theta = m->prior().sample(rng);
    EXPECT_TRUE(std::isfinite(m->prior().log_density(theta))) << id;
  }
  EXPECT_THROW(abc::make_model("nope"), std::invalid_argument);
}

TEST(Transforms, RoundTrip) {
  const std::vector<abc::Transform> t{abc::Transform::Log, abc::Transform::Identity};
  const Vector x{{2.5, -1.0}};
  const Vector back = abc::from_working(t, abc::to_working(t, x));
  EXPECT_NEAR(back[0], 2.5, 1e-15);
  EXPECT_EQ(back[1], -1.0);
  EXPECT_NEAR(abc::log_jacobian(t, x), std::log(2.5), 1e-15);
}

}  // namespace
