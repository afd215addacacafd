#include "abc/models.hpp"
#include "abc/summaries.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using abc::Dataset;
using abc::Vector;

Dataset data_of(std::vector<double> values) {
  Dataset d;
  d.values = std::move(values);
  return d;
}

TEST(Quantiles, ConstantDataset) {
  const abc::QuantileMap q(20);
  const Vector s = q.apply(data_of(std::vector<double>(50, 3.25)));
  ASSERT_EQ(s.size(), 20);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(s[i], 3.25);
}

TEST(Quantiles, IncludesMinAndMax) {
  const abc::QuantileMap q(5);
  const Vector s = q.apply(data_of({4, 0, 2, 1, 3}));
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[2], 2.0);
  EXPECT_EQ(s[4], 4.0);
}

TEST(Autocovariance, LagZeroIsVariance) {
  const std::vector<double> y{1, 4, 2, 8, 5, 7};
  double m = 0;
  for (double v : y) m += v;
  m /= y.size();
  double var = 0;
  for (double v : y) var += (v - m) * (v - m);
  EXPECT_NEAR(abc::autocovariance(y, 0), var / y.size(), 1e-14);
  EXPECT_THROW(abc::autocovariance(y, 6), std::invalid_argument);
}

// Reference values from an independent numpy implementation on two fixed
// 50-point Ricker series.
TEST(WoodStatistics, MatchReference) {
  const std::vector<double> y{0,  36, 43, 34,  37, 54, 30, 36, 36, 74,  3,   113, 0,  1,  72, 5,  157,
                              0,  0,  4,  156, 0,  0,  4,  80, 1,  47,  24,  99,  0,  10, 145, 0,  0,
                              5,  55, 4,  207, 0,  0,  0,  22, 51, 10,  188, 0,   0,  0,  6,  104};
  const std::vector<double> obs{10, 266, 0, 0,  0,  0,  0,   3,  121, 0,  0, 9,  151, 0,  0,  6,  109,
                                0,  3,   130, 0, 1,  42, 73,  1,  33,  48, 18, 111, 0,  0,  26, 81, 4,
                                95, 0,   40, 97, 0,  7,  130, 0,  0,   31, 97, 0,   12, 122, 0, 3};
  const std::vector<double> expected{2873.6563999999994,
                                     -951.1924720000002,
                                     -232.95574400000004,
                                     -537.7378160000001,
                                     76.06931199999997,
                                     -6.8599600000000285,
                                     1.4519387421293237,
                                     1.0252159894777269,
                                     5.2599305460535415e-05,
                                     -2.8958025443166038e-06,
                                     3.3843135479709163,
                                     -0.7626735122230839,
                                     39.06,
                                     15.0};
  const abc::WoodStatistics w = abc::wood_e0_statistics(y, obs);
  ASSERT_EQ(w.values.size(), 14);
  EXPECT_FALSE(w.degenerate);
  for (int i = 0; i < 14; ++i) EXPECT_NEAR(w.values[i], expected[i], 1e-10 * std::max(1.0, std::abs(expected[i]))) << i;
}

TEST(WoodStatistics, DegenerateDesignIsFlagged) {
  const std::vector<double> zeros(50, 0.0);
  const abc::WoodStatistics w = abc::wood_e0_statistics(zeros, zeros);
  EXPECT_TRUE(w.degenerate);
  for (int i = 0; i < 14; ++i) EXPECT_TRUE(std::isfinite(w.values[i]));
  EXPECT_EQ(w.values[13], 50.0);
}

TEST(RickerMaps, DimensionsAndPrefix) {
  abc::RngStream rng(1, 0);
  const abc::RickerModel model;
  const Dataset obs = *model.simulate(Vector{{3.8, 0.3, 10.0}}, rng);
  const Dataset sim = *model.simulate(Vector{{3.8, 0.3, 10.0}}, rng);
  const Vector e0 = abc::WoodE0Map(obs.values).apply(sim);
  const Vector e1 = abc::RickerE1Map(obs.values).apply(sim);
  const Vector e2 = abc::RickerE2Map(obs.values).apply(sim);
  ASSERT_EQ(e1.size(), 30);
  ASSERT_EQ(e2.size(), 428);
  EXPECT_EQ(e1.head(14), e0);
  EXPECT_EQ(e2.head(30), e1);
  for (int i = 0; i < e2.size(); ++i) EXPECT_TRUE(std::isfinite(e2[i]));
}

TEST(TbMaps, PairAndFeatures) {
  Dataset d;
  for (std::int64_t c : abc::tb_observed_clusters()) d.values.push_back(static_cast<double>(c));
  const Vector pair = abc::TbPairMap().apply(d);
  EXPECT_NEAR(pair[0], 326.0 / 473.0, 1e-15);
  EXPECT_NEAR(pair[1], 1.0 - 2411.0 / 223729.0, 1e-15);
  const Vector f = abc::TbFeatureMap().apply(d);
  ASSERT_EQ(f.size(), 22);
  EXPECT_EQ(f[0], 282.0);
  EXPECT_EQ(f[1], 20.0);
  EXPECT_EQ(f[4], 2.0);
  EXPECT_EQ(f[5], 5.0);
  EXPECT_NEAR(f[6], 473.0 / 326.0, 1e-14);
  EXPECT_EQ(f[8], 30.0);
  EXPECT_EQ(f[11], 282.0 * 282.0);
}

TEST(OrderStats, SubsetOfFullOrReduced) {
  const abc::OrderStatSubsetMap map(3, 7);
  const Vector full = map.apply(data_of({7, 6, 5, 4, 3, 2, 1}));
  EXPECT_EQ(full, (Vector{{2.0, 4.0, 6.0}}));
  const Vector reduced = map.apply(data_of({2, 4, 6}));
  EXPECT_EQ(reduced, full);
}

TEST(PowerMap, StacksPowers) {
  const auto base = std::make_shared<abc::IdentityMap>(2);
  const abc::PowerMap p(base, 3);
  EXPECT_EQ(p.apply(data_of({2, -1})), (Vector{{2, -1, 4, 1, 8, -1}}));
}

TEST(MakeSummary, ParsesSpecs) {
  const abc::GkModel gk(1000);
  const Dataset empty;
  // Full order statistics take their length from the observed data.
  EXPECT_EQ(abc::make_summary("order-stats", gk, data_of(std::vector<double>(1000, 0.0)))->dim(), 1000);
  EXPECT_EQ(abc::make_summary("order-subset:100", gk, empty)->dim(), 100);
  EXPECT_EQ(abc::make_summary("power:4:order-subset:60", gk, empty)->dim(), 240);
  EXPECT_EQ(abc::make_summary("quantiles:20", gk, empty)->dim(), 20);
  EXPECT_THROW(abc::make_summary("power:x:mean", gk, empty), std::invalid_argument);
  EXPECT_THROW(abc::make_summary("unknown", gk, empty), std::invalid_argument);
}

}  // namespace
