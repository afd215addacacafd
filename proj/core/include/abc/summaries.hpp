#pragma once

#include "abc/models.hpp"
#include "abc/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace abc {

/// Deterministic map from a dataset to a fixed-length vector. Used both for
/// ABC summaries S(y) and for regression features f(y).
class SummaryMap {
 public:
  virtual ~SummaryMap() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual Vector apply(const Dataset& data) const = 0;
};

using SummaryPtr = std::shared_ptr<const SummaryMap>;
using FeatureMap = SummaryMap;
using FeaturePtr = SummaryPtr;

/// The data values themselves.
class IdentityMap : public SummaryMap {
 public:
  explicit IdentityMap(int dim) : dim_(dim) {}
  std::string name() const override { return "identity"; }
  int dim() const override { return dim_; }
  Vector apply(const Dataset& data) const override;

 private:
  int dim_;
};

class MeanMap : public SummaryMap {
 public:
  std::string name() const override { return "mean"; }
  int dim() const override { return 1; }
  Vector apply(const Dataset& data) const override;
};

/// All n order statistics.
class SortedValuesMap : public SummaryMap {
 public:
  explicit SortedValuesMap(int n) : n_(n) {}
  std::string name() const override { return "order-stats"; }
  int dim() const override { return n_; }
  Vector apply(const Dataset& data) const override;

 private:
  int n_;
};

/// The m evenly spaced order statistics of an n-sample. Accepts either the
/// full n values or an already reduced m-vector.
class OrderStatSubsetMap : public SummaryMap {
 public:
  OrderStatSubsetMap(std::size_t m, std::size_t n);
  std::string name() const override;
  int dim() const override { return static_cast<int>(ranks_.size()); }
  Vector apply(const Dataset& data) const override;

 private:
  std::size_t n_;
  std::vector<std::size_t> ranks_;
};

/// `count` evenly spaced type-7 sample quantiles including min and max.
class QuantileMap : public SummaryMap {
 public:
  explicit QuantileMap(int count);
  std::string name() const override { return "quantiles:" + std::to_string(count_); }
  int dim() const override { return count_; }
  Vector apply(const Dataset& data) const override;

 private:
  int count_;
};

/// (g / n, H) from cluster sizes.
class TbPairMap : public SummaryMap {
 public:
  std::string name() const override { return "tb-pair"; }
  int dim() const override { return 2; }
  Vector apply(const Dataset& data) const override;
};

/// Cluster counts of size 1..5 and above 5, average cluster size, H, the
/// three largest cluster sizes, and the squares of all eleven.
class TbFeatureMap : public SummaryMap {
 public:
  std::string name() const override { return "tb-features"; }
  int dim() const override { return 22; }
  Vector apply(const Dataset& data) const override;
};

struct WoodStatistics {
  Vector values;
  /// A regression inside the statistic had a rank-deficient design; its
  /// coefficients were set to zero.
  bool degenerate = false;
};

/// Autocovariances to lag 5 (divisor n), the four coefficients (with
/// intercept) of a cubic regression of the sorted simulated differences on
/// the sorted observed differences, the two coefficients of
/// y_{t+1}^0.3 = b1 y_t^0.3 + b2 y_t^0.6, the mean, and the zero count.
WoodStatistics wood_e0_statistics(const std::vector<double>& y, const std::vector<double>& observed);

/// Sample autocovariance at `lag` with divisor n.
double autocovariance(const std::vector<double>& y, int lag);

class WoodE0Map : public SummaryMap {
 public:
  explicit WoodE0Map(std::vector<double> observed) : observed_(std::move(observed)) {}
  std::string name() const override { return "wood-e0"; }
  int dim() const override { return 14; }
  Vector apply(const Dataset& data) const override;

 private:
  std::vector<double> observed_;
};

/// E0 plus counts of y == 1..4, log mean, log variance, log power sums for
/// powers 2..6, and autocorrelations to lag 5.
class RickerE1Map : public SummaryMap {
 public:
  explicit RickerE1Map(std::vector<double> observed) : e0_(std::move(observed)) {}
  std::string name() const override { return "ricker-e1"; }
  int dim() const override { return 30; }
  Vector apply(const Dataset& data) const override;

 private:
  WoodE0Map e0_;
};

/// E1 plus the raw, sorted, squared, sorted squared, log(1 + .) and sorted
/// log(1 + .) observations and the squared and sorted squared differences.
class RickerE2Map : public SummaryMap {
 public:
  explicit RickerE2Map(std::vector<double> observed) : e1_(std::move(observed)) {}
  std::string name() const override { return "ricker-e2"; }
  int dim() const override { return 30 + 6 * 50 + 2 * 49; }
  Vector apply(const Dataset& data) const override;

 private:
  RickerE1Map e1_;
};

/// Concatenation of several maps.
class UnionMap : public SummaryMap {
 public:
  explicit UnionMap(std::vector<SummaryPtr> parts);
  std::string name() const override;
  int dim() const override { return dim_; }
  Vector apply(const Dataset& data) const override;

 private:
  std::vector<SummaryPtr> parts_;
  int dim_ = 0;
};

/// f -> (f, f^2, ..., f^l).
class PowerMap : public SummaryMap {
 public:
  PowerMap(SummaryPtr base, int max_power);
  std::string name() const override;
  int dim() const override { return base_->dim() * max_power_; }
  Vector apply(const Dataset& data) const override;

 private:
  SummaryPtr base_;
  int max_power_;
};

/// Builds a map from a short spec:
///   identity, mean, order-stats, order-subset:M, quantiles:K, tb-pair,
///   tb-features, wood-e0, ricker-e1, ricker-e2, and "power:L:<spec>".
/// Maps that depend on the observed data (wood-e0, ricker-*) take it from
/// `observed`; order-stat maps use the model's sample size.
SummaryPtr make_summary(const std::string& spec, const Model& model, const Dataset& observed);

}  // namespace abc
