#include "abc/summaries.hpp"

#include "abc/stats.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace abc {

namespace {

void require_length(const Dataset& data, std::size_t n, const std::string& who) {
  if (data.values.size() != n)
    throw std::invalid_argument(who + ": expected " + std::to_string(n) + " values, got " +
                                std::to_string(data.values.size()));
}

double mean_of(const std::vector<double>& y) {
  return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

// Logs of features that may legitimately hit zero are floored here rather
// than producing -inf inside a regression design.
double guarded_log(double x) { return std::log(std::max(x, 1e-12)); }

// Least squares with a rank check; a rank-deficient design yields zeros.
Vector checked_least_squares(const Matrix& x, const Vector& y, bool& degenerate) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) {
    degenerate = true;
    return Vector::Zero(x.cols());
  }
  return qr.solve(y);
}

std::vector<double> sorted_copy(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<double> differences(const std::vector<double>& y) {
  std::vector<double> d;
  if (y.size() < 2) return d;
  d.reserve(y.size() - 1);
  for (std::size_t t = 1; t < y.size(); ++t) d.push_back(y[t] - y[t - 1]);
  return d;
}

}  // namespace

Vector IdentityMap::apply(const Dataset& data) const {
  require_length(data, static_cast<std::size_t>(dim_), "identity summary");
  return Eigen::Map<const Vector>(data.values.data(), dim_);
}

Vector MeanMap::apply(const Dataset& data) const {
  if (data.values.empty()) throw std::invalid_argument("mean summary: empty dataset");
  return Vector::Constant(1, mean_of(data.values));
}

Vector SortedValuesMap::apply(const Dataset& data) const {
  require_length(data, static_cast<std::size_t>(n_), "order-stats summary");
  Vector out = Eigen::Map<const Vector>(data.values.data(), n_);
  std::sort(out.begin(), out.end());
  return out;
}

OrderStatSubsetMap::OrderStatSubsetMap(std::size_t m, std::size_t n)
    : n_(n), ranks_(evenly_spaced_ranks(m, n)) {}

std::string OrderStatSubsetMap::name() const { return "order-subset:" + std::to_string(ranks_.size()); }

Vector OrderStatSubsetMap::apply(const Dataset& data) const {
  const std::size_t m = ranks_.size();
  Vector out(static_cast<int>(m));
  if (data.values.size() == m) {
    for (std::size_t j = 0; j < m; ++j) out[static_cast<int>(j)] = data.values[j];
    std::sort(out.begin(), out.end());
    return out;
  }
  require_length(data, n_, name());
  const std::vector<double> sorted = sorted_copy(data.values);
  for (std::size_t j = 0; j < m; ++j) out[static_cast<int>(j)] = sorted[ranks_[j] - 1];
  return out;
}

QuantileMap::QuantileMap(int count) : count_(count) {
  if (count_ < 2) throw std::invalid_argument("QuantileMap: need at least two quantiles");
}

Vector QuantileMap::apply(const Dataset& data) const {
  if (data.values.empty()) throw std::invalid_argument("quantile summary: empty dataset");
  const std::vector<double> sorted = sorted_copy(data.values);
  Vector out(count_);
  for (int k = 0; k < count_; ++k)
    out[k] = sample_quantile(sorted, static_cast<double>(k) / (count_ - 1));
  return out;
}

namespace {

std::vector<std::int64_t> clusters_of(const Dataset& data) {
  std::vector<std::int64_t> clusters;
  clusters.reserve(data.values.size());
  for (double v : data.values) clusters.push_back(static_cast<std::int64_t>(std::llround(v)));
  return clusters;
}

}  // namespace

Vector TbPairMap::apply(const Dataset& data) const {
  const auto pair = tb_summaries(clusters_of(data));
  return Vector{{pair[0], pair[1]}};
}

Vector TbFeatureMap::apply(const Dataset& data) const {
  std::vector<std::int64_t> clusters = clusters_of(data);
  const auto pair = tb_summaries(clusters);
  std::sort(clusters.begin(), clusters.end(), std::greater<>());
  Vector base = Vector::Zero(11);
  double total = 0.0;
  for (std::int64_t c : clusters) {
    if (c <= 5) base[static_cast<int>(c) - 1] += 1.0;
    else base[5] += 1.0;
    total += static_cast<double>(c);
  }
  base[6] = total / static_cast<double>(clusters.size());
  base[7] = pair[1];
  for (std::size_t i = 0; i < 3 && i < clusters.size(); ++i)
    base[8 + static_cast<int>(i)] = static_cast<double>(clusters[i]);
  Vector out(22);
  out << base, base.array().square().matrix();
  return out;
}

double autocovariance(const std::vector<double>& y, int lag) {
  const std::size_t n = y.size();
  if (n == 0 || lag < 0 || static_cast<std::size_t>(lag) >= n)
    throw std::invalid_argument("autocovariance: lag must be in [0, n)");
  const double m = mean_of(y);
  double sum = 0.0;
  for (std::size_t t = 0; t + static_cast<std::size_t>(lag) < n; ++t)
    sum += (y[t] - m) * (y[t + static_cast<std::size_t>(lag)] - m);
  return sum / static_cast<double>(n);
}

WoodStatistics wood_e0_statistics(const std::vector<double>& y, const std::vector<double>& observed) {
  if (y.size() < 7 || observed.size() != y.size())
    throw std::invalid_argument("wood_e0_statistics: need equal-length series of at least 7 values");
  WoodStatistics out;
  out.values = Vector::Zero(14);
  for (int lag = 0; lag <= 5; ++lag) out.values[lag] = autocovariance(y, lag);

  const std::vector<double> dy = sorted_copy(differences(y));
  const std::vector<double> dobs = sorted_copy(differences(observed));
  const int nd = static_cast<int>(dy.size());
  Matrix cubic(nd, 4);
  Vector response(nd);
  for (int i = 0; i < nd; ++i) {
    const double x = dobs[static_cast<std::size_t>(i)];
    cubic.row(i) << 1.0, x, x * x, x * x * x;
    response[i] = dy[static_cast<std::size_t>(i)];
  }
  out.values.segment(6, 4) = checked_least_squares(cubic, response, out.degenerate);

  Matrix power(nd, 2);
  Vector next(nd);
  for (int t = 0; t < nd; ++t) {
    const double base = std::pow(y[static_cast<std::size_t>(t)], 0.3);
    power.row(t) << base, base * base;
    next[t] = std::pow(y[static_cast<std::size_t>(t) + 1], 0.3);
  }
  out.values.segment(10, 2) = checked_least_squares(power, next, out.degenerate);

  out.values[12] = mean_of(y);
  out.values[13] = static_cast<double>(std::count(y.begin(), y.end(), 0.0));
  return out;
}

Vector WoodE0Map::apply(const Dataset& data) const {
  require_length(data, observed_.size(), "wood-e0 summary");
  return wood_e0_statistics(data.values, observed_).values;
}

Vector RickerE1Map::apply(const Dataset& data) const {
  const Vector e0 = e0_.apply(data);
  const std::vector<double>& y = data.values;
  const double n = static_cast<double>(y.size());
  Vector extra = Vector::Zero(16);
  for (double v : y)
    if (v >= 1.0 && v <= 4.0 && v == std::round(v)) extra[static_cast<int>(v) - 1] += 1.0;
  const double mean = e0[12];
  extra[4] = guarded_log(mean);
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  extra[5] = guarded_log(ss / (n - 1.0));
  for (int j = 2; j <= 6; ++j) {
    double sum = 0.0;
    for (double v : y) sum += std::pow(v, j);
    extra[4 + j] = guarded_log(sum);
  }
  const double c0 = e0[0];
  for (int lag = 1; lag <= 5; ++lag) extra[10 + lag] = c0 > 0.0 ? e0[lag] / c0 : 0.0;
  Vector out(30);
  out << e0, extra;
  return out;
}

Vector RickerE2Map::apply(const Dataset& data) const {
  const std::vector<double>& y = data.values;
  if (y.size() != 50) throw std::invalid_argument("ricker-e2 summary: expected 50 values");
  const Vector e1 = e1_.apply(data);
  const std::vector<double> sorted = sorted_copy(y);
  std::vector<double> dsq = differences(y);
  for (double& d : dsq) d *= d;
  const std::vector<double> dsq_sorted = sorted_copy(dsq);

  Vector out(dim());
  out.head(30) = e1;
  int k = 30;
  for (double v : y) out[k++] = v;
  for (double v : sorted) out[k++] = v;
  for (double v : y) out[k++] = v * v;
  for (double v : sorted) out[k++] = v * v;
  for (double v : y) out[k++] = std::log1p(v);
  for (double v : sorted) out[k++] = std::log1p(v);
  for (double v : dsq) out[k++] = v;
  for (double v : dsq_sorted) out[k++] = v;
  return out;
}

UnionMap::UnionMap(std::vector<SummaryPtr> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw std::invalid_argument("UnionMap: no parts");
  for (const auto& p : parts_) dim_ += p->dim();
}

std::string UnionMap::name() const {
  std::string out;
  for (const auto& p : parts_) out += (out.empty() ? "" : "+") + p->name();
  return out;
}

Vector UnionMap::apply(const Dataset& data) const {
  Vector out(dim_);
  int offset = 0;
  for (const auto& p : parts_) {
    out.segment(offset, p->dim()) = p->apply(data);
    offset += p->dim();
  }
  return out;
}

PowerMap::PowerMap(SummaryPtr base, int max_power) : base_(std::move(base)), max_power_(max_power) {
  if (max_power_ < 1) throw std::invalid_argument("PowerMap: max power must be at least 1");
}

std::string PowerMap::name() const { return "power:" + std::to_string(max_power_) + ":" + base_->name(); }

Vector PowerMap::apply(const Dataset& data) const {
  const Vector f = base_->apply(data);
  const int q = static_cast<int>(f.size());
  Vector out(q * max_power_);
  Vector current = f;
  for (int l = 0; l < max_power_; ++l) {
    out.segment(l * q, q) = current;
    current = current.cwiseProduct(f);
  }
  return out;
}

SummaryPtr make_summary(const std::string& spec, const Model& model, const Dataset& observed) {
  auto sample_size = [&]() -> std::size_t {
    if (const auto* gk = dynamic_cast<const GkModel*>(&model)) return gk->n();
    return observed.values.size();
  };
  if (spec.rfind("power:", 0) == 0) {
    const std::size_t colon = spec.find(':', 6);
    if (colon == std::string::npos) throw std::invalid_argument("summary spec '" + spec + "': expected power:L:<map>");
    const int power = std::stoi(spec.substr(6, colon - 6));
    return std::make_shared<PowerMap>(make_summary(spec.substr(colon + 1), model, observed), power);
  }
  if (spec == "identity") return std::make_shared<IdentityMap>(static_cast<int>(observed.values.size()));
  if (spec == "mean") return std::make_shared<MeanMap>();
  if (spec == "order-stats") return std::make_shared<SortedValuesMap>(static_cast<int>(observed.values.size()));
  if (spec.rfind("order-subset:", 0) == 0)
    return std::make_shared<OrderStatSubsetMap>(std::stoul(spec.substr(13)), sample_size());
  if (spec.rfind("quantiles:", 0) == 0) return std::make_shared<QuantileMap>(std::stoi(spec.substr(10)));
  if (spec == "tb-pair") return std::make_shared<TbPairMap>();
  if (spec == "tb-features") return std::make_shared<TbFeatureMap>();
  if (spec == "wood-e0") return std::make_shared<WoodE0Map>(observed.values);
  if (spec == "ricker-e1") return std::make_shared<RickerE1Map>(observed.values);
  if (spec == "ricker-e2") return std::make_shared<RickerE2Map>(observed.values);
  throw std::invalid_argument("unknown summary '" + spec + "'");
}

}  // namespace abc
