#include "abc/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace abc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(const Vector& theta, int dim, const char* who) {
  if (theta.size() != dim)
    throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(dim) +
                                " parameters, got " + std::to_string(theta.size()));
}

void require_proper(bool proper, const char* who) {
  if (!proper) throw std::invalid_argument(std::string(who) + ": prior is improper and cannot be sampled");
}

class RotatedPrior : public Prior {
 public:
  RotatedPrior(PriorPtr base, Matrix rotation) : base_(std::move(base)), rotation_(std::move(rotation)) {}
  int dim() const override { return base_->dim(); }
  double log_density(const Vector& theta) const override {
    return base_->log_density(rotation_.transpose() * theta);
  }
  bool proper() const override { return base_->proper(); }
  Vector sample(RngStream& rng) const override { return rotation_ * base_->sample(rng); }
  Vector lower() const override { return corners().first; }
  Vector upper() const override { return corners().second; }
  double max_log_density(const Vector&, const Vector&) const override {
    return base_->max_log_density(base_->lower(), base_->upper());
  }

 private:
  std::pair<Vector, Vector> corners() const {
    const Vector lo = base_->lower();
    const Vector hi = base_->upper();
    const int d = static_cast<int>(lo.size());
    Vector out_lo = Vector::Constant(d, kInf);
    Vector out_hi = Vector::Constant(d, kNegInf);
    for (int mask = 0; mask < (1 << d); ++mask) {
      Vector corner(d);
      for (int i = 0; i < d; ++i) corner[i] = (mask >> i) & 1 ? hi[i] : lo[i];
      if (!corner.allFinite()) return {Vector::Constant(d, kNegInf), Vector::Constant(d, kInf)};
      const Vector image = rotation_ * corner;
      out_lo = out_lo.cwiseMin(image);
      out_hi = out_hi.cwiseMax(image);
    }
    return {out_lo, out_hi};
  }

  PriorPtr base_;
  Matrix rotation_;
};

}  // namespace

Vector to_working(const std::vector<Transform>& transforms, const Vector& theta) {
  if (transforms.size() != static_cast<std::size_t>(theta.size()))
    throw std::invalid_argument("to_working: transform count does not match parameter dimension");
  Vector out = theta;
  for (std::size_t i = 0; i < transforms.size(); ++i)
    if (transforms[i] == Transform::Log) out[static_cast<int>(i)] = std::log(theta[static_cast<int>(i)]);
  return out;
}

Vector from_working(const std::vector<Transform>& transforms, const Vector& working) {
  if (transforms.size() != static_cast<std::size_t>(working.size()))
    throw std::invalid_argument("from_working: transform count does not match parameter dimension");
  Vector out = working;
  for (std::size_t i = 0; i < transforms.size(); ++i)
    if (transforms[i] == Transform::Log) out[static_cast<int>(i)] = std::exp(working[static_cast<int>(i)]);
  return out;
}

double log_jacobian(const std::vector<Transform>& transforms, const Vector& theta) {
  double total = 0.0;
  for (std::size_t i = 0; i < transforms.size(); ++i)
    if (transforms[i] == Transform::Log) total += std::log(theta[static_cast<int>(i)]);
  return total;
}

double Prior::density(const Vector& theta) const { return std::exp(log_density(theta)); }

bool Prior::in_support(const Vector& theta) const { return log_density(theta) > kNegInf; }

// ---------------------------------------------------------------------------

BoxUniformPrior::BoxUniformPrior(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size())
    throw std::invalid_argument("BoxUniformPrior: bounds must be non-empty and equal length");
  if (!lower_.allFinite() || !upper_.allFinite() || (lower_.array() >= upper_.array()).any())
    throw std::invalid_argument("BoxUniformPrior: need finite bounds with lower < upper");
}

double BoxUniformPrior::log_density(const Vector& theta) const {
  require_dim(theta, dim(), "BoxUniformPrior");
  for (int i = 0; i < dim(); ++i)
    if (!(theta[i] >= lower_[i] && theta[i] <= upper_[i])) return kNegInf;
  return 0.0;
}

Vector BoxUniformPrior::sample(RngStream& rng) const {
  Vector out(dim());
  for (int i = 0; i < dim(); ++i) out[i] = rng.uniform(lower_[i], upper_[i]);
  return out;
}

LogUniformPrior::LogUniformPrior(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size())
    throw std::invalid_argument("LogUniformPrior: bounds must be non-empty and equal length");
  if ((lower_.array() <= 0.0).any() || (lower_.array() >= upper_.array()).any() || !upper_.allFinite())
    throw std::invalid_argument("LogUniformPrior: need 0 < lower < upper < inf");
}

double LogUniformPrior::log_density(const Vector& theta) const {
  require_dim(theta, dim(), "LogUniformPrior");
  double total = 0.0;
  for (int i = 0; i < dim(); ++i) {
    if (!(theta[i] >= lower_[i] && theta[i] <= upper_[i])) return kNegInf;
    total -= std::log(theta[i]);
  }
  return total;
}

Vector LogUniformPrior::sample(RngStream& rng) const {
  Vector out(dim());
  for (int i = 0; i < dim(); ++i)
    out[i] = std::exp(rng.uniform(std::log(lower_[i]), std::log(upper_[i])));
  return out;
}

double LogUniformPrior::max_log_density(const Vector& lo, const Vector& /*hi*/) const {
  double total = 0.0;
  for (int i = 0; i < dim(); ++i) total -= std::log(std::max(lo[i], lower_[i]));
  return total;
}

NormalPrior::NormalPrior(Vector mean, Vector sd) : mean_(std::move(mean)), sd_(std::move(sd)) {
  if (mean_.size() == 0 || mean_.size() != sd_.size())
    throw std::invalid_argument("NormalPrior: mean and sd must be non-empty and equal length");
  if ((sd_.array() <= 0.0).any()) throw std::invalid_argument("NormalPrior: sd must be positive");
}

double NormalPrior::log_density(const Vector& theta) const {
  require_dim(theta, dim(), "NormalPrior");
  if (!theta.allFinite()) return kNegInf;
  return -0.5 * ((theta - mean_).cwiseQuotient(sd_)).squaredNorm();
}

Vector NormalPrior::sample(RngStream& rng) const {
  Vector out(dim());
  for (int i = 0; i < dim(); ++i) out[i] = rng.normal(mean_[i], sd_[i]);
  return out;
}

Vector NormalPrior::lower() const { return Vector::Constant(dim(), kNegInf); }
Vector NormalPrior::upper() const { return Vector::Constant(dim(), kInf); }

double NormalPrior::max_log_density(const Vector& lo, const Vector& hi) const {
  return log_density(mean_.cwiseMax(lo).cwiseMin(hi));
}

double DiscreteUniformPrior::log_density(const Vector& theta) const {
  require_dim(theta, 1, "DiscreteUniformPrior");
  const double t = theta[0];
  return (t == std::round(t) && t >= 1.0 && t <= k_) ? 0.0 : kNegInf;
}

Vector DiscreteUniformPrior::sample(RngStream& rng) const {
  return Vector::Constant(1, 1.0 + static_cast<double>(rng.below(static_cast<std::uint64_t>(k_))));
}

Vector DiscreteUniformPrior::lower() const { return Vector::Constant(1, 1.0); }
Vector DiscreteUniformPrior::upper() const { return Vector::Constant(1, k_); }

double Mg1Prior::log_density(const Vector& theta) const {
  require_dim(theta, 3, "Mg1Prior");
  const double gap = theta[1] - theta[0];
  const bool inside = theta[0] >= 0.0 && theta[0] <= 10.0 && gap >= 0.0 && gap <= 10.0 &&
                      theta[2] > 0.0 && theta[2] <= 1.0 / 3.0;
  return inside ? 0.0 : kNegInf;
}

Vector Mg1Prior::sample(RngStream& rng) const {
  Vector out(3);
  out[0] = 10.0 * rng.uniform();
  out[1] = out[0] + 10.0 * rng.uniform();
  out[2] = rng.uniform() / 3.0;
  return out;
}

Vector Mg1Prior::lower() const { return Vector::Zero(3); }
Vector Mg1Prior::upper() const { return Vector{{10.0, 20.0, 1.0 / 3.0}}; }

double TbPrior::log_density(const Vector& theta) const {
  require_dim(theta, 2, "TbPrior");
  const double a = theta[0];
  const double d = theta[1];
  return (d >= 0.0 && d <= a && a + d < 1.0) ? 0.0 : kNegInf;
}

Vector TbPrior::sample(RngStream& rng) const {
  for (;;) {
    const double a = rng.uniform();
    const double d = 0.5 * rng.uniform();
    if (d <= a && a + d < 1.0) return Vector{{a, d}};
  }
}

Vector TbPrior::lower() const { return Vector::Zero(2); }
Vector TbPrior::upper() const { return Vector{{1.0, 0.5}}; }

double RickerPrior::log_density(const Vector& theta) const {
  require_dim(theta, 3, "RickerPrior");
  if (!(theta[0] >= 0.0) || !(theta[2] >= 0.0) || !std::isfinite(theta[0]) || !std::isfinite(theta[2]))
    return kNegInf;
  if (!(theta[1] >= 0.1 && theta[1] <= 1.0)) return kNegInf;
  return -std::log(theta[1]);
}

Vector RickerPrior::sample(RngStream&) const {
  require_proper(false, "RickerPrior");
  return {};
}

Vector RickerPrior::lower() const { return Vector{{0.0, 0.1, 0.0}}; }
Vector RickerPrior::upper() const { return Vector{{kInf, 1.0, kInf}}; }

double RickerPrior::max_log_density(const Vector& lo, const Vector&) const {
  return -std::log(std::max(lo[1], 0.1));
}

// ---------------------------------------------------------------------------

GkModel::GkModel(std::size_t n, std::size_t m, double c)
    : n_(n), m_(m == 0 ? n : m), c_(c),
      prior_(std::make_shared<BoxUniformPrior>(Vector::Zero(4), Vector::Constant(4, 10.0))) {
  if (n_ == 0 || m_ > n_) throw std::invalid_argument("GkModel: need 1 <= m <= n");
}

std::optional<Dataset> GkModel::simulate(const Vector& theta, RngStream& rng) const {
  require_dim(theta, 4, "GkModel");
  Dataset data;
  data.values = gk_simulate_order_stats({theta[0], theta[1], theta[2], theta[3], c_}, m_, n_, rng);
  return data;
}

std::shared_ptr<GkModel> GkModel::with_order_stats(std::size_t m) const {
  return std::make_shared<GkModel>(n_, m, c_);
}

LotkaVolterraModel::LotkaVolterraModel(LvState initial, double tau, std::size_t n_obs,
                                       std::uint64_t event_cap)
    : initial_(initial), tau_(tau), n_obs_(n_obs), event_cap_(event_cap),
      prior_(std::make_shared<LogUniformPrior>(Vector{{0.05, 0.00025, 0.03}},
                                               Vector{{5.0, 0.025, 3.0}})) {
  if (!(tau_ > 0.0)) throw std::invalid_argument("LotkaVolterraModel: tau must be positive");
  if (initial_.prey < 0 || initial_.predator < 0)
    throw std::invalid_argument("LotkaVolterraModel: initial state must be non-negative");
}

std::optional<Dataset> LotkaVolterraModel::simulate(const Vector& theta, RngStream& rng) const {
  std::vector<double> times(n_obs_ + 1);
  for (std::size_t j = 0; j <= n_obs_; ++j) times[j] = static_cast<double>(j) * tau_;
  const LvResult result = lv_gillespie(theta, initial_, times, rng, event_cap_);
  if (result.overflow) return std::nullopt;
  Dataset data;
  data.width = 2;
  data.times = times;
  data.values.reserve(2 * times.size());
  for (const LvState& s : result.states) {
    data.values.push_back(static_cast<double>(s.prey));
    data.values.push_back(static_cast<double>(s.predator));
  }
  return data;
}

std::vector<Transform> LotkaVolterraModel::working_transform() const {
  return {Transform::Log, Transform::Log, Transform::Log};
}

std::optional<Vector> LotkaVolterraModel::propagate(const Vector& theta, const Vector& state,
                                                    double dt, RngStream& rng) const {
  const LvState start{static_cast<std::int64_t>(std::llround(state[0])),
                      static_cast<std::int64_t>(std::llround(state[1]))};
  const LvResult result = lv_gillespie(theta, start, {dt}, rng, event_cap_);
  if (result.overflow) return std::nullopt;
  return Vector{{static_cast<double>(result.states[0].prey),
                 static_cast<double>(result.states[0].predator)}};
}

StateSequence LotkaVolterraModel::to_sequence(const Dataset& data) const {
  if (data.width != 2 || data.rows() < 2 || data.times.size() != data.rows())
    throw std::invalid_argument("LotkaVolterraModel: dataset needs >= 2 rows of (prey, predator) with times");
  StateSequence seq;
  seq.initial = Vector{{data.at(0, 0), data.at(0, 1)}};
  for (std::size_t r = 1; r < data.rows(); ++r) {
    seq.observations.push_back(Vector{{data.at(r, 0), data.at(r, 1)}});
    seq.intervals.push_back(data.times[r] - data.times[r - 1]);
  }
  return seq;
}

RickerModel::RickerModel() : prior_(std::make_shared<RickerPrior>()) {}

std::optional<Dataset> RickerModel::simulate(const Vector& theta, RngStream& rng) const {
  RickerResult result = ricker_simulate(theta, rng);
  if (result.non_finite) return std::nullopt;
  Dataset data;
  data.values = std::move(result.counts);
  return data;
}

bool RickerModel::discard(const Dataset& data) const {
  return std::count(data.values.begin(), data.values.end(), 0.0) >= kZeroDiscardThreshold;
}

std::vector<Transform> RickerModel::working_transform() const {
  return {Transform::Log, Transform::Log, Transform::Log};
}

Mg1Model::Mg1Model(std::size_t n) : n_(n), prior_(std::make_shared<Mg1Prior>()) {
  if (n_ == 0) throw std::invalid_argument("Mg1Model: n must be positive");
}

std::optional<Dataset> Mg1Model::simulate(const Vector& theta, RngStream& rng) const {
  Dataset data;
  data.values = mg1_simulate(theta, n_, rng);
  return data;
}

TbModel::TbModel(std::size_t n_target, std::size_t sample_size, int restart_cap)
    : n_target_(n_target), sample_size_(sample_size), restart_cap_(restart_cap),
      prior_(std::make_shared<TbPrior>()) {
  if (sample_size_ == 0 || n_target_ < sample_size_)
    throw std::invalid_argument("TbModel: need 0 < sample_size <= n_target");
}

std::optional<Dataset> TbModel::simulate(const Vector& theta, RngStream& rng) const {
  const TbResult result = tb_simulate(theta, n_target_, sample_size_, rng, restart_cap_);
  if (result.restart_cap_hit) return std::nullopt;
  Dataset data;
  data.values.assign(result.clusters.begin(), result.clusters.end());
  return data;
}

// ---------------------------------------------------------------------------

NormalMeanModel::NormalMeanModel(double prior_var, std::size_t n)
    : prior_var_(prior_var), n_(n),
      prior_(std::make_shared<NormalPrior>(Vector::Zero(1), Vector::Constant(1, std::sqrt(prior_var)))) {
  if (!(prior_var_ > 0.0) || n_ == 0)
    throw std::invalid_argument("NormalMeanModel: need prior_var > 0 and n > 0");
}

std::optional<Dataset> NormalMeanModel::simulate(const Vector& theta, RngStream& rng) const {
  require_dim(theta, 1, "NormalMeanModel");
  Dataset data;
  data.values.resize(n_);
  for (double& y : data.values) y = rng.normal(theta[0], 1.0);
  return data;
}

double NormalMeanModel::shrinkage() const {
  const double n = static_cast<double>(n_);
  return n * prior_var_ / (n * prior_var_ + 1.0);
}

double NormalMeanModel::posterior_var() const {
  return prior_var_ / (static_cast<double>(n_) * prior_var_ + 1.0);
}

NormalVarianceModel::NormalVarianceModel(std::size_t m, double prior_lo, double prior_hi)
    : m_(m), prior_(std::make_shared<BoxUniformPrior>(Vector::Constant(1, prior_lo),
                                                      Vector::Constant(1, prior_hi))) {
  if (m_ == 0 || !(prior_lo > 0.0)) throw std::invalid_argument("NormalVarianceModel: need m > 0 and prior_lo > 0");
}

std::optional<Dataset> NormalVarianceModel::simulate(const Vector& theta, RngStream& rng) const {
  require_dim(theta, 1, "NormalVarianceModel");
  const double sd = std::sqrt(theta[0]);
  Dataset data;
  data.values.resize(m_);
  data.times.resize(m_);
  for (std::size_t i = 0; i < m_; ++i) {
    data.values[i] = rng.normal(0.0, sd);
    data.times[i] = static_cast<double>(i + 1);
  }
  return data;
}

std::optional<Vector> NormalVarianceModel::propagate(const Vector& theta, const Vector&, double,
                                                     RngStream& rng) const {
  return Vector::Constant(1, rng.normal(0.0, std::sqrt(theta[0])));
}

StateSequence NormalVarianceModel::to_sequence(const Dataset& data) const {
  if (data.values.empty()) throw std::invalid_argument("NormalVarianceModel: empty dataset");
  StateSequence seq;
  seq.initial = Vector::Zero(1);
  for (double y : data.values) {
    seq.observations.push_back(Vector::Constant(1, y));
    seq.intervals.push_back(1.0);
  }
  return seq;
}

RandomWalkModel::RandomWalkModel(std::size_t n_obs, double prior_lo, double prior_hi)
    : n_obs_(n_obs), prior_(std::make_shared<BoxUniformPrior>(Vector::Constant(1, prior_lo),
                                                              Vector::Constant(1, prior_hi))) {
  if (n_obs_ == 0 || !(prior_lo > 0.0)) throw std::invalid_argument("RandomWalkModel: need n_obs > 0 and prior_lo > 0");
}

std::optional<Dataset> RandomWalkModel::simulate(const Vector& theta, RngStream& rng) const {
  require_dim(theta, 1, "RandomWalkModel");
  const double sd = std::sqrt(theta[0]);
  Dataset data;
  data.values.resize(n_obs_ + 1);
  data.times.resize(n_obs_ + 1);
  data.values[0] = 0.0;
  data.times[0] = 0.0;
  for (std::size_t t = 1; t <= n_obs_; ++t) {
    data.values[t] = data.values[t - 1] + rng.normal(0.0, sd);
    data.times[t] = static_cast<double>(t);
  }
  return data;
}

std::optional<Vector> RandomWalkModel::propagate(const Vector& theta, const Vector& state, double dt,
                                                 RngStream& rng) const {
  return Vector::Constant(1, state[0] + rng.normal(0.0, std::sqrt(theta[0] * dt)));
}

StateSequence RandomWalkModel::to_sequence(const Dataset& data) const {
  if (data.values.size() < 2 || data.times.size() != data.values.size())
    throw std::invalid_argument("RandomWalkModel: dataset needs >= 2 timed values");
  StateSequence seq;
  seq.initial = Vector::Constant(1, data.values[0]);
  for (std::size_t t = 1; t < data.values.size(); ++t) {
    seq.observations.push_back(Vector::Constant(1, data.values[t]));
    seq.intervals.push_back(data.times[t] - data.times[t - 1]);
  }
  return seq;
}

DiscreteToyModel::DiscreteToyModel() : prior_(std::make_shared<DiscreteUniformPrior>(5)) {
  transition_.resize(5, 5);
  transition_ << 0.5, 0.2, 0.1, 0.1, 0.1,
                 0.2, 0.4, 0.2, 0.1, 0.1,
                 0.1, 0.2, 0.4, 0.2, 0.1,
                 0.1, 0.1, 0.2, 0.4, 0.2,
                 0.1, 0.1, 0.1, 0.2, 0.5;
}

std::optional<Dataset> DiscreteToyModel::simulate(const Vector& theta, RngStream& rng) const {
  require_dim(theta, 1, "DiscreteToyModel");
  const long row = std::lround(theta[0]) - 1;
  if (row < 0 || row >= 5 || theta[0] != static_cast<double>(row + 1))
    throw std::invalid_argument("DiscreteToyModel: theta must be an integer in 1..5");
  const double u = rng.uniform();
  double cumulative = 0.0;
  int y = 5;
  for (int j = 0; j < 5; ++j) {
    cumulative += transition_(row, j);
    if (u < cumulative) {
      y = j + 1;
      break;
    }
  }
  Dataset data;
  data.values = {static_cast<double>(y)};
  return data;
}

Vector DiscreteToyModel::exact_posterior(int y) const {
  if (y < 1 || y > 5) throw std::invalid_argument("DiscreteToyModel: y must lie in 1..5");
  Vector column = transition_.col(y - 1);
  return column / column.sum();
}

RotatedModel::RotatedModel(ModelPtr base, Matrix rotation)
    : base_(std::move(base)), rotation_(std::move(rotation)) {
  if (base_->param_dim() != 2 || rotation_.rows() != 2 || rotation_.cols() != 2)
    throw std::invalid_argument("RotatedModel: needs a 2-parameter model and a 2x2 rotation");
  if (!(rotation_.transpose() * rotation_).isApprox(Matrix::Identity(2, 2), 1e-12))
    throw std::invalid_argument("RotatedModel: matrix is not orthogonal");
  prior_ = std::make_shared<RotatedPrior>(base_->prior_ptr(), rotation_);
}

std::optional<Dataset> RotatedModel::simulate(const Vector& theta, RngStream& rng) const {
  return base_->simulate(to_base(theta), rng);
}

// ---------------------------------------------------------------------------

std::vector<std::string> model_ids() {
  return {"gk", "lv", "ricker", "mg1", "tb", "normal-mean", "normal-variance", "discrete-toy",
          "random-walk"};
}

ModelPtr make_model(const std::string& id, std::size_t size) {
  const auto pick = [size](std::size_t fallback) { return size ? size : fallback; };
  if (id == "gk") return std::make_shared<GkModel>(pick(1000));
  if (id == "lv") return std::make_shared<LotkaVolterraModel>(LvState{100, 100}, 0.1, pick(50));
  if (id == "ricker") return std::make_shared<RickerModel>();
  if (id == "mg1") return std::make_shared<Mg1Model>(pick(50));
  if (id == "tb") return std::make_shared<TbModel>(1000, pick(100));
  if (id == "normal-mean") return std::make_shared<NormalMeanModel>(1.0, pick(1));
  if (id == "normal-variance") return std::make_shared<NormalVarianceModel>(pick(200));
  if (id == "discrete-toy") return std::make_shared<DiscreteToyModel>();
  if (id == "random-walk") return std::make_shared<RandomWalkModel>(pick(50), 0.1, 4.0);
  throw std::invalid_argument("unknown model '" + id + "'");
}

}  // namespace abc
