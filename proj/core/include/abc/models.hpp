#pragma once

#include "abc/rng.hpp"
#include "abc/types.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace abc {

/// Observed or simulated data. Multivariate time series are stored row-major
/// with `width` components per observation time.
struct Dataset {
  std::vector<double> values;
  std::vector<double> times;
  int width = 1;

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return width > 0 ? values.size() / static_cast<std::size_t>(width) : 0; }
  double at(std::size_t row, int component) const {
    return values[row * static_cast<std::size_t>(width) + static_cast<std::size_t>(component)];
  }
};

/// Per-coordinate working transform used by random-walk samplers.
enum class Transform { Identity, Log };

Vector to_working(const std::vector<Transform>& transforms, const Vector& theta);
Vector from_working(const std::vector<Transform>& transforms, const Vector& working);
/// log |d theta / d working| evaluated at theta.
double log_jacobian(const std::vector<Transform>& transforms, const Vector& theta);

/// Prior density known up to a constant.
class Prior {
 public:
  virtual ~Prior() = default;

  virtual int dim() const = 0;
  /// Unnormalised log density; -inf outside the support.
  virtual double log_density(const Vector& theta) const = 0;
  double density(const Vector& theta) const;
  bool in_support(const Vector& theta) const;

  /// Improper priors cannot be sampled directly; they are only usable after
  /// truncation to a bounded training region.
  virtual bool proper() const { return true; }
  virtual Vector sample(RngStream& rng) const = 0;

  /// Bounding box of the support (may be infinite).
  virtual Vector lower() const = 0;
  virtual Vector upper() const = 0;

  /// An upper bound on log_density over the box [lo, hi], used for rejection
  /// sampling of the truncated prior.
  virtual double max_log_density(const Vector& lo, const Vector& hi) const = 0;
};

using PriorPtr = std::shared_ptr<const Prior>;

class BoxUniformPrior : public Prior {
 public:
  BoxUniformPrior(Vector lower, Vector upper);
  int dim() const override { return static_cast<int>(lower_.size()); }
  double log_density(const Vector& theta) const override;
  Vector sample(RngStream& rng) const override;
  Vector lower() const override { return lower_; }
  Vector upper() const override { return upper_; }
  double max_log_density(const Vector&, const Vector&) const override { return 0.0; }

 private:
  Vector lower_;
  Vector upper_;
};

/// Independent log-uniform coordinates on [lower_i, upper_i].
class LogUniformPrior : public Prior {
 public:
  LogUniformPrior(Vector lower, Vector upper);
  int dim() const override { return static_cast<int>(lower_.size()); }
  double log_density(const Vector& theta) const override;
  Vector sample(RngStream& rng) const override;
  Vector lower() const override { return lower_; }
  Vector upper() const override { return upper_; }
  double max_log_density(const Vector& lo, const Vector& hi) const override;

 private:
  Vector lower_;
  Vector upper_;
};

/// Independent normal coordinates.
class NormalPrior : public Prior {
 public:
  NormalPrior(Vector mean, Vector sd);
  int dim() const override { return static_cast<int>(mean_.size()); }
  double log_density(const Vector& theta) const override;
  Vector sample(RngStream& rng) const override;
  Vector lower() const override;
  Vector upper() const override;
  double max_log_density(const Vector& lo, const Vector& hi) const override;
  const Vector& mean() const { return mean_; }
  const Vector& sd() const { return sd_; }

 private:
  Vector mean_;
  Vector sd_;
};

/// Uniform on the integers {1, ..., k}.
class DiscreteUniformPrior : public Prior {
 public:
  explicit DiscreteUniformPrior(int k) : k_(k) {}
  int dim() const override { return 1; }
  double log_density(const Vector& theta) const override;
  Vector sample(RngStream& rng) const override;
  Vector lower() const override;
  Vector upper() const override;
  double max_log_density(const Vector&, const Vector&) const override { return 0.0; }
  int k() const { return k_; }

 private:
  int k_;
};

/// (theta1, theta2 - theta1, theta3) uniform on [0,10]^2 x [0,1/3].
class Mg1Prior : public Prior {
 public:
  int dim() const override { return 3; }
  double log_density(const Vector& theta) const override;
  Vector sample(RngStream& rng) const override;
  Vector lower() const override;
  Vector upper() const override;
  double max_log_density(const Vector&, const Vector&) const override { return 0.0; }
};

/// Uniform on {0 <= d <= a, a + d < 1}.
class TbPrior : public Prior {
 public:
  int dim() const override { return 2; }
  double log_density(const Vector& theta) const override;
  Vector sample(RngStream& rng) const override;
  Vector lower() const override;
  Vector upper() const override;
  double max_log_density(const Vector&, const Vector&) const override { return 0.0; }
};

/// Ricker prior on (log r, sigma_e, phi): log sigma_e uniform on
/// [log 0.1, 0], improper flat on log r >= 0 and phi >= 0.
class RickerPrior : public Prior {
 public:
  int dim() const override { return 3; }
  double log_density(const Vector& theta) const override;
  bool proper() const override { return false; }
  Vector sample(RngStream& rng) const override;
  Vector lower() const override;
  Vector upper() const override;
  double max_log_density(const Vector& lo, const Vector& hi) const override;
};

/// Forward simulator with a prior. Engines only ever call simulate().
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  int param_dim() const { return static_cast<int>(param_names().size()); }
  virtual const Prior& prior() const = 0;
  virtual PriorPtr prior_ptr() const = 0;

  /// nullopt means the simulator signalled a rejection (population
  /// explosion, extinction cap, non-finite state).
  virtual std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const = 0;

  /// Model-attached discard rule: datasets for which this returns true are
  /// dropped from training data and rejected by every ABC engine.
  virtual bool discard(const Dataset&) const { return false; }

  virtual std::vector<Transform> working_transform() const {
    return std::vector<Transform>(static_cast<std::size_t>(param_dim()), Transform::Identity);
  }
};

using ModelPtr = std::shared_ptr<const Model>;

/// Known initial state followed by one observation per interval.
struct StateSequence {
  Vector initial;
  std::vector<Vector> observations;
  std::vector<double> intervals;
};

/// A model whose data arrive as a sequence of observations of a Markov
/// state, so the sequential sampler can propagate one interval at a time.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;
  virtual std::vector<std::string> state_param_names() const = 0;
  virtual const Prior& state_prior() const = 0;
  virtual int state_dim() const = 0;
  /// Advance `state` by `dt` under parameter theta; nullopt on simulator
  /// rejection.
  virtual std::optional<Vector> propagate(const Vector& theta, const Vector& state, double dt,
                                          RngStream& rng) const = 0;
  virtual std::vector<Transform> state_working_transform() const = 0;
  virtual StateSequence to_sequence(const Dataset& data) const = 0;
};

// ---------------------------------------------------------------------------
// g-and-k distribution

struct GkParams {
  double A;
  double B;
  double g;
  double k;
  double c = 0.8;
};

/// A + B (1 + c (1 - e^{-gz}) / (1 + e^{-gz})) (1 + z^2)^k z, z = Phi^{-1}(u).
double gk_inverse_cdf(double u, const GkParams& params);

/// Indices (1-based) of the m evenly spaced order statistics of an n-sample:
/// floor(j (n + 1) / (m + 1)), j = 1..m.
std::vector<std::size_t> evenly_spaced_ranks(std::size_t m, std::size_t n);

/// The m evenly spaced order statistics of an n-sample, generated in O(m)
/// through exponential spacings: the uniform order statistic of rank k is
/// S_k / S_{n+1} where S_k sums k standard exponentials. Gaps between
/// consecutive requested ranks are drawn as single gamma variates.
std::vector<double> gk_simulate_order_stats(const GkParams& params, std::size_t m, std::size_t n,
                                            RngStream& rng);

/// Uniform order statistics of the requested ranks via exponential spacings.
std::vector<double> uniform_order_stats(const std::vector<std::size_t>& ranks, std::size_t n,
                                        RngStream& rng);

class GkModel : public Model {
 public:
  /// `n` draws; when `m < n` only the m evenly spaced order statistics are
  /// produced (sorted).
  explicit GkModel(std::size_t n, std::size_t m = 0, double c = 0.8);
  std::string name() const override { return "gk"; }
  std::vector<std::string> param_names() const override { return {"A", "B", "g", "k"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  /// The same model producing only m evenly spaced order statistics.
  std::shared_ptr<GkModel> with_order_stats(std::size_t m) const;

 private:
  std::size_t n_;
  std::size_t m_;
  double c_;
  PriorPtr prior_;
};

// ---------------------------------------------------------------------------
// Lotka-Volterra stochastic kinetic network

struct LvState {
  std::int64_t prey = 0;
  std::int64_t predator = 0;
};

struct LvResult {
  std::vector<LvState> states;
  std::uint64_t events = 0;
  bool overflow = false;
};

/// Exact Gillespie simulation. Rates: birth theta1*y1, predation
/// theta2*y1*y2, death theta3*y2. Records the state at each entry of
/// obs_times (non-decreasing, measured from time zero). Stops with
/// overflow = true once more than event_cap events have occurred.
LvResult lv_gillespie(const Vector& theta, LvState initial, const std::vector<double>& obs_times,
                      RngStream& rng, std::uint64_t event_cap = 1'000'000);

class LotkaVolterraModel : public Model, public StateSpaceModel {
 public:
  LotkaVolterraModel(LvState initial, double tau, std::size_t n_obs,
                     std::uint64_t event_cap = 1'000'000);
  std::string name() const override { return "lv"; }
  std::vector<std::string> param_names() const override { return {"theta1", "theta2", "theta3"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  /// Dataset rows are the states at times 0, tau, ..., n_obs * tau.
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;
  std::vector<Transform> working_transform() const override;

  std::vector<std::string> state_param_names() const override { return param_names(); }
  const Prior& state_prior() const override { return *prior_; }
  int state_dim() const override { return 2; }
  std::optional<Vector> propagate(const Vector& theta, const Vector& state, double dt,
                                  RngStream& rng) const override;
  std::vector<Transform> state_working_transform() const override { return working_transform(); }
  StateSequence to_sequence(const Dataset& data) const override;

  double tau() const { return tau_; }
  std::size_t n_obs() const { return n_obs_; }
  LvState initial() const { return initial_; }

 private:
  LvState initial_;
  double tau_;
  std::size_t n_obs_;
  std::uint64_t event_cap_;
  PriorPtr prior_;
};

// ---------------------------------------------------------------------------
// Ricker map with Poisson observations

struct RickerResult {
  std::vector<double> counts;
  /// Latent N_t for t = 51..100.
  std::vector<double> latent;
  bool non_finite = false;
};

/// theta = (log r, sigma_e, phi); N_0 = 1; 100 steps; returns the Poisson
/// observations for t = 51..100.
RickerResult ricker_simulate(const Vector& theta, RngStream& rng);

class RickerModel : public Model {
 public:
  RickerModel();
  std::string name() const override { return "ricker"; }
  std::vector<std::string> param_names() const override { return {"log_r", "sigma_e", "phi"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;
  /// Datasets with 45 or more zero counts are discarded.
  bool discard(const Dataset& data) const override;
  std::vector<Transform> working_transform() const override;

  static constexpr int kZeroDiscardThreshold = 45;

 private:
  PriorPtr prior_;
};

// ---------------------------------------------------------------------------
// M/G/1 queue

/// Inter-departure times of the first n customers of an initially empty
/// queue with Uniform[theta1, theta2] service and Exp(theta3) arrivals.
std::vector<double> mg1_simulate(const Vector& theta, std::size_t n, RngStream& rng);

class Mg1Model : public Model {
 public:
  explicit Mg1Model(std::size_t n = 50);
  std::string name() const override { return "mg1"; }
  std::vector<std::string> param_names() const override { return {"theta1", "theta2", "theta3"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;
  std::size_t n() const { return n_; }

 private:
  std::size_t n_;
  PriorPtr prior_;
};

// ---------------------------------------------------------------------------
// Tuberculosis transmission (birth-death-mutation)

struct TbResult {
  /// Cluster sizes, sorted descending.
  std::vector<std::int64_t> clusters;
  int restarts = 0;
  bool restart_cap_hit = false;
};

/// Embedded jump chain of the birth (a), death (d), mutation (1 - a - d)
/// process started from one case. On reaching n_target cases, samples
/// sample_size cases without replacement and returns genotype cluster
/// sizes. Extinct runs restart, up to restart_cap times.
TbResult tb_simulate(const Vector& theta, std::size_t n_target, std::size_t sample_size,
                     RngStream& rng, int restart_cap = 100);

/// (g / n, H = 1 - sum (n_i / n)^2) for cluster sizes n_i summing to n.
std::array<double, 2> tb_summaries(const std::vector<std::int64_t>& clusters);

/// The San Francisco genotype clusters: 282 singletons, 20 pairs, 13
/// triples, 4 fours, 2 fives and one each of 8, 10, 15, 23, 30.
std::vector<std::int64_t> tb_observed_clusters();

class TbModel : public Model {
 public:
  TbModel(std::size_t n_target = 1000, std::size_t sample_size = 100, int restart_cap = 100);
  std::string name() const override { return "tb"; }
  std::vector<std::string> param_names() const override { return {"a", "d"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;
  std::size_t sample_size() const { return sample_size_; }
  std::size_t n_target() const { return n_target_; }

 private:
  std::size_t n_target_;
  std::size_t sample_size_;
  int restart_cap_;
  PriorPtr prior_;
};

// ---------------------------------------------------------------------------
// Analytic test models

/// theta ~ N(0, prior_var); y = n i.i.d. N(theta, 1).
class NormalMeanModel : public Model {
 public:
  NormalMeanModel(double prior_var, std::size_t n);
  std::string name() const override { return "normal-mean"; }
  std::vector<std::string> param_names() const override { return {"theta"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;

  double prior_var() const { return prior_var_; }
  std::size_t n() const { return n_; }
  /// n prior_var / (n prior_var + 1): E(theta | y) = shrinkage * ybar.
  double shrinkage() const;
  double posterior_mean(double ybar) const { return shrinkage() * ybar; }
  double posterior_var() const;

 private:
  double prior_var_;
  std::size_t n_;
  PriorPtr prior_;
};

/// theta = sigma^2 ~ Uniform[lo, hi]; y = m i.i.d. N(0, sigma^2). As a state
/// space model each observation is one independent data source.
class NormalVarianceModel : public Model, public StateSpaceModel {
 public:
  NormalVarianceModel(std::size_t m, double prior_lo = 0.05, double prior_hi = 4.0);
  std::string name() const override { return "normal-variance"; }
  std::vector<std::string> param_names() const override { return {"sigma2"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;
  std::vector<Transform> working_transform() const override { return {Transform::Log}; }

  std::vector<std::string> state_param_names() const override { return param_names(); }
  const Prior& state_prior() const override { return *prior_; }
  int state_dim() const override { return 1; }
  std::optional<Vector> propagate(const Vector& theta, const Vector& state, double dt,
                                  RngStream& rng) const override;
  std::vector<Transform> state_working_transform() const override { return working_transform(); }
  StateSequence to_sequence(const Dataset& data) const override;

  std::size_t m() const { return m_; }

 private:
  std::size_t m_;
  PriorPtr prior_;
};

/// Random-walk state x_t = x_{t-1} + N(0, theta) observed exactly;
/// theta ~ Uniform[lo, hi].
class RandomWalkModel : public Model, public StateSpaceModel {
 public:
  RandomWalkModel(std::size_t n_obs, double prior_lo, double prior_hi);
  std::string name() const override { return "random-walk"; }
  std::vector<std::string> param_names() const override { return {"noise_var"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;
  std::vector<Transform> working_transform() const override { return {Transform::Log}; }

  std::vector<std::string> state_param_names() const override { return param_names(); }
  const Prior& state_prior() const override { return *prior_; }
  int state_dim() const override { return 1; }
  std::optional<Vector> propagate(const Vector& theta, const Vector& state, double dt,
                                  RngStream& rng) const override;
  std::vector<Transform> state_working_transform() const override { return working_transform(); }
  StateSequence to_sequence(const Dataset& data) const override;

 private:
  std::size_t n_obs_;
  PriorPtr prior_;
};

/// theta uniform on {1..5}; y is one draw from row theta of a fixed 5x5
/// stochastic matrix. The exact posterior is available by enumeration.
class DiscreteToyModel : public Model {
 public:
  DiscreteToyModel();
  std::string name() const override { return "discrete-toy"; }
  std::vector<std::string> param_names() const override { return {"theta"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;

  const Matrix& transition() const { return transition_; }
  /// Posterior over theta = 1..5 given observation y (1..5).
  Vector exact_posterior(int y) const;

 private:
  Matrix transition_;
  PriorPtr prior_;
};

/// Wraps a 2-parameter model so it is parameterised by (u, v) = M (a, d).
class RotatedModel : public Model {
 public:
  RotatedModel(ModelPtr base, Matrix rotation);
  std::string name() const override { return base_->name() + "-rotated"; }
  std::vector<std::string> param_names() const override { return {"u", "v"}; }
  const Prior& prior() const override { return *prior_; }
  PriorPtr prior_ptr() const override { return prior_; }
  std::optional<Dataset> simulate(const Vector& theta, RngStream& rng) const override;
  bool discard(const Dataset& data) const override { return base_->discard(data); }

  const Matrix& rotation() const { return rotation_; }
  Vector to_base(const Vector& rotated) const { return rotation_.transpose() * rotated; }
  Vector from_base(const Vector& base) const { return rotation_ * base; }

 private:
  ModelPtr base_;
  Matrix rotation_;
  PriorPtr prior_;
};

/// Builds a model by id ("gk", "lv", "ricker", "mg1", "tb", "normal-mean",
/// "normal-variance", "discrete-toy", "random-walk"). `size` overrides the
/// number of observations where the model has one; zero keeps the default.
ModelPtr make_model(const std::string& id, std::size_t size = 0);
std::vector<std::string> model_ids();

}  // namespace abc
