#pragma once

#include "abc/kernels.hpp"
#include "abc/models.hpp"
#include "abc/rng.hpp"
#include "abc/summaries.hpp"
#include "abc/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace abc {

/// Axis-aligned box of parameter values.
struct TrainingRegion {
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& theta) const;
  /// Throws std::invalid_argument unless lower < upper componentwise and
  /// both bounds are finite.
  void validate() const;
};

/// Everything an ABC engine needs: a simulator, a summary map, the observed
/// summary, the acceptance kernel and the (possibly truncated) prior.
struct AbcProblem {
  ModelPtr model;
  SummaryPtr summary;
  Vector s_obs;
  DensityKernel kernel = DensityKernel::uniform(1);
  std::optional<TrainingRegion> region;

  void validate() const;
  const Prior& prior() const { return model->prior(); }
  /// log prior including truncation to the region; -inf outside.
  double log_prior(const Vector& theta) const;
};

enum class SimStatus { Ok, SimulatorRejected, Discarded, NonFinite };

/// Simulates a dataset at theta and applies the summary map. Simulator
/// rejections, model discard rules and non-finite summaries all come back
/// as a status other than Ok.
SimStatus simulate_summary(const AbcProblem& problem, const Vector& theta, RngStream& rng, Vector& out);

/// Draws from the prior truncated to an optional region. With a region the
/// draw is uniform in the box and thinned by the prior density; without a
/// region the prior is sampled directly.
class TruncatedPriorSampler {
 public:
  TruncatedPriorSampler(const Prior& prior, std::optional<TrainingRegion> region);
  Vector draw(RngStream& rng) const;
  /// Fraction of box draws accepted, estimated from `trials` draws.
  double acceptance_estimate(RngStream& rng, int trials) const;

 private:
  const Prior& prior_;
  std::optional<TrainingRegion> region_;
  double log_bound_ = 0.0;
};

/// Importance proposal g. A null proposal means g = prior (rejection mode).
class Proposal {
 public:
  virtual ~Proposal() = default;
  virtual Vector sample(RngStream& rng) const = 0;
  virtual double log_density(const Vector& theta) const = 0;
};

/// Independent normal proposal.
class GaussianProposal : public Proposal {
 public:
  GaussianProposal(Vector mean, Matrix covariance);
  Vector sample(RngStream& rng) const override;
  double log_density(const Vector& theta) const override;

 private:
  Vector mean_;
  Matrix covariance_;
  Eigen::LLT<Matrix> chol_;
  double log_norm_ = 0.0;
};

struct RunOptions {
  std::uint64_t seed = 1;
  int threads = 0;
  /// Stream label, so that different stages of one analysis never share
  /// randomness.
  std::string label = "abc";
};

struct ImportanceResult {
  WeightedSample sample;
  /// K((s - s_obs)/h) of every retained draw.
  std::vector<double> kernel_values;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t simulator_rejections = 0;
  double acceptance_rate() const {
    return proposals ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
  }
};

/// Importance/rejection ABC. Draw i uses stream (seed, label, i), so the
/// output does not depend on the thread count.
ImportanceResult abc_importance(const AbcProblem& problem, std::size_t n, const RunOptions& options,
                                const Proposal* proposal = nullptr);

struct McmcConfig {
  std::size_t length = 10000;
  /// Random-walk covariance in working coordinates.
  Matrix proposal_cov;
  Vector theta0;
  std::optional<Vector> s0;
  /// Empty means identity in every coordinate.
  std::vector<Transform> transform;
  double burn_in_fraction = 0.1;
  /// Propose theta +/- 1 per coordinate instead of a Gaussian step.
  bool integer_lattice = false;
  std::size_t init_attempts = 10000;
  bool keep_summaries = false;
};

struct McmcResult {
  /// Post burn-in chain, unit weights.
  WeightedSample sample;
  std::size_t steps = 0;
  std::size_t accepted_moves = 0;
  std::size_t simulations = 0;
  double acceptance_rate() const {
    return steps ? static_cast<double>(accepted_moves) / static_cast<double>(steps) : 0.0;
  }
};

/// MCMC ABC. Single chain, sequential; stream (seed, label, 0).
McmcResult abc_mcmc(const AbcProblem& problem, const McmcConfig& config, const RunOptions& options);

struct NoisyObservation {
  AbcProblem problem;
  Vector original;
  Vector perturbation;
};

/// Replaces s_obs by s_obs + h x with x ~ K, drawn once.
NoisyObservation make_noisy(const AbcProblem& problem, RngStream& rng);

struct BandwidthTuning {
  double bandwidth = 0.0;
  /// Every pilot distance was zero; the bandwidth is the smallest positive
  /// double.
  bool degenerate = false;
  std::size_t simulations = 0;
};

/// Chooses h so that roughly target_rate of prior-predictive draws are
/// accepted: a distance quantile for the uniform kernel, bisection on the
/// mean kernel value for the Gaussian kernel.
BandwidthTuning tune_bandwidth(const AbcProblem& problem, double target_rate, std::size_t pilot_n,
                               const RunOptions& options);

/// The same choice from precomputed whitened distances.
BandwidthTuning bandwidth_from_distances(std::vector<double> distances, KernelShape shape,
                                         double target_rate);

struct QuantileRejectionResult {
  ImportanceResult result;
  double bandwidth = 0.0;
};

/// Simulates n prior-predictive draws and keeps the fraction with the
/// smallest whitened distance: uniform-kernel rejection ABC whose bandwidth
/// is tuned on the same simulations. The problem's kernel bandwidth is
/// ignored; its metric is used.
QuantileRejectionResult abc_rejection_quantile(const AbcProblem& problem, std::size_t n,
                                               double accept_fraction, const RunOptions& options,
                                               bool keep_summaries = true);

}  // namespace abc
