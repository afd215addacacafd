#pragma once

#include "abc/engines.hpp"
#include "abc/kernels.hpp"
#include "abc/models.hpp"

#include <string>
#include <vector>

namespace abc {

/// How the state a particle is propagated from is chosen.
enum class LatentMode {
  /// From the observed previous state (requires every component observed).
  Conditional,
  /// From the particle's own simulated state, resampled with its theta.
  Carried,
};

struct SequentialConfig {
  std::size_t particles = 1000;
  /// Gaussian kernel over the observed components; bandwidth h.
  DensityKernel kernel = DensityKernel::gaussian(1);
  bool noisy = false;
  /// Liu-West shrinkage a.
  double shrinkage = 0.98;
  /// Observed state components; empty means all.
  std::vector<bool> mask;
  LatentMode latent = LatentMode::Conditional;
};

struct SequentialStep {
  double ess = 0.0;
  /// Weighted posterior mean after assimilating this observation.
  Vector mean;
  /// Noisy-mode perturbation h x_j (zero in standard mode).
  Vector perturbation;
  bool jitter_skipped = false;
};

struct SequentialResult {
  /// Weighted particles after the last observation, before rejuvenation.
  WeightedSample particles;
  std::vector<SequentialStep> trace;
};

/// Sequential ABC with Liu-West kernel-density rejuvenation. Streams:
/// propagation (seed, label + "-prop", step << 32 | particle), rejuvenation
/// (seed, label + "-rejuv", step), noise (seed, label + "-noise", step).
SequentialResult seq_abc(const StateSpaceModel& model, const StateSequence& data,
                         const SequentialConfig& config, const RunOptions& options);

/// Liu-West refresh of a weighted cloud in working coordinates: systematic
/// resampling, shrinkage toward the weighted mean by a, and N(0,
/// (1 - a^2) C) jitter. Returns the resampled indices. `jitter_skipped` is
/// set when C is not positive-definite, in which case particles are only
/// resampled.
std::vector<std::size_t> liu_west_rejuvenate(std::vector<Vector>& working, const std::vector<double>& weights,
                                             double shrinkage, RngStream& rng, bool& jitter_skipped);

/// Systematic resampling indices for normalised or unnormalised weights.
std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, std::size_t count,
                                             RngStream& rng);

struct BiasConfig {
  std::vector<std::size_t> n_grid{25, 50, 100};
  std::size_t replications = 20;
  double tau = 0.1;
  /// Kernel bandwidth; zero means sqrt(tau).
  double bandwidth = 0.0;
  std::vector<bool> mask;
  std::size_t particles = 1000;
  double shrinkage = 0.98;
  Vector theta_true = Vector{{0.5, 0.0025, 0.3}};
  LvState initial{100, 100};
  std::size_t bootstrap = 1000;
};

struct BiasRow {
  std::size_t n_obs = 0;
  std::string param;
  std::string method;
  double abs_bias = 0.0;
  double rmse = 0.0;
};

struct BiasResult {
  std::vector<BiasRow> rows;
  /// estimates[method][replicate][grid index]: posterior mean vectors.
  std::vector<std::vector<std::vector<Vector>>> estimates;
  /// Share of bootstrap resamples of replicates in which standard |bias|
  /// exceeds noisy |bias| for theta1 at the largest n.
  double standard_worse_fraction = 0.0;
  /// Share of bootstrap resamples in which noisy |bias| for theta1 is
  /// smaller at the largest n than at the smallest n.
  double noisy_improves_fraction = 0.0;
  std::size_t failures = 0;
};

/// Simulates R Lotka-Volterra datasets at theta_true, runs standard and
/// noisy sequential ABC on each, and reports absolute bias and root mean
/// squared error of the posterior mean at every n in the grid.
BiasResult bias_experiment(const BiasConfig& config, const RunOptions& options);

}  // namespace abc
