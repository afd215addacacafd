#pragma once

#include "abc/engines.hpp"
#include "abc/kernels.hpp"
#include "abc/models.hpp"
#include "abc/summaries.hpp"

#include <functional>
#include <string>
#include <vector>

namespace abc {

/// One or more point estimators computed by a single run (for example ABC
/// output and its regression-corrected version). It may throw Error, which
/// is recorded as a failure of every output on that dataset.
struct LossMethod {
  std::vector<std::string> names;
  std::function<std::vector<Vector>(const Dataset& data, const RunOptions& options)> estimate;
};

LossMethod single_method(std::string name, std::function<Vector(const Dataset&, const RunOptions&)> estimate);

using ThetaGenerator = std::function<Vector(RngStream& rng)>;

struct LossRow {
  std::string method;
  std::string parameter;
  double mean_loss = 0.0;
  std::size_t n_datasets = 0;
  std::size_t n_failures = 0;
};

struct LossTable {
  std::vector<LossRow> rows;
  /// Output names, methods flattened in order.
  std::vector<std::string> outputs;
  /// truths[r] and estimates[output][r] (empty vector on failure).
  std::vector<Vector> truths;
  std::vector<std::vector<Vector>> estimates;
  std::vector<std::vector<std::string>> failures;
};

/// Simulates R (theta, y) pairs from stream (seed, label + "-data", r),
/// then runs every method on every dataset with seed derive_seed(seed,
/// label + "-" + first output name, r). Mean squared error per parameter is
/// over the datasets on which that output succeeded.
LossTable loss_table(const std::vector<LossMethod>& methods, const Model& model, std::size_t replications,
                     const ThetaGenerator& truth, const RunOptions& options);

/// Posterior sample for one dataset; used by the calibration study.
using PosteriorEngine = std::function<WeightedSample(const Dataset& data, const RunOptions& options)>;

struct CoverageResult {
  double level = 0.0;
  std::size_t replications = 0;
  std::vector<std::size_t> hits;
  std::vector<double> frequency;
  std::vector<double> standard_error;
  /// Exact binomial band for the hit count at 99%, as frequencies.
  double band_lower = 0.0;
  double band_upper = 0.0;
  std::size_t failures = 0;

  bool inside_band(std::size_t param) const {
    return frequency.at(param) >= band_lower && frequency.at(param) <= band_upper;
  }
};

/// theta ~ prior, y ~ model, then checks whether theta lies in the central
/// `level` interval of the engine's posterior, per parameter. Replication r
/// uses stream (seed, label + "-data", r) and engine seed derive_seed(seed,
/// label + "-engine", r); replications run in parallel with one thread
/// each.
CoverageResult calibration_study(const Model& model, const PosteriorEngine& engine, double level,
                                 std::size_t replications, const RunOptions& options);

/// Noisy (or standard) rejection ABC with a fixed bandwidth; the
/// perturbation uses stream (seed, "noise", 0).
PosteriorEngine rejection_engine(ModelPtr model, SummaryPtr summary, DensityKernel kernel, std::size_t proposals,
                                 bool noisy);

/// E(theta | y) for the normal mean model, shrinkage * ybar.
class NormalPosteriorMeanMap : public SummaryMap {
 public:
  explicit NormalPosteriorMeanMap(double shrinkage) : shrinkage_(shrinkage) {}
  std::string name() const override { return "posterior-mean"; }
  int dim() const override { return 1; }
  Vector apply(const Dataset& data) const override;

 private:
  double shrinkage_;
};

/// E[x' A x] for x with density proportional to the kernel at unit
/// bandwidth.
double kernel_second_moment(const DensityKernel& kernel, const Matrix& loss);

struct ExpansionRow {
  double h = 0.0;
  double predicted = 0.0;
  double noisy_excess = 0.0;
  double noisy_se = 0.0;
  double standard_excess = 0.0;
  double standard_se = 0.0;
  /// Monte Carlo standard error exceeds 10% of the prediction.
  bool noisy_flagged = false;
};

struct ExpansionConfig {
  double prior_var = 1.0;
  std::size_t n = 10;
  std::vector<double> h_grid{0.2, 0.4};
  std::size_t replications = 1000;
  std::size_t proposals = 5000;
};

/// Excess quadratic loss of the ABC posterior mean over trace(A Sigma) on
/// the normal mean model, using the exact posterior mean as summary and
/// the uniform kernel on [-1/2, 1/2]. Since E(theta | y_i) is known, the
/// excess of one replication is (S(y) - mean of accepted S(y_i))^2, which
/// removes the posterior variance from the Monte Carlo noise.
std::vector<ExpansionRow> loss_expansion_check(const ExpansionConfig& config, const RunOptions& options);

struct DominanceRow {
  std::string competitor;
  double abc_loss = 0.0;
  double competitor_loss = 0.0;
  /// Standard error of the paired loss difference.
  double difference_se = 0.0;
  /// abc_loss <= competitor_loss + 3 difference_se.
  bool abc_not_worse = false;
};

struct DominanceConfig {
  double prior_var = 1.0;
  std::size_t n = 10;
  std::size_t replications = 500;
  std::size_t proposals = 20000;
  double bandwidth = 0.05;
};

struct Competitor {
  std::string name;
  std::function<double(double s)> estimate;
};

/// Quadratic loss of the small-h ABC posterior mean against fixed functions
/// of the summary S(y) = E(theta | y) over prior-predictive draws.
std::vector<DominanceRow> estimator_dominance_check(const DominanceConfig& config,
                                                    const std::vector<Competitor>& competitors,
                                                    const RunOptions& options);

struct ScalingResult {
  std::vector<double> bandwidths;
  std::vector<double> acceptance;
  /// Least-squares slope of log acceptance on log h.
  double slope = 0.0;
};

/// Prior-predictive acceptance rate of rejection ABC at each bandwidth; the
/// same simulations are reused across bandwidths.
ScalingResult acceptance_scaling(const AbcProblem& problem, const std::vector<double>& bandwidths,
                                 std::size_t n, const RunOptions& options);

}  // namespace abc
