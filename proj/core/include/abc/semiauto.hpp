#pragma once

#include "abc/engines.hpp"
#include "abc/kernels.hpp"
#include "abc/models.hpp"
#include "abc/summaries.hpp"

#include <optional>
#include <string>
#include <vector>

namespace abc {

/// Componentwise [min, max] of the positively weighted pilot draws. Throws
/// if the sample is empty or the range collapses in some coordinate.
TrainingRegion pilot_region(const WeightedSample& pilot);

/// Simulated (theta, y) pairs for regression.
struct TrainingSet {
  std::vector<Vector> thetas;
  std::vector<Dataset> data;
  std::size_t simulations = 0;
  std::size_t discarded = 0;
  std::size_t simulator_rejections = 0;

  std::size_t size() const { return thetas.size(); }
};

/// Runs `m` simulations from the prior truncated to `region` (or the prior
/// itself when no region is given). Datasets hit by a simulator rejection
/// or the model's discard rule are dropped and counted. Throws Error when
/// the truncated prior rejects more than 99.9% of box draws.
TrainingSet generate_training(const Model& model, const std::optional<TrainingRegion>& region,
                              std::size_t m, const RunOptions& options);

/// Per-parameter linear predictor of theta from features, fitted by least
/// squares on standardised features. apply() returns B f(y) without
/// intercepts; predict() includes them.
class LearnedSummary : public SummaryMap {
 public:
  LearnedSummary() = default;

  std::string name() const override { return "learned(" + (features ? features->name() : std::string()) + ")"; }
  int dim() const override { return static_cast<int>(coefficients.rows()); }
  Vector apply(const Dataset& data) const override;
  Vector predict(const Dataset& data) const;

  /// Rows of (f - feature_mean) / feature_scale, the regression design.
  Matrix standardize(const std::vector<Vector>& raw) const;

  double mean_bic() const;

  FeaturePtr features;
  /// p x q, on the raw feature scale.
  Matrix coefficients;
  Vector intercepts;
  /// Standard errors of `coefficients` (NaN where the ridge fallback ran).
  Matrix coefficient_se;
  Vector feature_mean;
  Vector feature_scale;
  std::vector<double> rss;
  std::vector<double> bic;
  std::size_t training_size = 0;
  /// The Gram matrix was numerically singular and the ridge fallback ran.
  bool ridge = false;
};

/// Fits theta_i = b0 + b_i f(y) for every parameter. BIC per parameter is
/// M ln(RSS / M) + (q + 1) ln M.
LearnedSummary fit_summaries(const std::vector<Vector>& thetas, const std::vector<Vector>& features,
                             FeaturePtr feature_map);
LearnedSummary fit_summaries(const TrainingSet& training, FeaturePtr feature_map, int threads = 1);

struct FeatureSelection {
  std::size_t best = 0;
  std::vector<LearnedSummary> fits;
  std::vector<double> mean_bic;
};

/// Fits every candidate on the same training set and picks the smallest
/// mean BIC.
FeatureSelection select_features(const TrainingSet& training, const std::vector<FeaturePtr>& candidates,
                                 int threads = 1);

struct RotationFit {
  /// Rows are the u and v directions: u is constant along the fitted line.
  Matrix rotation;
  /// Angle of the fitted line to the first axis.
  double angle = 0.0;
  bool swapped = false;
  bool low_anisotropy = false;
};

/// Least-squares line through a 2-D weighted sample, and the rotation that
/// takes the line direction to the second coordinate.
RotationFit tb_rotation(const WeightedSample& pilot);

enum class LossScaling { Identity, PilotInverseVariance };

struct SemiautoConfig {
  /// Total simulated datasets across all stages.
  std::size_t budget = 100000;
  double pilot_fraction = 0.25;
  double training_fraction = 0.25;
  double pilot_accept = 0.01;
  double final_accept = 0.01;
  /// Summaries for the pilot run; required unless skip_pilot.
  SummaryPtr pilot_summary;
  /// Simulations spent estimating the pilot summary scales (taken out of
  /// the pilot budget).
  std::size_t pilot_scale_sims = 1000;
  bool skip_pilot = false;
  /// Prior box used by the pilot (and by training when the pilot is
  /// skipped). Required for improper priors.
  std::optional<TrainingRegion> pilot_box;
  std::vector<FeaturePtr> candidates;
  LossScaling loss = LossScaling::PilotInverseVariance;
  bool rotate = false;
  int threads = 0;
};

struct SemiautoResult {
  /// Final ABC draws in the model's own parameterisation.
  WeightedSample sample;
  /// Truncation box for training and the final run; empty means the prior.
  std::optional<TrainingRegion> region;
  FeatureSelection selection;
  Matrix loss_metric;
  std::optional<RotationFit> rotation;
  std::size_t pilot_simulations = 0;
  std::size_t training_simulations = 0;
  std::size_t final_simulations = 0;
  double pilot_bandwidth = 0.0;
  double final_bandwidth = 0.0;
  std::size_t training_discarded = 0;

  const LearnedSummary& summary() const { return selection.fits.at(selection.best); }
};

/// Pilot ABC, training region, regression with BIC selection, and a final
/// rejection ABC on the truncated prior using the learned summaries.
SemiautoResult semiauto_run(const ModelPtr& model, const Dataset& observed, const SemiautoConfig& config,
                            const RunOptions& options);

/// diag(1 / var) of summaries simulated from the (truncated) prior.
Matrix summary_scale_metric(const AbcProblem& problem, std::size_t n, const RunOptions& options);

}  // namespace abc
