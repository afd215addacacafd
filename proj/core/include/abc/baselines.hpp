#pragma once

#include "abc/engines.hpp"
#include "abc/kernels.hpp"
#include "abc/models.hpp"
#include "abc/summaries.hpp"

#include <functional>
#include <string>
#include <vector>

namespace abc {

enum class CorrectionWeights { Kernel, Uniform };

struct RegressionCorrection {
  WeightedSample sample;
  /// p x d slopes of theta on (s - s_obs).
  Matrix slopes;
  Vector intercept;
  std::size_t acceptances = 0;
  double condition_number = 0.0;
  /// False when the stability gate failed; `sample` is then the input.
  bool applied = false;
  std::string warning;
};

/// Local-linear regression adjustment theta* = theta - B (s - s_obs), with
/// B fitted by weighted least squares over the positively weighted draws.
/// Needs at least 10 (p + 1) acceptances and a full-rank design.
RegressionCorrection beaumont_correct(const WeightedSample& sample, const Vector& s_obs,
                                      CorrectionWeights weighting = CorrectionWeights::Kernel);

/// Log density of s_obs under N(mean, cov + eps I) fitted to `sims`, where
/// eps = max(1e-8 trace(cov) / d, 1e-10). The replicates are sorted before
/// the moments are formed, so the value does not depend on their order.
double synthetic_loglik(std::vector<Vector> sims, const Vector& s_obs);

struct SyntheticLikelihoodConfig {
  /// Simulations per proposed theta; must exceed d + 2.
  std::size_t replicates = 500;
  std::size_t length = 2000;
  Matrix proposal_cov;
  Vector theta0;
  std::vector<Transform> transform;
  double burn_in_fraction = 0.1;
};

struct SyntheticLikelihoodResult {
  WeightedSample sample;
  std::size_t steps = 0;
  std::size_t accepted_moves = 0;
  std::size_t simulations = 0;
  double acceptance_rate() const {
    return steps ? static_cast<double>(accepted_moves) / static_cast<double>(steps) : 0.0;
  }
};

/// Metropolis-Hastings on log L_s(theta) + log prior. Proposal k uses
/// replicate streams (seed, label, k * R + r); the replicates run in
/// parallel.
SyntheticLikelihoodResult synthetic_likelihood_mcmc(const AbcProblem& problem,
                                                    const SyntheticLikelihoodConfig& config,
                                                    const RunOptions& options);

struct NelderMeadConfig {
  std::size_t max_evaluations = 2000;
  double f_tolerance = 1e-8;
  double x_tolerance = 1e-8;
};

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
  /// Every evaluated objective value was identical.
  bool flat = false;
  /// Best value after each iteration.
  std::vector<double> trace;
};

/// Derivative-free simplex minimisation. Non-finite objective values are
/// treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& objective, const Vector& x0,
                             const Vector& step, const NelderMeadConfig& config = {});

struct IndirectConfig {
  std::size_t replicates = 50;
  /// Metric on the auxiliary statistics; empty means diag(1 / var) of the
  /// replicate auxiliaries at theta0.
  Matrix metric;
  Vector theta0;
  /// Initial simplex step in working coordinates; empty means 10% of
  /// |theta0| (0.1 where theta0 is zero).
  Vector step;
  NelderMeadConfig optimizer;
};

struct IndirectResult {
  Vector estimate;
  double objective = 0.0;
  std::size_t evaluations = 0;
  std::size_t simulations = 0;
  /// False when the simplex search hit its evaluation cap or the objective
  /// was flat.
  bool converged = false;
  bool flat = false;
  std::vector<double> trace;
};

/// Minimises the Mahalanobis distance between the observed auxiliaries and
/// the mean auxiliaries of `replicates` simulations at theta. Replicate r
/// uses stream (seed, label, r) at every theta (common random numbers).
/// Works in the model's working coordinates; theta outside the prior
/// support scores +inf.
IndirectResult indirect_inference(const Model& model, const SummaryPtr& auxiliary, const Dataset& observed,
                                  const IndirectConfig& config, const RunOptions& options);

/// Inter-departure density of the M/G/1 queue in steady state, treating
/// observations as independent: busy with probability rho = theta3 (theta1
/// + theta2) / 2, otherwise an Exp(theta3) idle period precedes the service.
double mg1_steady_state_loglik(const Vector& theta, const std::vector<double>& y);

/// theta2 maximising the steady-state likelihood.
double mg1_steady_state_theta2(const std::vector<double>& y);

/// (mean, min, theta2 estimate) of M/G/1 inter-departure times. The cheap
/// theta2 estimate is max y; the exact one maximises the steady-state
/// likelihood numerically.
class Mg1AuxiliaryMap : public SummaryMap {
 public:
  explicit Mg1AuxiliaryMap(bool steady_state_mle = false) : mle_(steady_state_mle) {}
  std::string name() const override { return mle_ ? "mg1-aux-mle" : "mg1-aux"; }
  int dim() const override { return 3; }
  Vector apply(const Dataset& data) const override;

 private:
  bool mle_;
};

}  // namespace abc
