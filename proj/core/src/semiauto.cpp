#include "abc/semiauto.hpp"

#include "abc/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace abc {

TrainingRegion pilot_region(const WeightedSample& pilot) {
  pilot.validate();
  TrainingRegion region;
  bool any = false;
  for (std::size_t i = 0; i < pilot.size(); ++i) {
    if (!(pilot.weights[i] > 0.0)) continue;
    if (!any) {
      region.lower = region.upper = pilot.points[i];
      any = true;
    } else {
      region.lower = region.lower.cwiseMin(pilot.points[i]);
      region.upper = region.upper.cwiseMax(pilot.points[i]);
    }
  }
  if (!any) throw std::invalid_argument("pilot_region: pilot sample has no positively weighted draws");
  for (int j = 0; j < region.dim(); ++j)
    if (!(region.lower[j] < region.upper[j]))
      throw Error("pilot_region: pilot range of parameter " + std::to_string(j) +
                  " is a single point; enlarge the pilot run or its acceptance rate");
  return region;
}

TrainingSet generate_training(const Model& model, const std::optional<TrainingRegion>& region,
                              std::size_t m, const RunOptions& options) {
  const TruncatedPriorSampler sampler(model.prior(), region);
  TrainingSet out;
  out.simulations = m;
  if (m == 0) return out;
  if (region) {
    RngStream probe = seed_stream(options.seed, options.label + "-probe", 0);
    if (sampler.acceptance_estimate(probe, 100000) < 1e-3)
      throw Error("generate_training: the truncated prior rejects more than 99.9% of draws from the region");
  }

  std::vector<Vector> thetas(m);
  std::vector<std::optional<Dataset>> data(m);
  std::vector<char> discarded(m, 0);
  parallel_for(m, resolve_threads(options.threads), [&](std::size_t j) {
    RngStream rng = seed_stream(options.seed, options.label, j);
    thetas[j] = sampler.draw(rng);
    data[j] = model.simulate(thetas[j], rng);
    if (data[j] && model.discard(*data[j])) {
      discarded[j] = 1;
      data[j].reset();
    }
  });
  for (std::size_t j = 0; j < m; ++j) {
    if (!data[j]) {
      if (discarded[j]) ++out.discarded;
      else ++out.simulator_rejections;
      continue;
    }
    out.thetas.push_back(std::move(thetas[j]));
    out.data.push_back(std::move(*data[j]));
  }
  return out;
}

RotationFit tb_rotation(const WeightedSample& pilot) {
  pilot.validate();
  if (pilot.dim() != 2) throw std::invalid_argument("tb_rotation: needs a 2-parameter sample");
  double total = 0.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < pilot.size(); ++i) {
    mean += pilot.weights[i] * pilot.points[i];
    total += pilot.weights[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("tb_rotation: zero total weight");
  mean /= total;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < pilot.size(); ++i) {
    const Eigen::Vector2d c = pilot.points[i] - mean;
    cov += pilot.weights[i] * c * c.transpose();
  }
  cov /= total;
  if (!(cov.trace() > 0.0)) throw std::invalid_argument("tb_rotation: pilot sample has no spread");

  RotationFit fit;
  // Regress d on a; a (near) vertical cloud regresses a on d instead.
  if (cov(0, 0) > 1e-10 * cov(1, 1)) {
    fit.angle = std::atan(cov(0, 1) / cov(0, 0));
  } else {
    fit.swapped = true;
    fit.angle = std::atan2(1.0, cov(0, 1) / cov(1, 1));
  }
  const double s = std::sin(fit.angle);
  const double c = std::cos(fit.angle);
  fit.rotation.resize(2, 2);
  fit.rotation << s, -c,
                  c, s;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Vector2d values = eig.eigenvalues();
  fit.low_anisotropy = values[0] > 0.25 * values[1];
  return fit;
}

Matrix summary_scale_metric(const AbcProblem& problem, std::size_t n, const RunOptions& options) {
  const TruncatedPriorSampler sampler(problem.prior(), problem.region);
  const int d = problem.summary->dim();
  std::vector<Vector> sims(n);
  std::vector<char> ok(n, 0);
  parallel_for(n, resolve_threads(options.threads), [&](std::size_t i) {
    RngStream rng = seed_stream(options.seed, options.label, i);
    const Vector theta = sampler.draw(rng);
    ok[i] = simulate_summary(problem, theta, rng, sims[i]) == SimStatus::Ok;
  });
  Vector mean = Vector::Zero(d);
  double count = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (ok[i]) {
      mean += sims[i];
      count += 1.0;
    }
  if (count < 2.0) throw Error("summary_scale_metric: fewer than two usable simulations");
  mean /= count;
  Vector var = Vector::Zero(d);
  for (std::size_t i = 0; i < n; ++i)
    if (ok[i]) var += (sims[i] - mean).cwiseAbs2();
  var /= count - 1.0;
  // Summaries that never vary carry no information; give them unit weight.
  for (int j = 0; j < d; ++j)
    if (!(var[j] > 0.0)) var[j] = 1.0;
  return var.cwiseInverse().asDiagonal().toDenseMatrix();
}

namespace {

WeightedSample rotate_points(const WeightedSample& sample, const Matrix& m) {
  WeightedSample out = sample;
  for (Vector& point : out.points) point = m * point;
  return out;
}

Vector weighted_variance(const WeightedSample& sample) {
  const Vector mean = weighted_mean(sample);
  Vector var = Vector::Zero(mean.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    var += sample.weights[i] * (sample.points[i] - mean).cwiseAbs2();
    total += sample.weights[i];
  }
  return var / total;
}

}  // namespace

SemiautoResult semiauto_run(const ModelPtr& model, const Dataset& observed, const SemiautoConfig& config,
                            const RunOptions& options) {
  if (!model) throw std::invalid_argument("semiauto_run: no model");
  if (config.candidates.empty()) throw std::invalid_argument("semiauto_run: no candidate feature maps");
  if (!(config.pilot_fraction >= 0.0 && config.training_fraction > 0.0 &&
        config.pilot_fraction + config.training_fraction < 1.0))
    throw std::invalid_argument("semiauto_run: budget fractions must leave a positive final share");
  const auto share = [&](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(config.budget))); };
  const std::size_t pilot_n = config.skip_pilot ? 0 : share(config.pilot_fraction);
  const std::size_t training_n = share(config.training_fraction);
  // A skipped pilot's share goes to the final run.
  const std::size_t final_n = config.budget - pilot_n - training_n;
  const int threads = config.threads ? config.threads : options.threads;
  auto stage = [&](const std::string& label) { return RunOptions{options.seed, threads, options.label + "/" + label}; };

  SemiautoResult result;
  ModelPtr working_model = model;
  std::optional<WeightedSample> pilot_sample;

  if (!config.skip_pilot) {
    if (!config.pilot_summary) throw std::invalid_argument("semiauto_run: the pilot needs a summary map");
    if (!model->prior().proper() && !config.pilot_box)
      throw std::invalid_argument("semiauto_run: an improper prior needs a pilot box");
    AbcProblem pilot;
    pilot.model = model;
    pilot.summary = config.pilot_summary;
    pilot.s_obs = config.pilot_summary->apply(observed);
    pilot.region = config.pilot_box;
    const std::size_t scale_n = std::min(config.pilot_scale_sims, pilot_n / 2);
    pilot.kernel = DensityKernel(KernelShape::UniformEllipsoid, summary_scale_metric(pilot, scale_n, stage("pilot-scale")), 1.0);
    const QuantileRejectionResult run =
        abc_rejection_quantile(pilot, pilot_n - scale_n, config.pilot_accept, stage("pilot"), false);
    result.pilot_simulations = pilot_n;
    result.pilot_bandwidth = run.bandwidth;
    if (run.result.accepted == 0) throw Error("semiauto_run: the pilot accepted nothing");
    pilot_sample = run.result.sample;
  }

  if (config.rotate) {
    if (!pilot_sample) throw std::invalid_argument("semiauto_run: rotation needs a pilot run");
    result.rotation = tb_rotation(*pilot_sample);
    working_model = std::make_shared<RotatedModel>(model, result.rotation->rotation);
    pilot_sample = rotate_points(*pilot_sample, result.rotation->rotation);
  }

  // Without a pilot or a box the untruncated prior is used throughout.
  if (pilot_sample) result.region = pilot_region(*pilot_sample);
  else if (config.pilot_box) result.region = *config.pilot_box;
  else if (!model->prior().proper()) throw std::invalid_argument("semiauto_run: an improper prior needs a pilot box");
  if (result.region) result.region->validate();

  const TrainingSet training = generate_training(*working_model, result.region, training_n, stage("train"));
  result.training_simulations = training_n;
  result.training_discarded = training.discarded;
  result.selection = select_features(training, config.candidates, threads);

  const int p = working_model->param_dim();
  Vector scales = Vector::Ones(p);
  if (config.loss == LossScaling::PilotInverseVariance) {
    if (pilot_sample && pilot_sample->size() >= 2) {
      scales = weighted_variance(*pilot_sample);
    } else {
      WeightedSample prior_draws;
      for (const Vector& theta : training.thetas) prior_draws.push_back(theta, 1.0);
      scales = weighted_variance(prior_draws);
    }
    for (int j = 0; j < p; ++j)
      if (!(scales[j] > 0.0)) scales[j] = 1.0;
  }
  result.loss_metric = scales.cwiseInverse().asDiagonal().toDenseMatrix();

  auto learned = std::make_shared<LearnedSummary>(result.summary());
  AbcProblem final_problem;
  final_problem.model = working_model;
  final_problem.summary = learned;
  final_problem.s_obs = learned->apply(observed);
  final_problem.kernel = DensityKernel(KernelShape::UniformEllipsoid, result.loss_metric, 1.0);
  final_problem.region = result.region;
  const QuantileRejectionResult final_run =
      abc_rejection_quantile(final_problem, final_n, config.final_accept, stage("final"), true);
  result.final_simulations = final_n;
  result.final_bandwidth = final_run.bandwidth;
  result.sample = final_run.result.sample;
  if (result.rotation) result.sample = rotate_points(result.sample, result.rotation->rotation.transpose());
  return result;
}

}  // namespace abc
