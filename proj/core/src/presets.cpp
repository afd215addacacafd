#include "abc/baselines.hpp"
#include "abc/experiments.hpp"
#include "abc/harness.hpp"
#include "abc/semiauto.hpp"
#include "abc/sequential.hpp"
#include "abc/summaries.hpp"

#include <cmath>
#include <stdexcept>

namespace abc {

namespace {

struct Scale {
  std::size_t replications;
  std::size_t budget;
};

Scale pick(const std::string& profile, Scale smoke, Scale desk, Scale paper) {
  if (profile == "smoke") return smoke;
  if (profile == "paper") return paper;
  return desk;
}

/// Rejection ABC keeping the closest `fraction` of `budget` simulations,
/// with summaries scaled by diag(1 / var) from the first 1000 of the
/// budget. Returns the posterior mean and, when asked, the regression-
/// corrected posterior mean.
LossMethod comparison_method(const std::string& name, ModelPtr model, std::string summary, std::size_t budget,
                             double fraction, std::optional<TrainingRegion> region, bool with_regression) {
  std::vector<std::string> names{name};
  if (with_regression) names.push_back(name + "+reg");
  return LossMethod{names, [=](const Dataset& data, const RunOptions& options) {
                      AbcProblem problem;
                      problem.model = model;
                      problem.summary = make_summary(summary, *model, data);
                      problem.s_obs = problem.summary->apply(data);
                      problem.region = region;
                      const std::size_t scale_n = std::min<std::size_t>(1000, budget / 10);
                      problem.kernel = DensityKernel(KernelShape::UniformEllipsoid,
                                                     summary_scale_metric(problem, scale_n,
                                                                          RunOptions{options.seed, options.threads, "scale"}),
                                                     1.0);
                      const QuantileRejectionResult run = abc_rejection_quantile(
                          problem, budget - scale_n, fraction, RunOptions{options.seed, options.threads, "rejection"},
                          with_regression);
                      if (run.result.accepted == 0) throw Error("no acceptances");
                      std::vector<Vector> out{weighted_mean(run.result.sample)};
                      if (with_regression) {
                        const RegressionCorrection corrected = beaumont_correct(run.result.sample, problem.s_obs);
                        // A failed stability gate excludes the dataset for this output.
                        out.push_back(corrected.applied ? weighted_mean(corrected.sample)
                                                        : Vector::Constant(model->param_dim(), std::nan("")));
                      }
                      return out;
                    }};
}

/// Semi-automatic ABC; the second output is the learned linear predictor
/// applied to the data directly.
LossMethod semiauto_method(ModelPtr model, std::string pilot, std::vector<std::string> features, std::size_t budget,
                           std::optional<TrainingRegion> box, bool with_predictor) {
  std::vector<std::string> names{"semiauto"};
  if (with_predictor) names.push_back("semiauto-predictor");
  return LossMethod{names, [=](const Dataset& data, const RunOptions& options) {
                      SemiautoConfig config;
                      config.budget = budget;
                      config.pilot_summary = make_summary(pilot, *model, data);
                      config.pilot_scale_sims = std::min<std::size_t>(1000, budget / 20);
                      config.pilot_box = box;
                      for (const std::string& spec : features) config.candidates.push_back(make_summary(spec, *model, data));
                      const SemiautoResult result = semiauto_run(model, data, config, options);
                      if (result.sample.empty()) throw Error("no acceptances");
                      std::vector<Vector> out{weighted_mean(result.sample)};
                      if (with_predictor) out.push_back(result.summary().predict(data));
                      return out;
                    }};
}

void write_loss_table(RunContext& ctx, const LossTable& table, const std::vector<std::string>& param_names) {
  auto rows = ctx.csv("loss_table.csv", {"method", "parameter", "mean_loss", "n_datasets", "n_failures"});
  for (const LossRow& row : table.rows)
    rows->row({row.method, row.parameter, format_double(row.mean_loss), std::to_string(row.n_datasets),
               std::to_string(row.n_failures)});
  rows->close();
  auto est = ctx.csv("estimates.csv", {"dataset", "method", "parameter", "truth", "estimate"});
  for (std::size_t m = 0; m < table.outputs.size(); ++m)
    for (std::size_t r = 0; r < table.truths.size(); ++r)
      for (std::size_t k = 0; k < param_names.size(); ++k) {
        const int kk = static_cast<int>(k);
        const std::string estimate =
            table.estimates[m][r].size() ? format_double(table.estimates[m][r][kk]) : std::string();
        est->row({std::to_string(r), table.outputs[m], param_names[k], format_double(table.truths[r][kk]), estimate});
      }
  est->close();
  for (std::size_t m = 0; m < table.outputs.size(); ++m)
    for (std::size_t r = 0; r < table.truths.size(); ++r)
      if (!table.failures[m][r].empty())
        ctx.warn(table.outputs[m] + " failed on dataset " + std::to_string(r) + ": " + table.failures[m][r]);
}

void note_budget(RunContext& ctx, const LossTable& table, std::size_t budget) {
  for (const std::string& name : table.outputs) ctx.note_simulations(name, budget * table.truths.size());
}

// ---------------------------------------------------------------------------

void preset_gk_table(RunContext& ctx) {
  const std::string& profile = ctx.config().profile;
  const Scale scale = pick(profile, {2, 20000}, {20, 100000}, {50, 1000000});
  const std::size_t n = profile == "smoke" ? 100 : 1000;
  const auto model = std::make_shared<GkModel>(n);
  const std::vector<std::size_t> subsets =
      profile == "smoke" ? std::vector<std::size_t>{10, 20} : std::vector<std::size_t>{60, 100, 140};
  const int max_power = profile == "smoke" ? 2 : 4;
  std::vector<std::string> features;
  for (std::size_t m : subsets)
    for (int l = 1; l <= max_power; ++l)
      features.push_back(l == 1 ? "order-subset:" + std::to_string(m)
                                : "power:" + std::to_string(l) + ":order-subset:" + std::to_string(m));

  const std::vector<LossMethod> methods{
      comparison_method("comparison", model, "order-stats", scale.budget, 0.005, std::nullopt, false),
      semiauto_method(model, "order-stats", features, scale.budget, std::nullopt, false)};
  const Vector truth{{3.0, 1.0, 2.0, 0.5}};
  const LossTable table =
      loss_table(methods, *model, scale.replications, [truth](RngStream&) { return truth; }, ctx.options("gk-table"));
  write_loss_table(ctx, table, model->param_names());
  note_budget(ctx, table, scale.budget);
}

void preset_lv_bias(RunContext& ctx) {
  const std::string& profile = ctx.config().profile;
  BiasConfig config;
  if (profile == "smoke") {
    config.n_grid = {5, 10};
    config.replications = 2;
    config.particles = 100;
    config.bootstrap = 100;
  } else if (profile == "paper") {
    config.n_grid = {25, 50, 100, 200};
    config.replications = 100;
  }
  const BiasResult result = bias_experiment(config, ctx.options("lv-bias"));
  auto curve = ctx.csv("bias_curve.csv", {"n_obs", "param", "method", "abs_bias", "rmse"});
  for (const BiasRow& row : result.rows)
    curve->row({std::to_string(row.n_obs), row.param, row.method, format_double(row.abs_bias), format_double(row.rmse)});
  curve->close();
  auto summary = ctx.csv("bias_summary.csv", {"statistic", "value"});
  summary->row({"standard_worse_fraction", format_double(result.standard_worse_fraction)});
  summary->row({"noisy_improves_fraction", format_double(result.noisy_improves_fraction)});
  summary->row({"failures", std::to_string(result.failures)});
  summary->close();
  const std::size_t runs = config.replications * 2;
  ctx.note_simulations("sequential", runs * config.particles * config.n_grid.back());
  if (result.failures) ctx.warn(std::to_string(result.failures) + " replications failed and were excluded");
}

void preset_ricker_table(RunContext& ctx) {
  const std::string& profile = ctx.config().profile;
  const Scale scale = pick(profile, {2, 20000}, {10, 100000}, {50, 1000000});
  const auto model = std::make_shared<RickerModel>();
  const TrainingRegion box{Vector{{2.0, 0.1, 4.0}}, Vector{{5.0, 1.0, 20.0}}};
  const std::vector<std::string> features =
      profile == "smoke" ? std::vector<std::string>{"ricker-e1"} : std::vector<std::string>{"ricker-e1", "ricker-e2"};

  SyntheticLikelihoodConfig sl;
  sl.replicates = profile == "smoke" ? 50 : profile == "paper" ? 500 : 200;
  sl.length = profile == "smoke" ? 100 : profile == "paper" ? 10000 : 500;
  sl.theta0 = Vector{{3.5, 0.55, 12.0}};
  sl.proposal_cov = Matrix(Vector::Constant(3, 0.05 * 0.05).asDiagonal());
  sl.transform = model->working_transform();
  const LossMethod synthlik = single_method("synthetic-likelihood", [=](const Dataset& data, const RunOptions& options) {
    AbcProblem problem;
    problem.model = model;
    problem.summary = make_summary("wood-e0", *model, data);
    problem.s_obs = problem.summary->apply(data);
    problem.kernel = DensityKernel::uniform(problem.summary->dim());
    problem.region = box;
    return weighted_mean(synthetic_likelihood_mcmc(problem, sl, options).sample);
  });

  const std::vector<LossMethod> methods{
      synthlik, comparison_method("comparison", model, "wood-e0", scale.budget, 0.005, box, true),
      semiauto_method(model, "wood-e0", features, scale.budget, box, false)};
  const double lo = std::log(0.1);
  const LossTable table = loss_table(
      methods, *model, scale.replications,
      [lo](RngStream& rng) { return Vector{{3.8, std::exp(rng.uniform(lo, 0.0)), 10.0}}; },
      ctx.options("ricker-table"));
  write_loss_table(ctx, table, model->param_names());
  note_budget(ctx, table, scale.budget);
}

void preset_mg1_table(RunContext& ctx) {
  const std::string& profile = ctx.config().profile;
  const Scale scale = pick(profile, {2, 20000}, {20, 100000}, {50, 10000000});
  const auto model = std::make_shared<Mg1Model>(50);

  IndirectConfig ic;
  ic.replicates = profile == "smoke" ? 10 : 50;
  ic.theta0 = Vector{{5.0, 10.0, 1.0 / 6.0}};
  ic.optimizer.max_evaluations = profile == "smoke" ? 200 : 1000;
  const bool exact_mle = profile == "paper";
  const LossMethod indirect = single_method("indirect-inference", [=](const Dataset& data, const RunOptions& options) {
    const IndirectResult result =
        indirect_inference(*model, std::make_shared<Mg1AuxiliaryMap>(exact_mle), data, ic, options);
    return result.estimate;
  });

  const std::vector<LossMethod> methods{
      comparison_method("comparison", model, "quantiles:20", scale.budget, 0.01, std::nullopt, true),
      semiauto_method(model, "quantiles:20", {"order-stats"}, scale.budget, std::nullopt, true), indirect};
  const LossTable table = loss_table(methods, *model, scale.replications,
                                     [model](RngStream& rng) { return model->prior().sample(rng); },
                                     ctx.options("mg1-table"));
  write_loss_table(ctx, table, model->param_names());
  note_budget(ctx, table, scale.budget);
}

void preset_tb_posterior(RunContext& ctx) {
  const std::string& profile = ctx.config().profile;
  const std::size_t budget = profile == "smoke" ? 4000 : profile == "paper" ? 1000000 : 20000;
  const std::size_t target = profile == "smoke" ? 500 : profile == "paper" ? 10000 : 2000;
  const auto model = std::make_shared<TbModel>(target, 473);
  Dataset observed;
  for (std::int64_t c : tb_observed_clusters()) observed.values.push_back(static_cast<double>(c));

  SemiautoConfig config;
  config.budget = budget;
  config.pilot_summary = std::make_shared<TbPairMap>();
  config.pilot_scale_sims = std::min<std::size_t>(1000, budget / 20);
  config.candidates = {std::make_shared<TbFeatureMap>()};
  config.rotate = true;
  const SemiautoResult result = semiauto_run(model, observed, config, ctx.options("tb-posterior"));
  write_samples(ctx, "samples.csv", result.sample, model->param_names());

  auto post = ctx.csv("posterior.csv", {"parameter", "mean", "sd", "lower95", "upper95"});
  const PosteriorSummary summary = posterior_summaries(result.sample, 0.95);
  for (int k = 0; k < model->param_dim(); ++k)
    post->row({model->param_names()[static_cast<std::size_t>(k)], format_double(summary.mean[k]),
               format_double(std::sqrt(summary.covariance(k, k))), format_double(summary.intervals(k, 0)),
               format_double(summary.intervals(k, 1))});
  post->close();
  ctx.note_simulations("pilot", result.pilot_simulations);
  ctx.note_simulations("train", result.training_simulations);
  ctx.note_simulations("final", result.final_simulations);
  ctx.note_rate("final", config.final_accept);
  if (result.rotation && result.rotation->low_anisotropy)
    ctx.warn("pilot cloud is close to isotropic; the rotation is poorly determined");
}

}  // namespace

const std::vector<PresetInfo>& preset_list() {
  static const std::vector<PresetInfo> presets{
      {"gk-table", "g-and-k loss table: semi-automatic ABC against full order-statistics ABC",
       {"loss_table.csv", "estimates.csv"}},
      {"lv-bias", "Lotka-Volterra bias of standard and noisy sequential ABC against n_obs",
       {"bias_curve.csv", "bias_summary.csv"}},
      {"ricker-table", "Ricker loss table: synthetic likelihood, comparison ABC, semi-automatic ABC",
       {"loss_table.csv", "estimates.csv"}},
      {"mg1-table", "M/G/1 loss table: comparison ABC, semi-automatic ABC, indirect inference",
       {"loss_table.csv", "estimates.csv"}},
      {"tb-posterior", "Tuberculosis transmission posterior with rotated semi-automatic ABC",
       {"samples.csv", "posterior.csv"}},
  };
  return presets;
}

void run_preset(const std::string& id, RunContext& context) {
  if (id == "gk-table") return preset_gk_table(context);
  if (id == "lv-bias") return preset_lv_bias(context);
  if (id == "ricker-table") return preset_ricker_table(context);
  if (id == "mg1-table") return preset_mg1_table(context);
  if (id == "tb-posterior") return preset_tb_posterior(context);
  throw ConfigError("unknown preset '" + id + "'", 0, "run.preset");
}

}  // namespace abc
