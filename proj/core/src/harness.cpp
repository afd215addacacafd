#include "abc/harness.hpp"

#include "abc/baselines.hpp"
#include "abc/parallel.hpp"
#include "abc/semiauto.hpp"
#include "abc/sequential.hpp"
#include "abc/summaries.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace abc {

using json = nlohmann::json;

std::string record_to_json(const ExperimentRecord& record) {
  json j;
  j["config_hash"] = record.config_hash;
  j["status"] = record.status;
  j["error"] = record.error;
  j["wall_seconds"] = record.wall_seconds;
  j["acceptance_rates"] = record.acceptance_rates;
  j["stage_simulations"] = record.stage_simulations;
  j["output_digests"] = record.output_digests;
  j["warnings"] = record.warnings;
  return j.dump(2);
}

RunContext::RunContext(ExperimentConfig config, std::filesystem::path out_dir)
    : config_(std::move(config)), out_dir_(std::move(out_dir)) {}

RunOptions RunContext::options(const std::string& label) const {
  return RunOptions{config_.seed, config_.threads, label};
}

std::unique_ptr<CsvWriter> RunContext::csv(const std::string& name, std::vector<std::string> header) {
  if (std::find(outputs_.begin(), outputs_.end(), name) != outputs_.end())
    throw std::logic_error("output " + name + " opened twice");
  outputs_.push_back(name);
  return std::make_unique<CsvWriter>(out_dir_ / name, std::move(header));
}

void write_samples(RunContext& context, const std::string& name, const WeightedSample& sample,
                   const std::vector<std::string>& param_names) {
  std::vector<std::string> header{"index"};
  header.insert(header.end(), param_names.begin(), param_names.end());
  header.push_back("weight");
  auto out = context.csv(name, header);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (int k = 0; k < sample.points[i].size(); ++k) row.push_back(format_double(sample.points[i][k]));
    row.push_back(format_double(sample.weights[i]));
    out->row(row);
  }
  out->close();
}

int threads_from_environment(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("ABC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return 0;
}

Dataset observed_data(const ExperimentConfig& config, const Model& model) {
  Dataset data;
  if (!config.values.empty()) {
    data.values = config.values;
    return data;
  }
  if (!config.data_file.empty()) {
    const auto rows = read_csv(config.data_file);
    std::size_t width = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::vector<double> parsed;
      bool numeric = true;
      for (const std::string& field : rows[r]) {
        try {
          std::size_t used = 0;
          parsed.push_back(std::stod(field, &used));
          numeric = numeric && used == field.size();
        } catch (const std::exception&) {
          numeric = false;
        }
      }
      if (!numeric) {
        if (r == 0) continue;
        throw ConfigError("data file " + config.data_file + ": row " + std::to_string(r + 1) + " is not numeric", 0,
                          "data.file");
      }
      if (width == 0) width = parsed.size();
      if (parsed.size() != width)
        throw ConfigError("data file " + config.data_file + ": ragged rows", 0, "data.file");
      data.values.insert(data.values.end(), parsed.begin(), parsed.end());
    }
    if (data.values.empty()) throw ConfigError("data file " + config.data_file + " holds no data", 0, "data.file");
    data.width = static_cast<int>(width);
    return data;
  }
  if (!config.theta.empty()) {
    const Vector theta = Eigen::Map<const Vector>(config.theta.data(), static_cast<int>(config.theta.size()));
    if (theta.size() != model.param_dim())
      throw ConfigError("data.theta has " + std::to_string(theta.size()) + " entries; model " + model.name() +
                            " has " + std::to_string(model.param_dim()) + " parameters",
                        0, "data.theta");
    RngStream rng = seed_stream(config.seed, "observed", 0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::optional<Dataset> sim = model.simulate(theta, rng);
      if (sim && !model.discard(*sim)) return std::move(*sim);
    }
    throw Error("could not simulate usable observed data at data.theta");
  }
  if (model.name() == "tb") {
    for (std::int64_t c : tb_observed_clusters()) data.values.push_back(static_cast<double>(c));
    return data;
  }
  throw ConfigError("no observed data: set data.values, data.file or data.theta", 0, "data");
}

namespace {

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<int>(v.size()));
}

/// Prior box used for pilots and improper priors.
std::optional<TrainingRegion> default_box(const Model& model) {
  if (model.name() == "ricker") return TrainingRegion{Vector{{2.0, 0.1, 4.0}}, Vector{{5.0, 1.0, 20.0}}};
  return std::nullopt;
}

Matrix proposal_covariance(const ExperimentConfig& config, int p, const char* field) {
  if (config.proposal_sd.empty()) return Matrix::Identity(p, p);
  if (static_cast<int>(config.proposal_sd.size()) != p)
    throw ConfigError(std::string(field) + " needs " + std::to_string(p) + " entries", 0, field);
  return to_vector(config.proposal_sd).cwiseAbs2().asDiagonal();
}

Vector start_point(const ExperimentConfig& config, const Model& model) {
  if (!config.theta0.empty()) {
    if (static_cast<int>(config.theta0.size()) != model.param_dim())
      throw ConfigError("engine.theta0 needs " + std::to_string(model.param_dim()) + " entries", 0, "engine.theta0");
    return to_vector(config.theta0);
  }
  if (!config.theta.empty()) return to_vector(config.theta);
  if (!model.prior().proper()) throw ConfigError("engine.theta0 is required for an improper prior", 0, "engine.theta0");
  RngStream rng = seed_stream(config.seed, "theta0", 0);
  return model.prior().sample(rng);
}

DensityKernel make_kernel(const ExperimentConfig& config, int dim) {
  return config.kernel == "gaussian" ? DensityKernel::gaussian(dim, config.bandwidth)
                                     : DensityKernel::uniform(dim, config.bandwidth);
}

AbcProblem make_problem(RunContext& ctx, const ModelPtr& model, const Dataset& observed) {
  const ExperimentConfig& config = ctx.config();
  AbcProblem problem;
  problem.model = model;
  problem.summary = make_summary(config.summary, *model, observed);
  problem.s_obs = problem.summary->apply(observed);
  problem.kernel = make_kernel(config, problem.summary->dim());
  if (!model->prior().proper()) problem.region = default_box(*model);
  if (config.noisy) {
    RngStream noise = seed_stream(config.seed, "noise", 0);
    const NoisyObservation noisy = make_noisy(problem, noise);
    problem = noisy.problem;
  }
  return problem;
}

ImportanceResult run_rejection(RunContext& ctx, const AbcProblem& problem) {
  const ExperimentConfig& config = ctx.config();
  if (config.accept_fraction > 0.0) {
    AbcProblem scaled = problem;
    const std::size_t scale_n = std::min<std::size_t>(1000, config.proposals);
    scaled.kernel = problem.kernel.with_metric(summary_scale_metric(problem, scale_n, ctx.options("scale")));
    ctx.note_simulations("scale", scale_n);
    QuantileRejectionResult run =
        abc_rejection_quantile(scaled, config.proposals, config.accept_fraction, ctx.options("rejection"));
    ctx.note_simulations("rejection", config.proposals);
    ctx.note_rate("rejection", run.result.acceptance_rate());
    return std::move(run.result);
  }
  ImportanceResult run = abc_importance(problem, config.proposals, ctx.options("rejection"));
  ctx.note_simulations("rejection", config.proposals);
  ctx.note_rate("rejection", run.acceptance_rate());
  return run;
}

void pipeline_rejection(RunContext& ctx, const ModelPtr& model, const Dataset& observed) {
  const ImportanceResult run = run_rejection(ctx, make_problem(ctx, model, observed));
  if (run.accepted == 0) ctx.warn("no proposal was accepted");
  write_samples(ctx, "samples.csv", run.sample, model->param_names());
}

void pipeline_importance(RunContext& ctx, const ModelPtr& model, const Dataset& observed) {
  const ExperimentConfig& config = ctx.config();
  const AbcProblem problem = make_problem(ctx, model, observed);
  const int p = model->param_dim();
  const GaussianProposal proposal(start_point(config, *model), proposal_covariance(config, p, "engine.proposal_sd"));
  const ImportanceResult run = abc_importance(problem, config.proposals, ctx.options("is"), &proposal);
  ctx.note_simulations("is", config.proposals);
  ctx.note_rate("is", run.acceptance_rate());
  write_samples(ctx, "samples.csv", run.sample, model->param_names());
}

void pipeline_mcmc(RunContext& ctx, const ModelPtr& model, const Dataset& observed) {
  const ExperimentConfig& config = ctx.config();
  const AbcProblem problem = make_problem(ctx, model, observed);
  McmcConfig mc;
  mc.length = config.length;
  mc.theta0 = start_point(config, *model);
  mc.integer_lattice = model->name() == "discrete-toy";
  if (!mc.integer_lattice) {
    mc.proposal_cov = proposal_covariance(config, model->param_dim(), "engine.proposal_sd");
    mc.transform = model->working_transform();
  }
  const McmcResult run = abc_mcmc(problem, mc, ctx.options("mcmc"));
  ctx.note_simulations("mcmc", run.simulations);
  ctx.note_rate("mcmc", run.acceptance_rate());
  write_samples(ctx, "samples.csv", run.sample, model->param_names());
}

void write_learned(RunContext& ctx, const SemiautoResult& result, const std::vector<std::string>& names) {
  auto selection = ctx.csv("selection.csv", {"candidate", "features", "mean_bic", "selected"});
  for (std::size_t i = 0; i < result.selection.fits.size(); ++i) {
    const LearnedSummary& fit = result.selection.fits[i];
    selection->row({fit.features->name(), std::to_string(fit.coefficients.cols()),
                    format_double(result.selection.mean_bic[i]), i == result.selection.best ? "1" : "0"});
  }
  selection->close();
  const LearnedSummary& best = result.summary();
  auto coef = ctx.csv("coefficients.csv", {"parameter", "term", "coefficient", "std_error"});
  for (int k = 0; k < best.coefficients.rows(); ++k) {
    const std::string& name = names[static_cast<std::size_t>(k)];
    coef->row({name, "intercept", format_double(best.intercepts[k]), ""});
    for (int j = 0; j < best.coefficients.cols(); ++j)
      coef->row({name, std::to_string(j), format_double(best.coefficients(k, j)), format_double(best.coefficient_se(k, j))});
  }
  coef->close();
}

void pipeline_semiauto(RunContext& ctx, const ModelPtr& model, const Dataset& observed) {
  const ExperimentConfig& config = ctx.config();
  SemiautoConfig sa;
  sa.budget = config.budget;
  sa.pilot_summary = make_summary(config.pilot.empty() ? config.summary : config.pilot, *model, observed);
  sa.pilot_box = default_box(*model);
  const std::vector<std::string> specs = config.features.empty() ? std::vector<std::string>{config.summary} : config.features;
  for (const std::string& spec : specs) sa.candidates.push_back(make_summary(spec, *model, observed));
  sa.rotate = model->name() == "tb";
  if (config.accept_fraction > 0.0) sa.final_accept = config.accept_fraction;
  const SemiautoResult result = semiauto_run(model, observed, sa, ctx.options("semiauto"));
  ctx.note_simulations("pilot", result.pilot_simulations);
  ctx.note_simulations("train", result.training_simulations);
  ctx.note_simulations("final", result.final_simulations);
  ctx.note_rate("final", sa.final_accept);
  write_samples(ctx, "samples.csv", result.sample, model->param_names());
  write_learned(ctx, result, model->param_names());
}

void pipeline_sequential(RunContext& ctx, const ModelPtr& model, const Dataset& observed) {
  const ExperimentConfig& config = ctx.config();
  const auto* ssm = dynamic_cast<const StateSpaceModel*>(model.get());
  if (!ssm) throw ConfigError("model " + model->name() + " has no state-space form", 0, "model.id");
  const StateSequence sequence = ssm->to_sequence(observed);
  SequentialConfig sc;
  sc.particles = config.particles;
  int observed_dim = ssm->state_dim();
  if (config.mask == "prey-only") {
    // Only the first component is observed; latent components ride along.
    sc.mask.assign(static_cast<std::size_t>(ssm->state_dim()), false);
    sc.mask[0] = true;
    sc.latent = LatentMode::Carried;
    observed_dim = 1;
  }
  sc.kernel = DensityKernel::gaussian(observed_dim, config.bandwidth);
  sc.noisy = config.noisy;
  sc.shrinkage = config.shrinkage;
  const SequentialResult result = seq_abc(*ssm, sequence, sc, ctx.options("sequential"));
  ctx.note_simulations("sequential", config.particles * sequence.observations.size());
  write_samples(ctx, "samples.csv", result.particles, model->param_names());
  std::vector<std::string> header{"step", "ess"};
  for (const std::string& name : model->param_names()) header.push_back("mean_" + name);
  auto trace = ctx.csv("trace.csv", header);
  for (std::size_t j = 0; j < result.trace.size(); ++j) {
    std::vector<std::string> row{std::to_string(j + 1), format_double(result.trace[j].ess)};
    for (int k = 0; k < result.trace[j].mean.size(); ++k) row.push_back(format_double(result.trace[j].mean[k]));
    trace->row(row);
    if (result.trace[j].jitter_skipped) ctx.warn("step " + std::to_string(j + 1) + ": rejuvenation jitter skipped");
  }
  trace->close();
}

void pipeline_baseline(RunContext& ctx, const ModelPtr& model, const Dataset& observed) {
  const ExperimentConfig& config = ctx.config();
  if (config.method == "beaumont") {
    const AbcProblem problem = make_problem(ctx, model, observed);
    const ImportanceResult run = run_rejection(ctx, problem);
    const RegressionCorrection corrected = beaumont_correct(run.sample, problem.s_obs);
    if (!corrected.applied) ctx.warn(corrected.warning);
    write_samples(ctx, "samples.csv", corrected.sample, model->param_names());
    auto out = ctx.csv("correction.csv", {"parameter", "summary", "slope"});
    for (int k = 0; k < corrected.slopes.rows(); ++k)
      for (int j = 0; j < corrected.slopes.cols(); ++j)
        out->row({model->param_names()[static_cast<std::size_t>(k)], std::to_string(j),
                  format_double(corrected.slopes(k, j))});
    out->close();
    return;
  }
  if (config.method == "synthlik") {
    AbcProblem problem = make_problem(ctx, model, observed);
    if (!model->prior().proper()) problem.region.reset();
    SyntheticLikelihoodConfig sl;
    sl.replicates = config.replicates;
    sl.length = config.length;
    sl.theta0 = start_point(config, *model);
    sl.proposal_cov = proposal_covariance(config, model->param_dim(), "engine.proposal_sd");
    sl.transform = model->working_transform();
    const SyntheticLikelihoodResult run = synthetic_likelihood_mcmc(problem, sl, ctx.options("synthlik"));
    ctx.note_simulations("synthlik", run.simulations);
    ctx.note_rate("synthlik", run.acceptance_rate());
    write_samples(ctx, "samples.csv", run.sample, model->param_names());
    return;
  }
  IndirectConfig ic;
  ic.replicates = config.replicates;
  ic.theta0 = start_point(config, *model);
  const SummaryPtr aux = model->name() == "mg1" && config.summary == "identity"
                             ? std::make_shared<Mg1AuxiliaryMap>()
                             : make_summary(config.summary, *model, observed);
  const IndirectResult run = indirect_inference(*model, aux, observed, ic, ctx.options("indirect"));
  ctx.note_simulations("indirect", run.simulations);
  if (!run.converged) ctx.warn(run.flat ? "indirect inference objective is flat" : "simplex search did not converge");
  auto out = ctx.csv("estimate.csv", {"parameter", "estimate"});
  for (int k = 0; k < run.estimate.size(); ++k)
    out->row({model->param_names()[static_cast<std::size_t>(k)], format_double(run.estimate[k])});
  out->close();
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (out.fail()) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

ExperimentRecord run_config(const ExperimentConfig& input) {
  ExperimentConfig config = input;
  config.threads = threads_from_environment(config.threads);
  const std::filesystem::path out_dir = config.out;
  std::filesystem::create_directories(out_dir);
  RunContext ctx(config, out_dir);
  // The hash covers the configuration as given, before environment
  // fallbacks, so that it matches a re-serialisation of the input.
  ctx.record().config_hash = config_hash(input);
  const auto start = std::chrono::steady_clock::now();
  try {
    if (config.kind == "preset") {
      run_preset(config.preset, ctx);
    } else {
      const ModelPtr model = make_model(config.model, config.model_size);
      const Dataset observed = observed_data(config, *model);
      if (config.kind == "rejection") pipeline_rejection(ctx, model, observed);
      else if (config.kind == "is") pipeline_importance(ctx, model, observed);
      else if (config.kind == "mcmc") pipeline_mcmc(ctx, model, observed);
      else if (config.kind == "semiauto") pipeline_semiauto(ctx, model, observed);
      else if (config.kind == "sequential") pipeline_sequential(ctx, model, observed);
      else pipeline_baseline(ctx, model, observed);
    }
    for (const std::string& name : ctx.outputs()) ctx.record().output_digests[name] = sha256_file(out_dir / name);
  } catch (const std::exception& e) {
    ctx.record().status = "failed";
    ctx.record().error = e.what();
    for (const std::string& name : ctx.outputs()) {
      std::error_code ec;
      std::filesystem::remove(out_dir / name, ec);
    }
    ctx.record().output_digests.clear();
  }
  ctx.record().wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_atomically(out_dir / "record.json", record_to_json(ctx.record()));
  return ctx.record();
}

ExperimentRecord run_config_file(const std::filesystem::path& path) { return run_config(load_config(path)); }

}  // namespace abc
