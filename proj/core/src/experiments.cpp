#include "abc/experiments.hpp"

#include "abc/parallel.hpp"
#include "abc/stats.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace abc {

namespace {

constexpr int kMaxDataAttempts = 1000;

/// Simulates until the model yields a dataset it does not discard.
Dataset simulate_usable(const Model& model, const Vector& theta, RngStream& rng) {
  for (int attempt = 0; attempt < kMaxDataAttempts; ++attempt) {
    std::optional<Dataset> data = model.simulate(theta, rng);
    if (data && !model.discard(*data)) return std::move(*data);
  }
  throw Error("could not simulate a usable dataset in " + std::to_string(kMaxDataAttempts) + " attempts");
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

LossMethod single_method(std::string name, std::function<Vector(const Dataset&, const RunOptions&)> estimate) {
  return LossMethod{{std::move(name)}, [estimate = std::move(estimate)](const Dataset& data, const RunOptions& options) {
                      return std::vector<Vector>{estimate(data, options)};
                    }};
}

LossTable loss_table(const std::vector<LossMethod>& methods, const Model& model, std::size_t replications,
                     const ThetaGenerator& truth, const RunOptions& options) {
  if (methods.empty()) throw std::invalid_argument("loss_table: no methods");
  const int p = model.param_dim();
  LossTable table;
  for (const LossMethod& method : methods) {
    if (method.names.empty()) throw std::invalid_argument("loss_table: a method has no output names");
    table.outputs.insert(table.outputs.end(), method.names.begin(), method.names.end());
  }
  const std::size_t n_out = table.outputs.size();
  table.estimates.assign(n_out, std::vector<Vector>(replications));
  table.failures.assign(n_out, std::vector<std::string>(replications));
  std::vector<Dataset> datasets(replications);
  for (std::size_t r = 0; r < replications; ++r) {
    RngStream rng = seed_stream(options.seed, options.label + "-data", r);
    table.truths.push_back(truth(rng));
    if (table.truths.back().size() != p) throw std::invalid_argument("loss_table: truth has the wrong dimension");
    datasets[r] = simulate_usable(model, table.truths.back(), rng);
  }

  for (std::size_t r = 0; r < replications; ++r) {
    std::size_t offset = 0;
    for (const LossMethod& method : methods) {
      const std::string& key = method.names.front();
      const RunOptions run{derive_seed(options.seed, options.label + "-" + key, r), options.threads, key};
      try {
        std::vector<Vector> estimates = method.estimate(datasets[r], run);
        if (estimates.size() != method.names.size()) throw Error("method returned the wrong number of estimates");
        for (std::size_t k = 0; k < estimates.size(); ++k) {
          if (estimates[k].size() != p || !estimates[k].allFinite()) {
            table.failures[offset + k][r] = "estimate is not a finite p-vector";
            continue;
          }
          table.estimates[offset + k][r] = std::move(estimates[k]);
        }
      } catch (const Error& e) {
        for (std::size_t k = 0; k < method.names.size(); ++k) table.failures[offset + k][r] = e.what();
      }
      offset += method.names.size();
    }
  }

  const std::vector<std::string> names = model.param_names();
  for (std::size_t m = 0; m < n_out; ++m)
    for (int k = 0; k < p; ++k) {
      LossRow row{table.outputs[m], names[static_cast<std::size_t>(k)], 0.0, 0, 0};
      double total = 0.0;
      for (std::size_t r = 0; r < replications; ++r) {
        if (table.estimates[m][r].size() == 0) {
          ++row.n_failures;
          continue;
        }
        const double err = table.estimates[m][r][k] - table.truths[r][k];
        total += err * err;
        ++row.n_datasets;
      }
      row.mean_loss = row.n_datasets ? total / static_cast<double>(row.n_datasets)
                                     : std::numeric_limits<double>::quiet_NaN();
      table.rows.push_back(row);
    }
  return table;
}

CoverageResult calibration_study(const Model& model, const PosteriorEngine& engine, double level,
                                 std::size_t replications, const RunOptions& options) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("calibration_study: level must lie in (0, 1)");
  if (!model.prior().proper()) throw std::invalid_argument("calibration_study: the prior must be proper");
  if (replications == 0) throw std::invalid_argument("calibration_study: need at least one replication");
  const int p = model.param_dim();
  std::vector<std::vector<char>> covered(replications);
  std::vector<char> failed(replications, 0);

  parallel_for(replications, resolve_threads(options.threads), [&](std::size_t r) {
    RngStream rng = seed_stream(options.seed, options.label + "-data", r);
    const Vector theta = model.prior().sample(rng);
    const RunOptions run{derive_seed(options.seed, options.label + "-engine", r), 1, "engine"};
    try {
      const Dataset data = simulate_usable(model, theta, rng);
      const WeightedSample post = engine(data, run);
      post.validate();
      if (post.empty()) throw Error("empty posterior sample");
      covered[r].resize(static_cast<std::size_t>(p));
      std::vector<double> values(post.size());
      for (int k = 0; k < p; ++k) {
        for (std::size_t i = 0; i < post.size(); ++i) values[i] = post.points[i][k];
        const double lo = weighted_quantile(values, post.weights, (1.0 - level) / 2.0);
        const double hi = weighted_quantile(values, post.weights, (1.0 + level) / 2.0);
        covered[r][static_cast<std::size_t>(k)] = theta[k] >= lo && theta[k] <= hi;
      }
    } catch (const Error&) {
      failed[r] = 1;
    }
  });

  CoverageResult out;
  out.level = level;
  out.hits.assign(static_cast<std::size_t>(p), 0);
  for (std::size_t r = 0; r < replications; ++r) {
    if (failed[r]) {
      ++out.failures;
      continue;
    }
    ++out.replications;
    for (int k = 0; k < p; ++k) out.hits[static_cast<std::size_t>(k)] += covered[r][static_cast<std::size_t>(k)];
  }
  if (out.replications == 0) throw Error("calibration_study: every replication failed");
  const double n = static_cast<double>(out.replications);
  for (std::size_t hits : out.hits) {
    const double f = static_cast<double>(hits) / n;
    out.frequency.push_back(f);
    out.standard_error.push_back(std::sqrt(f * (1.0 - f) / n));
  }
  std::tie(out.band_lower, out.band_upper) = binomial_band(static_cast<int>(out.replications), level, 0.01);
  return out;
}

PosteriorEngine rejection_engine(ModelPtr model, SummaryPtr summary, DensityKernel kernel, std::size_t proposals,
                                 bool noisy) {
  return [model = std::move(model), summary = std::move(summary), kernel = std::move(kernel), proposals,
          noisy](const Dataset& data, const RunOptions& options) {
    AbcProblem problem;
    problem.model = model;
    problem.summary = summary;
    problem.s_obs = summary->apply(data);
    problem.kernel = kernel;
    if (noisy) {
      RngStream noise = seed_stream(options.seed, "noise", 0);
      problem = make_noisy(problem, noise).problem;
    }
    return abc_importance(problem, proposals, options).sample;
  };
}

Vector NormalPosteriorMeanMap::apply(const Dataset& data) const {
  if (data.values.empty()) throw std::invalid_argument("posterior-mean summary: empty dataset");
  const double mean = std::accumulate(data.values.begin(), data.values.end(), 0.0) /
                      static_cast<double>(data.values.size());
  return Vector::Constant(1, shrinkage_ * mean);
}

double kernel_second_moment(const DensityKernel& kernel, const Matrix& loss) {
  const int d = kernel.dim();
  if (loss.rows() != d || loss.cols() != d) throw std::invalid_argument("kernel_second_moment: loss matrix shape");
  const Matrix inverse = kernel.metric().inverse();
  // Uniform on {x'Mx < 1}: E[xx'] = M^-1 / (d + 2). Gaussian: M^-1.
  const double factor = kernel.shape() == KernelShape::UniformEllipsoid ? 1.0 / (d + 2.0) : 1.0;
  return factor * (loss * inverse).trace();
}

std::vector<ExpansionRow> loss_expansion_check(const ExpansionConfig& config, const RunOptions& options) {
  auto model = std::make_shared<NormalMeanModel>(config.prior_var, config.n);
  auto summary = std::make_shared<NormalPosteriorMeanMap>(model->shrinkage());
  const DensityKernel unit(KernelShape::UniformEllipsoid, Matrix::Constant(1, 1, 4.0), 1.0);
  const double moment = kernel_second_moment(unit, Matrix::Identity(1, 1));
  const std::size_t reps = config.replications;

  std::vector<ExpansionRow> rows;
  for (std::size_t g = 0; g < config.h_grid.size(); ++g) {
    const double h = config.h_grid[g];
    if (!(h >= 0.0)) throw std::invalid_argument("loss_expansion_check: bandwidths must be non-negative");
    ExpansionRow row;
    row.h = h;
    row.predicted = h * h * moment;
    // Exact matching on a continuous summary returns S(y) itself.
    if (h == 0.0) {
      rows.push_back(row);
      continue;
    }
    std::vector<double> noisy(reps, -1.0);
    std::vector<double> standard(reps, -1.0);
    parallel_for(reps, resolve_threads(options.threads), [&](std::size_t r) {
      RngStream rng = seed_stream(options.seed, options.label + "-data", r);
      const Vector theta = model->prior().sample(rng);
      const std::optional<Dataset> data = model->simulate(theta, rng);
      AbcProblem problem;
      problem.model = model;
      problem.summary = summary;
      problem.s_obs = summary->apply(*data);
      problem.kernel = unit.with_bandwidth(h);
      const double s = problem.s_obs[0];
      RngStream noise = seed_stream(options.seed, options.label + "-noise", r);
      const RunOptions run{derive_seed(options.seed, options.label + "-abc", r), 1, "abc"};
      auto excess = [&](const AbcProblem& pr) {
        const ImportanceResult res = abc_importance(pr, config.proposals, run);
        if (res.accepted == 0) return -1.0;
        double mean = 0.0;
        for (const Vector& si : res.sample.summaries) mean += si[0];
        mean /= static_cast<double>(res.accepted);
        return (s - mean) * (s - mean);
      };
      standard[r] = excess(problem);
      noisy[r] = excess(make_noisy(problem, noise).problem);
    });
    auto usable = [](const std::vector<double>& v) {
      std::vector<double> out;
      for (double x : v)
        if (x >= 0.0) out.push_back(x);
      return out;
    };
    const std::vector<double> n_ok = usable(noisy);
    const std::vector<double> s_ok = usable(standard);
    row.noisy_excess = mean_of(n_ok);
    row.noisy_se = standard_error(n_ok);
    row.standard_excess = mean_of(s_ok);
    row.standard_se = standard_error(s_ok);
    row.noisy_flagged = n_ok.size() < 2 || row.noisy_se > 0.1 * row.predicted;
    rows.push_back(row);
  }
  return rows;
}

std::vector<DominanceRow> estimator_dominance_check(const DominanceConfig& config,
                                                    const std::vector<Competitor>& competitors,
                                                    const RunOptions& options) {
  auto model = std::make_shared<NormalMeanModel>(config.prior_var, config.n);
  auto summary = std::make_shared<NormalPosteriorMeanMap>(model->shrinkage());
  const DensityKernel kernel = DensityKernel::uniform(1, config.bandwidth);
  const std::size_t reps = config.replications;
  std::vector<double> truth(reps), s(reps), abc_mean(reps);
  std::vector<char> ok(reps, 0);

  parallel_for(reps, resolve_threads(options.threads), [&](std::size_t r) {
    RngStream rng = seed_stream(options.seed, options.label + "-data", r);
    truth[r] = model->prior().sample(rng)[0];
    const std::optional<Dataset> data = model->simulate(Vector::Constant(1, truth[r]), rng);
    AbcProblem problem;
    problem.model = model;
    problem.summary = summary;
    problem.s_obs = summary->apply(*data);
    problem.kernel = kernel;
    s[r] = problem.s_obs[0];
    const RunOptions run{derive_seed(options.seed, options.label + "-abc", r), 1, "abc"};
    const ImportanceResult res = abc_importance(problem, config.proposals, run);
    if (res.accepted == 0) return;
    abc_mean[r] = weighted_mean(res.sample)[0];
    ok[r] = 1;
  });

  std::vector<DominanceRow> rows;
  for (const Competitor& c : competitors) {
    DominanceRow row;
    row.competitor = c.name;
    std::vector<double> diff;
    double abc_total = 0.0;
    double comp_total = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      if (!ok[r]) continue;
      const double a = (truth[r] - abc_mean[r]) * (truth[r] - abc_mean[r]);
      const double g = c.estimate(s[r]);
      const double b = (truth[r] - g) * (truth[r] - g);
      abc_total += a;
      comp_total += b;
      diff.push_back(a - b);
    }
    if (diff.empty()) throw Error("estimator_dominance_check: no replication accepted any draw");
    row.abc_loss = abc_total / static_cast<double>(diff.size());
    row.competitor_loss = comp_total / static_cast<double>(diff.size());
    row.difference_se = standard_error(diff);
    row.abc_not_worse = row.abc_loss <= row.competitor_loss + 3.0 * row.difference_se;
    rows.push_back(row);
  }
  return rows;
}

ScalingResult acceptance_scaling(const AbcProblem& problem, const std::vector<double>& bandwidths, std::size_t n,
                                 const RunOptions& options) {
  problem.validate();
  if (bandwidths.size() < 2) throw std::invalid_argument("acceptance_scaling: need at least two bandwidths");
  const TruncatedPriorSampler sampler(problem.prior(), problem.region);
  std::vector<double> distance(n, std::numeric_limits<double>::infinity());
  parallel_for(n, resolve_threads(options.threads), [&](std::size_t i) {
    RngStream rng = seed_stream(options.seed, options.label, i);
    const Vector theta = sampler.draw(rng);
    Vector s;
    if (simulate_summary(problem, theta, rng, s) == SimStatus::Ok) distance[i] = problem.kernel.distance(s - problem.s_obs);
  });

  ScalingResult out;
  out.bandwidths = bandwidths;
  std::vector<double> x, y;
  for (double h : bandwidths) {
    if (!(h > 0.0)) throw std::invalid_argument("acceptance_scaling: bandwidths must be positive");
    double total = 0.0;
    for (double d : distance) {
      if (!std::isfinite(d)) continue;
      const double u = d / h;
      total += problem.kernel.shape() == KernelShape::UniformEllipsoid ? (u < 1.0 ? 1.0 : 0.0)
                                                                        : std::exp(-0.5 * u * u);
    }
    const double rate = total / static_cast<double>(n);
    out.acceptance.push_back(rate);
    if (rate > 0.0) {
      x.push_back(std::log(h));
      y.push_back(std::log(rate));
    }
  }
  if (x.size() < 2) throw Error("acceptance_scaling: fewer than two bandwidths accepted anything");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  out.slope = sxy / sxx;
  return out;
}

}  // namespace abc
