#include "abc/sequential.hpp"

#include "abc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace abc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<int> observed_components(const std::vector<bool>& mask, int state_dim) {
  std::vector<int> out;
  if (mask.empty()) {
    for (int c = 0; c < state_dim; ++c) out.push_back(c);
    return out;
  }
  if (mask.size() != static_cast<std::size_t>(state_dim))
    throw std::invalid_argument("seq_abc: observation mask length does not match the state dimension");
  for (int c = 0; c < state_dim; ++c)
    if (mask[static_cast<std::size_t>(c)]) out.push_back(c);
  if (out.empty()) throw std::invalid_argument("seq_abc: observation mask selects nothing");
  return out;
}

Vector select(const Vector& v, const std::vector<int>& components) {
  Vector out(static_cast<int>(components.size()));
  for (std::size_t k = 0; k < components.size(); ++k) out[static_cast<int>(k)] = v[components[k]];
  return out;
}

}  // namespace

std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, std::size_t count,
                                             RngStream& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("systematic_resample: total weight must be positive");
  std::vector<std::size_t> out(count);
  const double step = total / static_cast<double>(count);
  double target = rng.uniform() * step;
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t k = 0;
  for (std::size_t i = 0; i < count; ++i) {
    while (cumulative <= target && k + 1 < weights.size()) cumulative += weights[++k];
    out[i] = k;
    target += step;
  }
  return out;
}

std::vector<std::size_t> liu_west_rejuvenate(std::vector<Vector>& working, const std::vector<double>& weights,
                                             double shrinkage, RngStream& rng, bool& jitter_skipped) {
  if (!(shrinkage > 0.0 && shrinkage < 1.0))
    throw std::invalid_argument("liu_west_rejuvenate: shrinkage must lie in (0, 1)");
  const std::size_t n = working.size();
  if (n == 0 || weights.size() != n) throw std::invalid_argument("liu_west_rejuvenate: size mismatch");
  const int p = static_cast<int>(working.front().size());
  double total = 0.0;
  Vector mean = Vector::Zero(p);
  for (std::size_t i = 0; i < n; ++i) {
    mean += weights[i] * working[i];
    total += weights[i];
  }
  mean /= total;
  Matrix cov = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector c = working[i] - mean;
    cov += weights[i] * c * c.transpose();
  }
  cov /= total;

  const std::vector<std::size_t> index = systematic_resample(weights, n, rng);
  Eigen::LLT<Matrix> chol(cov);
  jitter_skipped = !cov.allFinite() || chol.info() != Eigen::Success;
  std::vector<Vector> next(n);
  if (jitter_skipped) {
    for (std::size_t i = 0; i < n; ++i) next[i] = working[index[i]];
  } else {
    const Matrix l = chol.matrixL();
    const double spread = std::sqrt(1.0 - shrinkage * shrinkage);
    Vector z(p);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < p; ++k) z[k] = rng.normal();
      next[i] = shrinkage * working[index[i]] + (1.0 - shrinkage) * mean + spread * (l * z);
    }
  }
  working = std::move(next);
  return index;
}

SequentialResult seq_abc(const StateSpaceModel& model, const StateSequence& data,
                         const SequentialConfig& config, const RunOptions& options) {
  const std::size_t n = config.particles;
  if (n == 0) throw std::invalid_argument("seq_abc: need at least one particle");
  if (data.observations.empty()) throw std::invalid_argument("seq_abc: no observations");
  if (data.intervals.size() != data.observations.size())
    throw std::invalid_argument("seq_abc: one interval per observation is required");
  const int state_dim = model.state_dim();
  const std::vector<int> observed = observed_components(config.mask, state_dim);
  if (config.kernel.dim() != static_cast<int>(observed.size()))
    throw std::invalid_argument("seq_abc: kernel dimension must equal the number of observed components");
  if (config.latent == LatentMode::Conditional && observed.size() != static_cast<std::size_t>(state_dim))
    throw std::invalid_argument("seq_abc: conditional propagation needs every state component observed");
  const std::vector<Transform> transform = model.state_working_transform();
  const int threads = resolve_threads(options.threads);
  const double h = config.kernel.bandwidth();

  std::vector<Vector> thetas(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng = seed_stream(options.seed, options.label + "-init", i);
    thetas[i] = model.state_prior().sample(rng);
  }
  std::vector<Vector> states(n, data.initial);
  std::vector<Vector> proposed(n);
  std::vector<double> log_w(n);
  std::vector<double> weights(n);

  SequentialResult result;
  const std::size_t steps = data.observations.size();
  for (std::size_t j = 0; j < steps; ++j) {
    SequentialStep record;
    record.perturbation = Vector::Zero(static_cast<int>(observed.size()));
    if (config.noisy && h > 0.0) {
      RngStream noise_rng = seed_stream(options.seed, options.label + "-noise", j);
      record.perturbation = h * config.kernel.sample(noise_rng);
    }
    const Vector target = select(data.observations[j], observed) + record.perturbation;
    const Vector& previous = j == 0 ? data.initial : data.observations[j - 1];
    const double dt = data.intervals[j];

    parallel_for(n, threads, [&](std::size_t i) {
      RngStream rng = seed_stream(options.seed, options.label + "-prop", (static_cast<std::uint64_t>(j) << 32) | i);
      const Vector& start = config.latent == LatentMode::Conditional ? previous : states[i];
      const std::optional<Vector> next = model.propagate(thetas[i], start, dt, rng);
      if (!next) {
        log_w[i] = kNegInf;
        return;
      }
      proposed[i] = *next;
      log_w[i] = config.kernel.log_accept_weight(select(*next, observed) - target);
    });

    const double top = *std::max_element(log_w.begin(), log_w.end());
    if (top == kNegInf)
      throw Error("seq_abc: every particle weight is zero at step " + std::to_string(j + 1));
    for (std::size_t i = 0; i < n; ++i) weights[i] = std::exp(log_w[i] - top);
    record.ess = effective_sample_size(std::span<const double>(weights));

    double total = 0.0;
    record.mean = Vector::Zero(thetas.front().size());
    for (std::size_t i = 0; i < n; ++i) {
      record.mean += weights[i] * thetas[i];
      total += weights[i];
    }
    record.mean /= total;

    if (j + 1 == steps) {
      for (std::size_t i = 0; i < n; ++i) result.particles.push_back(thetas[i], weights[i]);
      result.trace.push_back(std::move(record));
      break;
    }

    std::vector<Vector> working(n);
    for (std::size_t i = 0; i < n; ++i) working[i] = to_working(transform, thetas[i]);
    RngStream rejuv_rng = seed_stream(options.seed, options.label + "-rejuv", j);
    const std::vector<std::size_t> index =
        liu_west_rejuvenate(working, weights, config.shrinkage, rejuv_rng, record.jitter_skipped);
    for (std::size_t i = 0; i < n; ++i) thetas[i] = from_working(transform, working[i]);
    if (config.latent == LatentMode::Carried) {
      std::vector<Vector> carried(n);
      for (std::size_t i = 0; i < n; ++i) carried[i] = proposed[index[i]];
      states = std::move(carried);
    }
    result.trace.push_back(std::move(record));
  }
  return result;
}

BiasResult bias_experiment(const BiasConfig& config, const RunOptions& options) {
  if (config.n_grid.empty() || config.replications == 0)
    throw std::invalid_argument("bias_experiment: need a non-empty grid and at least one replication");
  std::vector<std::size_t> grid = config.n_grid;
  std::sort(grid.begin(), grid.end());
  if (grid.front() == 0) throw std::invalid_argument("bias_experiment: grid entries must be positive");
  const std::size_t n_max = grid.back();
  const LotkaVolterraModel model(config.initial, config.tau, n_max);
  const double h = config.bandwidth > 0.0 ? config.bandwidth : std::sqrt(config.tau);
  const std::vector<int> observed = [&] {
    std::vector<int> out;
    for (int c = 0; c < 2; ++c)
      if (config.mask.empty() || config.mask[static_cast<std::size_t>(c)]) out.push_back(c);
    return out;
  }();

  SequentialConfig seq;
  seq.particles = config.particles;
  seq.kernel = DensityKernel::gaussian(static_cast<int>(observed.size()), h);
  seq.shrinkage = config.shrinkage;
  seq.mask = config.mask;
  seq.latent = observed.size() == 2 ? LatentMode::Conditional : LatentMode::Carried;

  const std::vector<std::string> methods{"standard", "noisy"};
  BiasResult result;
  result.estimates.assign(methods.size(), {});
  const int p = 3;

  for (std::size_t r = 0; r < config.replications; ++r) {
    RngStream data_rng = seed_stream(options.seed, options.label + "-data", r);
    const std::optional<Dataset> data = model.simulate(config.theta_true, data_rng);
    if (!data) {
      ++result.failures;
      continue;
    }
    const StateSequence sequence = model.to_sequence(*data);
    std::vector<std::vector<Vector>> per_method(methods.size());
    bool failed = false;
    for (std::size_t m = 0; m < methods.size() && !failed; ++m) {
      SequentialConfig run = seq;
      run.noisy = m == 1;
      const RunOptions run_options{derive_seed(options.seed, options.label + "-" + methods[m], r),
                                   options.threads, "seq"};
      try {
        const SequentialResult out = seq_abc(model, sequence, run, run_options);
        for (std::size_t n_obs : grid) per_method[m].push_back(out.trace[n_obs - 1].mean);
      } catch (const Error&) {
        failed = true;
      }
    }
    if (failed) {
      ++result.failures;
      continue;
    }
    for (std::size_t m = 0; m < methods.size(); ++m) result.estimates[m].push_back(std::move(per_method[m]));
  }

  const std::size_t valid = result.estimates[0].size();
  if (valid == 0) throw Error("bias_experiment: every replication failed");
  const std::vector<std::string> names = model.param_names();
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (int k = 0; k < p; ++k)
      for (std::size_t m = 0; m < methods.size(); ++m) {
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t r = 0; r < valid; ++r) {
          const double err = result.estimates[m][r][g][k] - config.theta_true[k];
          sum += err;
          sq += err * err;
        }
        result.rows.push_back({grid[g], names[static_cast<std::size_t>(k)], methods[m],
                               std::abs(sum / static_cast<double>(valid)),
                               std::sqrt(sq / static_cast<double>(valid))});
      }

  RngStream boot = seed_stream(options.seed, options.label + "-bootstrap", 0);
  std::size_t standard_worse = 0;
  std::size_t noisy_improves = 0;
  const std::size_t last = grid.size() - 1;
  for (std::size_t b = 0; b < config.bootstrap; ++b) {
    double standard = 0.0;
    double noisy = 0.0;
    double noisy_first = 0.0;
    for (std::size_t r = 0; r < valid; ++r) {
      const std::size_t pick = boot.below(valid);
      standard += result.estimates[0][pick][last][0] - config.theta_true[0];
      noisy += result.estimates[1][pick][last][0] - config.theta_true[0];
      noisy_first += result.estimates[1][pick][0][0] - config.theta_true[0];
    }
    if (std::abs(standard) > std::abs(noisy)) ++standard_worse;
    if (std::abs(noisy) < std::abs(noisy_first)) ++noisy_improves;
  }
  if (config.bootstrap > 0) {
    result.standard_worse_fraction = static_cast<double>(standard_worse) / static_cast<double>(config.bootstrap);
    result.noisy_improves_fraction = static_cast<double>(noisy_improves) / static_cast<double>(config.bootstrap);
  }
  return result;
}

}  // namespace abc
