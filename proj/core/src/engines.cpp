#include "abc/engines.hpp"

#include "abc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace abc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

bool TrainingRegion::contains(const Vector& theta) const {
  if (theta.size() != lower.size()) return false;
  for (int i = 0; i < theta.size(); ++i)
    if (!(theta[i] >= lower[i] && theta[i] <= upper[i])) return false;
  return true;
}

void TrainingRegion::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size())
    throw std::invalid_argument("TrainingRegion: bounds must be non-empty and equal length");
  if (!lower.allFinite() || !upper.allFinite())
    throw std::invalid_argument("TrainingRegion: bounds must be finite");
  if ((lower.array() >= upper.array()).any())
    throw std::invalid_argument("TrainingRegion: need lower < upper in every coordinate");
}

void AbcProblem::validate() const {
  if (!model) throw std::invalid_argument("AbcProblem: no model");
  if (!summary) throw std::invalid_argument("AbcProblem: no summary map");
  if (s_obs.size() != summary->dim())
    throw std::invalid_argument("AbcProblem: s_obs has dimension " + std::to_string(s_obs.size()) +
                                " but the summary map has " + std::to_string(summary->dim()));
  if (kernel.dim() != s_obs.size())
    throw std::invalid_argument("AbcProblem: kernel dimension does not match s_obs");
  if (!s_obs.allFinite()) throw std::invalid_argument("AbcProblem: s_obs is not finite");
  if (region) {
    region->validate();
    if (region->dim() != model->param_dim())
      throw std::invalid_argument("AbcProblem: region dimension does not match the model");
  }
}

double AbcProblem::log_prior(const Vector& theta) const {
  if (region && !region->contains(theta)) return kNegInf;
  return prior().log_density(theta);
}

SimStatus simulate_summary(const AbcProblem& problem, const Vector& theta, RngStream& rng, Vector& out) {
  const std::optional<Dataset> data = problem.model->simulate(theta, rng);
  if (!data) return SimStatus::SimulatorRejected;
  if (problem.model->discard(*data)) return SimStatus::Discarded;
  out = problem.summary->apply(*data);
  if (!out.allFinite()) return SimStatus::NonFinite;
  return SimStatus::Ok;
}

// ---------------------------------------------------------------------------

TruncatedPriorSampler::TruncatedPriorSampler(const Prior& prior, std::optional<TrainingRegion> region)
    : prior_(prior), region_(std::move(region)) {
  if (region_) {
    region_->validate();
    if (region_->dim() != prior_.dim())
      throw std::invalid_argument("TruncatedPriorSampler: region dimension does not match the prior");
    log_bound_ = prior_.max_log_density(region_->lower, region_->upper);
    if (!std::isfinite(log_bound_))
      throw std::invalid_argument("TruncatedPriorSampler: region does not meet the prior support");
  } else if (!prior_.proper()) {
    throw std::invalid_argument("TruncatedPriorSampler: an improper prior needs a bounded region");
  }
}

Vector TruncatedPriorSampler::draw(RngStream& rng) const {
  if (!region_) return prior_.sample(rng);
  const int d = region_->dim();
  constexpr long kMaxAttempts = 10'000'000;
  Vector theta(d);
  for (long attempt = 0; attempt < kMaxAttempts; ++attempt) {
    for (int i = 0; i < d; ++i) theta[i] = rng.uniform(region_->lower[i], region_->upper[i]);
    const double log_p = prior_.log_density(theta);
    if (log_p == kNegInf) continue;
    if (std::log(rng.uniform()) < log_p - log_bound_) return theta;
  }
  throw Error("truncated prior: no draw accepted in 1e7 attempts; the region barely meets the prior support");
}

double TruncatedPriorSampler::acceptance_estimate(RngStream& rng, int trials) const {
  if (!region_) return 1.0;
  const int d = region_->dim();
  Vector theta(d);
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < d; ++i) theta[i] = rng.uniform(region_->lower[i], region_->upper[i]);
    const double log_p = prior_.log_density(theta);
    if (log_p != kNegInf && std::log(rng.uniform()) < log_p - log_bound_) ++hits;
  }
  return static_cast<double>(hits) / std::max(trials, 1);
}

GaussianProposal::GaussianProposal(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size())
    throw std::invalid_argument("GaussianProposal: covariance shape does not match the mean");
  chol_.compute(covariance_);
  if (chol_.info() != Eigen::Success)
    throw std::invalid_argument("GaussianProposal: covariance must be positive-definite");
  const Matrix l = chol_.matrixL();
  log_norm_ = -0.5 * static_cast<double>(mean_.size()) * kLog2Pi - l.diagonal().array().log().sum();
}

Vector GaussianProposal::sample(RngStream& rng) const {
  Vector z(mean_.size());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean_ + chol_.matrixL() * z;
}

double GaussianProposal::log_density(const Vector& theta) const {
  const Vector r = chol_.matrixL().solve(theta - mean_);
  return log_norm_ - 0.5 * r.squaredNorm();
}

// ---------------------------------------------------------------------------

ImportanceResult abc_importance(const AbcProblem& problem, std::size_t n, const RunOptions& options,
                                const Proposal* proposal) {
  problem.validate();
  std::optional<TruncatedPriorSampler> sampler;
  if (!proposal) sampler.emplace(problem.prior(), problem.region);

  struct Draw {
    Vector theta;
    Vector s;
    double log_k = kNegInf;
    double weight = 0.0;
    bool simulator_rejected = false;
  };
  std::vector<Draw> draws(n);

  parallel_for(n, resolve_threads(options.threads), [&](std::size_t i) {
    RngStream rng = seed_stream(options.seed, options.label, i);
    Draw& draw = draws[i];
    draw.theta = proposal ? proposal->sample(rng) : sampler->draw(rng);
    const double log_p = problem.log_prior(draw.theta);
    if (log_p == kNegInf) return;
    const SimStatus status = simulate_summary(problem, draw.theta, rng, draw.s);
    if (status != SimStatus::Ok) {
      draw.simulator_rejected = true;
      return;
    }
    draw.log_k = problem.kernel.log_accept_weight(draw.s - problem.s_obs);
    // The kernel value is itself the acceptance probability (max K = 1).
    if (draw.log_k == kNegInf || !(std::log(rng.uniform()) < draw.log_k)) return;
    draw.weight = proposal ? std::exp(log_p - proposal->log_density(draw.theta)) : 1.0;
  });

  ImportanceResult result;
  result.proposals = n;
  for (Draw& draw : draws) {
    if (draw.simulator_rejected) ++result.simulator_rejections;
    if (!(draw.weight > 0.0)) continue;
    ++result.accepted;
    result.kernel_values.push_back(std::exp(draw.log_k));
    result.sample.push_back(std::move(draw.theta), draw.weight, std::move(draw.s));
  }
  return result;
}

// ---------------------------------------------------------------------------

McmcResult abc_mcmc(const AbcProblem& problem, const McmcConfig& config, const RunOptions& options) {
  problem.validate();
  const int p = problem.model->param_dim();
  if (config.theta0.size() != p) throw std::invalid_argument("abc_mcmc: theta0 has the wrong dimension");
  if (!(config.burn_in_fraction >= 0.0 && config.burn_in_fraction < 1.0))
    throw std::invalid_argument("abc_mcmc: burn-in fraction must lie in [0, 1)");
  const std::vector<Transform> transform =
      config.transform.empty() ? std::vector<Transform>(static_cast<std::size_t>(p), Transform::Identity)
                               : config.transform;
  if (transform.size() != static_cast<std::size_t>(p))
    throw std::invalid_argument("abc_mcmc: transform has the wrong dimension");

  Eigen::LLT<Matrix> chol;
  if (!config.integer_lattice) {
    if (config.proposal_cov.rows() != p || config.proposal_cov.cols() != p)
      throw std::invalid_argument("abc_mcmc: proposal covariance has the wrong shape");
    chol.compute(config.proposal_cov);
    if (chol.info() != Eigen::Success || !config.proposal_cov.isApprox(config.proposal_cov.transpose()))
      throw std::invalid_argument("abc_mcmc: proposal covariance must be symmetric positive-definite");
  }

  RngStream rng = seed_stream(options.seed, options.label, 0);
  McmcResult result;

  Vector theta = config.theta0;
  double log_p = problem.log_prior(theta);
  if (log_p == kNegInf) throw std::invalid_argument("abc_mcmc: theta0 has zero prior density");

  Vector s;
  double log_k = kNegInf;
  if (config.s0) {
    s = *config.s0;
    log_k = problem.kernel.log_accept_weight(s - problem.s_obs);
    if (log_k == kNegInf) throw std::invalid_argument("abc_mcmc: supplied s0 has zero kernel value");
  } else {
    for (std::size_t attempt = 0; attempt < config.init_attempts && log_k == kNegInf; ++attempt) {
      ++result.simulations;
      if (simulate_summary(problem, theta, rng, s) == SimStatus::Ok)
        log_k = problem.kernel.log_accept_weight(s - problem.s_obs);
    }
    if (log_k == kNegInf)
      throw Error("abc_mcmc: no simulation at theta0 had a positive kernel value after " +
                  std::to_string(config.init_attempts) + " attempts; try a larger bandwidth");
  }

  double log_target = log_p + log_jacobian(transform, theta);
  Vector working = to_working(transform, theta);
  const auto burn_in = static_cast<std::size_t>(std::floor(config.burn_in_fraction * static_cast<double>(config.length)));
  Vector z(p);
  Vector s_new;

  for (std::size_t step = 0; step < config.length; ++step) {
    Vector proposal_w(p);
    if (config.integer_lattice) {
      for (int i = 0; i < p; ++i) proposal_w[i] = working[i] + (rng.uniform() < 0.5 ? -1.0 : 1.0);
    } else {
      for (int i = 0; i < p; ++i) z[i] = rng.normal();
      proposal_w = working + chol.matrixL() * z;
    }
    const Vector proposal = from_working(transform, proposal_w);
    const double log_p_new = proposal.allFinite() ? problem.log_prior(proposal) : kNegInf;
    ++result.steps;
    if (log_p_new != kNegInf) {
      ++result.simulations;
      if (simulate_summary(problem, proposal, rng, s_new) == SimStatus::Ok) {
        const double log_k_new = problem.kernel.log_accept_weight(s_new - problem.s_obs);
        if (log_k_new != kNegInf) {
          const double log_target_new = log_p_new + log_jacobian(transform, proposal);
          const double log_alpha = (log_k_new - log_k) + (log_target_new - log_target);
          if (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha) {
            theta = proposal;
            working = proposal_w;
            s = s_new;
            log_k = log_k_new;
            log_target = log_target_new;
            ++result.accepted_moves;
          }
        }
      }
    }
    if (step >= burn_in) {
      if (config.keep_summaries) result.sample.push_back(theta, 1.0, s);
      else result.sample.push_back(theta, 1.0);
    }
  }
  return result;
}

NoisyObservation make_noisy(const AbcProblem& problem, RngStream& rng) {
  problem.validate();
  NoisyObservation out{problem, problem.s_obs, Vector::Zero(problem.s_obs.size())};
  const double h = problem.kernel.bandwidth();
  if (h == 0.0) return out;
  out.perturbation = h * problem.kernel.sample(rng);
  out.problem.s_obs = problem.s_obs + out.perturbation;
  return out;
}

// ---------------------------------------------------------------------------

BandwidthTuning bandwidth_from_distances(std::vector<double> distances, KernelShape shape,
                                         double target_rate) {
  if (!(target_rate > 0.0 && target_rate <= 1.0))
    throw std::invalid_argument("tune_bandwidth: target rate must lie in (0, 1]");
  if (distances.empty()) throw std::invalid_argument("tune_bandwidth: no pilot distances");
  BandwidthTuning out;
  out.simulations = distances.size();
  std::sort(distances.begin(), distances.end());
  std::size_t finite = 0;
  std::size_t nonzero = 0;
  for (double d : distances) {
    if (!std::isfinite(d)) continue;
    ++finite;
    if (d > 0.0) ++nonzero;
  }
  if (finite > 0 && nonzero == 0) {
    out.bandwidth = std::numeric_limits<double>::denorm_min();
    out.degenerate = true;
    return out;
  }
  if (nonzero < 10)
    throw Error("tune_bandwidth: only " + std::to_string(nonzero) +
                " non-zero pilot distances; at least 10 are needed");

  const double n = static_cast<double>(distances.size());
  if (shape == KernelShape::UniformEllipsoid) {
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(target_rate * n)));
    const double d = distances[k - 1];
    if (!std::isfinite(d)) throw Error("tune_bandwidth: target rate exceeds the fraction of usable simulations");
    out.bandwidth = std::nextafter(d, std::numeric_limits<double>::infinity());
    if (out.bandwidth == 0.0) out.bandwidth = std::numeric_limits<double>::denorm_min();
    return out;
  }

  auto mean_kernel = [&](double h) {
    double sum = 0.0;
    for (double d : distances)
      if (std::isfinite(d)) sum += std::exp(-0.5 * (d / h) * (d / h));
    return sum / n;
  };
  double smallest = std::numeric_limits<double>::infinity();
  double largest = 0.0;
  for (double d : distances) {
    if (!std::isfinite(d) || d == 0.0) continue;
    smallest = std::min(smallest, d);
    largest = std::max(largest, d);
  }
  double lo = std::log(smallest * 1e-3);
  double hi = std::log(largest * 1e3);
  if (mean_kernel(std::exp(hi)) < target_rate) {
    out.bandwidth = std::exp(hi);
    return out;
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mean_kernel(std::exp(mid)) < target_rate) lo = mid;
    else hi = mid;
  }
  out.bandwidth = std::exp(hi);
  return out;
}

BandwidthTuning tune_bandwidth(const AbcProblem& problem, double target_rate, std::size_t pilot_n,
                               const RunOptions& options) {
  problem.validate();
  const TruncatedPriorSampler sampler(problem.prior(), problem.region);
  std::vector<double> distances(pilot_n, std::numeric_limits<double>::infinity());
  parallel_for(pilot_n, resolve_threads(options.threads), [&](std::size_t i) {
    RngStream rng = seed_stream(options.seed, options.label, i);
    const Vector theta = sampler.draw(rng);
    Vector s;
    if (simulate_summary(problem, theta, rng, s) == SimStatus::Ok)
      distances[i] = problem.kernel.distance(s - problem.s_obs);
  });
  return bandwidth_from_distances(std::move(distances), problem.kernel.shape(), target_rate);
}

QuantileRejectionResult abc_rejection_quantile(const AbcProblem& problem, std::size_t n,
                                               double accept_fraction, const RunOptions& options,
                                               bool keep_summaries) {
  problem.validate();
  if (!(accept_fraction > 0.0 && accept_fraction <= 1.0))
    throw std::invalid_argument("abc_rejection_quantile: accept fraction must lie in (0, 1]");
  if (n == 0) throw std::invalid_argument("abc_rejection_quantile: no simulations requested");
  const TruncatedPriorSampler sampler(problem.prior(), problem.region);
  std::vector<Vector> thetas(n);
  std::vector<Vector> summaries(keep_summaries ? n : 0);
  std::vector<double> distances(n, std::numeric_limits<double>::infinity());
  std::vector<char> rejected(n, 0);

  parallel_for(n, resolve_threads(options.threads), [&](std::size_t i) {
    RngStream rng = seed_stream(options.seed, options.label, i);
    thetas[i] = sampler.draw(rng);
    Vector s;
    if (simulate_summary(problem, thetas[i], rng, s) != SimStatus::Ok) {
      rejected[i] = 1;
      return;
    }
    distances[i] = problem.kernel.distance(s - problem.s_obs);
    if (keep_summaries) summaries[i] = std::move(s);
  });

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(accept_fraction * static_cast<double>(n))));
  std::nth_element(order.begin(), order.begin() + static_cast<long>(k - 1), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
                   });
  const double cutoff = distances[order[k - 1]];
  if (!std::isfinite(cutoff))
    throw Error("abc_rejection_quantile: fewer usable simulations than the requested acceptances");

  QuantileRejectionResult out;
  out.bandwidth = std::nextafter(cutoff, std::numeric_limits<double>::infinity());
  ImportanceResult& result = out.result;
  result.proposals = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (rejected[i]) ++result.simulator_rejections;
    if (!(distances[i] <= cutoff)) continue;
    ++result.accepted;
    result.kernel_values.push_back(1.0);
    if (keep_summaries) result.sample.push_back(thetas[i], 1.0, summaries[i]);
    else result.sample.push_back(thetas[i], 1.0);
  }
  return out;
}

}  // namespace abc
