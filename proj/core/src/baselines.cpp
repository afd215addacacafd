#include "abc/baselines.hpp"

#include "abc/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace abc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool lexicographic_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

RegressionCorrection beaumont_correct(const WeightedSample& sample, const Vector& s_obs,
                                      CorrectionWeights weighting) {
  sample.validate();
  if (sample.summaries.size() != sample.size())
    throw std::invalid_argument("beaumont_correct: the sample carries no accepted summaries");
  RegressionCorrection out;
  out.sample = sample;
  const int p = sample.dim();
  const int d = static_cast<int>(s_obs.size());

  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < sample.size(); ++i)
    if (sample.weights[i] > 0.0) used.push_back(i);
  out.acceptances = used.size();
  const std::size_t needed = 10 * static_cast<std::size_t>(p + 1);
  if (out.acceptances < needed) {
    out.warning = "regression correction skipped: " + std::to_string(out.acceptances) +
                  " acceptances, at least " + std::to_string(needed) + " needed";
    return out;
  }

  const int m = static_cast<int>(used.size());
  Matrix design(m, d + 1);
  Matrix response(m, p);
  for (int r = 0; r < m; ++r) {
    const std::size_t i = used[static_cast<std::size_t>(r)];
    if (sample.summaries[i].size() != d)
      throw std::invalid_argument("beaumont_correct: summary length differs from s_obs");
    const double w = weighting == CorrectionWeights::Kernel ? std::sqrt(sample.weights[i]) : 1.0;
    design(r, 0) = w;
    design.row(r).tail(d) = w * (sample.summaries[i] - s_obs).transpose();
    response.row(r) = w * sample.points[i].transpose();
  }

  const Eigen::JacobiSVD<Matrix> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  out.condition_number = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : kInf;
  if (!(out.condition_number < 1e12)) {
    out.warning = "regression correction skipped: design matrix is rank deficient";
    return out;
  }
  const Matrix beta = svd.solve(response);  // (d + 1) x p
  out.intercept = beta.row(0).transpose();
  out.slopes = beta.bottomRows(d).transpose();
  for (std::size_t i = 0; i < sample.size(); ++i)
    out.sample.points[i] = sample.points[i] - out.slopes * (sample.summaries[i] - s_obs);
  out.applied = true;
  return out;
}

double synthetic_loglik(std::vector<Vector> sims, const Vector& s_obs) {
  const int d = static_cast<int>(s_obs.size());
  if (sims.size() < static_cast<std::size_t>(d) + 3)
    throw std::invalid_argument("synthetic_loglik: need more than d + 2 replicates");
  std::sort(sims.begin(), sims.end(), lexicographic_less);
  const double r = static_cast<double>(sims.size());
  Vector mean = Vector::Zero(d);
  for (const Vector& s : sims) {
    if (s.size() != d) throw std::invalid_argument("synthetic_loglik: replicate length differs from s_obs");
    mean += s;
  }
  mean /= r;
  Matrix cov = Matrix::Zero(d, d);
  for (const Vector& s : sims) {
    const Vector c = s - mean;
    cov += c * c.transpose();
  }
  cov /= r - 1.0;
  const double eps = std::max(1e-8 * cov.trace() / d, 1e-10);
  cov.diagonal().array() += eps;
  const Eigen::LLT<Matrix> chol(cov);
  if (chol.info() != Eigen::Success) throw Error("synthetic_loglik: covariance is singular after regularisation");
  const Vector z = chol.matrixL().solve(s_obs - mean);
  const double log_det = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + z.squaredNorm());
}

SyntheticLikelihoodResult synthetic_likelihood_mcmc(const AbcProblem& problem,
                                                    const SyntheticLikelihoodConfig& config,
                                                    const RunOptions& options) {
  problem.validate();
  const int p = problem.model->param_dim();
  const int d = problem.summary->dim();
  if (config.replicates <= static_cast<std::size_t>(d) + 2)
    throw std::invalid_argument("synthetic_likelihood_mcmc: replicates must exceed d + 2");
  if (config.theta0.size() != p) throw std::invalid_argument("synthetic_likelihood_mcmc: theta0 has the wrong dimension");
  if (config.proposal_cov.rows() != p || config.proposal_cov.cols() != p)
    throw std::invalid_argument("synthetic_likelihood_mcmc: proposal covariance has the wrong shape");
  const Eigen::LLT<Matrix> chol(config.proposal_cov);
  if (chol.info() != Eigen::Success)
    throw std::invalid_argument("synthetic_likelihood_mcmc: proposal covariance must be positive-definite");
  const std::vector<Transform> transform =
      config.transform.empty() ? std::vector<Transform>(static_cast<std::size_t>(p), Transform::Identity)
                               : config.transform;
  if (transform.size() != static_cast<std::size_t>(p))
    throw std::invalid_argument("synthetic_likelihood_mcmc: transform has the wrong dimension");

  const int threads = resolve_threads(options.threads);
  const std::size_t rs = config.replicates;
  SyntheticLikelihoodResult result;
  std::size_t proposal_index = 0;

  auto loglik = [&](const Vector& theta) {
    std::vector<Vector> sims(rs);
    std::vector<char> ok(rs, 0);
    const std::size_t base = proposal_index++ * rs;
    parallel_for(rs, threads, [&](std::size_t r) {
      RngStream rng = seed_stream(options.seed, options.label, base + r);
      ok[r] = simulate_summary(problem, theta, rng, sims[r]) == SimStatus::Ok;
    });
    result.simulations += rs;
    std::vector<Vector> usable;
    for (std::size_t r = 0; r < rs; ++r)
      if (ok[r]) usable.push_back(std::move(sims[r]));
    if (usable.size() <= static_cast<std::size_t>(d) + 2) return kNegInf;
    return synthetic_loglik(std::move(usable), problem.s_obs);
  };

  Vector theta = config.theta0;
  const double log_p0 = problem.log_prior(theta);
  if (log_p0 == kNegInf) throw std::invalid_argument("synthetic_likelihood_mcmc: theta0 has zero prior density");
  double log_l = loglik(theta);
  if (log_l == kNegInf) throw Error("synthetic_likelihood_mcmc: too few usable simulations at theta0");
  double log_target = log_l + log_p0 + log_jacobian(transform, theta);
  Vector working = to_working(transform, theta);

  RngStream rng = seed_stream(options.seed, options.label + "-chain", 0);
  const auto burn_in =
      static_cast<std::size_t>(std::floor(config.burn_in_fraction * static_cast<double>(config.length)));
  Vector z(p);
  for (std::size_t step = 0; step < config.length; ++step) {
    for (int i = 0; i < p; ++i) z[i] = rng.normal();
    const Vector proposal_w = working + chol.matrixL() * z;
    const Vector proposal = from_working(transform, proposal_w);
    const double u = rng.uniform();
    ++result.steps;
    const double log_p = proposal.allFinite() ? problem.log_prior(proposal) : kNegInf;
    if (log_p != kNegInf) {
      const double log_l_new = loglik(proposal);
      if (log_l_new != kNegInf) {
        const double log_target_new = log_l_new + log_p + log_jacobian(transform, proposal);
        if (std::log(u) < log_target_new - log_target) {
          theta = proposal;
          working = proposal_w;
          log_target = log_target_new;
          ++result.accepted_moves;
        }
      }
    }
    if (step >= burn_in) result.sample.push_back(theta, 1.0);
  }
  return result;
}

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& objective, const Vector& x0,
                             const Vector& step, const NelderMeadConfig& config) {
  const int n = static_cast<int>(x0.size());
  if (n == 0 || step.size() != n) throw std::invalid_argument("nelder_mead: x0 and step must have equal, positive length");
  NelderMeadResult out;
  double first_value = std::numeric_limits<double>::quiet_NaN();
  bool varied = false;
  auto eval = [&](const Vector& x) {
    double f = objective(x);
    if (!std::isfinite(f)) f = kInf;
    if (out.evaluations == 0) first_value = f;
    else if (f != first_value) varied = true;
    ++out.evaluations;
    return f;
  };

  std::vector<Vector> simplex(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> values(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i) + 1][i] += step[i];
  for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    out.trace.push_back(values[best]);

    double spread_x = 0.0;
    for (const Vector& v : simplex) spread_x = std::max(spread_x, (v - simplex[best]).cwiseAbs().maxCoeff());
    const double spread_f = values[worst] - values[best];
    if (std::isfinite(values[best]) && spread_f <= config.f_tolerance * (1.0 + std::abs(values[best])) &&
        spread_x <= config.x_tolerance * (1.0 + simplex[best].cwiseAbs().maxCoeff())) {
      out.converged = true;
      break;
    }
    if (out.evaluations >= config.max_evaluations) break;

    Vector centroid = Vector::Zero(n);
    for (std::size_t i : order)
      if (i != worst) centroid += simplex[i];
    centroid /= n;

    const Vector reflected = centroid + (centroid - simplex[worst]);
    const double f_r = eval(reflected);
    if (f_r < values[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double f_e = eval(expanded);
      if (f_e < f_r) {
        simplex[worst] = expanded;
        values[worst] = f_e;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_r;
      }
      continue;
    }
    if (f_r < values[second]) {
      simplex[worst] = reflected;
      values[worst] = f_r;
      continue;
    }
    const bool outside = f_r < values[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid + 0.5 * (simplex[worst] - centroid));
    const double f_c = eval(contracted);
    if (f_c < (outside ? f_r : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_c;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  out.x = simplex[best];
  out.value = values[best];
  out.flat = !varied;
  if (out.flat) out.converged = false;
  return out;
}

IndirectResult indirect_inference(const Model& model, const SummaryPtr& auxiliary, const Dataset& observed,
                                  const IndirectConfig& config, const RunOptions& options) {
  if (!auxiliary) throw std::invalid_argument("indirect_inference: no auxiliary map");
  const int p = model.param_dim();
  if (config.theta0.size() != p) throw std::invalid_argument("indirect_inference: theta0 has the wrong dimension");
  if (config.replicates == 0) throw std::invalid_argument("indirect_inference: need at least one replicate");
  const Vector a_obs = auxiliary->apply(observed);
  if (!a_obs.allFinite()) throw std::invalid_argument("indirect_inference: auxiliaries of the observed data are not finite");
  const int q = static_cast<int>(a_obs.size());
  const std::vector<Transform> transform = model.working_transform();
  const int threads = resolve_threads(options.threads);
  const std::size_t reps = config.replicates;
  IndirectResult result;

  auto replicate_auxiliaries = [&](const Vector& theta) {
    std::vector<Vector> aux(reps);
    std::vector<char> ok(reps, 0);
    parallel_for(reps, threads, [&](std::size_t r) {
      RngStream rng = seed_stream(options.seed, options.label, r);
      const std::optional<Dataset> data = model.simulate(theta, rng);
      if (!data || model.discard(*data)) return;
      aux[r] = auxiliary->apply(*data);
      ok[r] = aux[r].allFinite();
    });
    result.simulations += reps;
    std::vector<Vector> out;
    for (std::size_t r = 0; r < reps; ++r)
      if (ok[r]) out.push_back(std::move(aux[r]));
    return out;
  };

  Matrix metric = config.metric;
  if (metric.size() == 0) {
    const std::vector<Vector> aux = replicate_auxiliaries(config.theta0);
    if (aux.size() < 2) throw Error("indirect_inference: fewer than two usable simulations at theta0");
    Vector mean = Vector::Zero(q);
    for (const Vector& a : aux) mean += a;
    mean /= static_cast<double>(aux.size());
    Vector var = Vector::Zero(q);
    for (const Vector& a : aux) var += (a - mean).cwiseAbs2();
    var /= static_cast<double>(aux.size() - 1);
    for (int j = 0; j < q; ++j)
      if (!(var[j] > 0.0)) var[j] = 1.0;
    metric = var.cwiseInverse().asDiagonal();
  }
  if (metric.rows() != q || metric.cols() != q || Eigen::LLT<Matrix>(metric).info() != Eigen::Success)
    throw std::invalid_argument("indirect_inference: metric must be q x q positive-definite");

  auto objective = [&](const Vector& w) {
    const Vector theta = from_working(transform, w);
    if (!theta.allFinite() || !std::isfinite(model.prior().log_density(theta))) return kInf;
    const std::vector<Vector> aux = replicate_auxiliaries(theta);
    if (aux.empty()) return kInf;
    Vector mean = Vector::Zero(q);
    for (const Vector& a : aux) mean += a;
    mean /= static_cast<double>(aux.size());
    const Vector diff = mean - a_obs;
    return diff.dot(metric * diff);
  };

  const Vector w0 = to_working(transform, config.theta0);
  Vector step = config.step;
  if (step.size() == 0) {
    step = 0.1 * w0.cwiseAbs();
    for (int j = 0; j < p; ++j)
      if (!(step[j] > 0.0)) step[j] = 0.1;
  }
  const NelderMeadResult fit = nelder_mead(objective, w0, step, config.optimizer);
  result.estimate = from_working(transform, fit.x);
  result.objective = fit.value;
  result.evaluations = fit.evaluations;
  result.converged = fit.converged;
  result.flat = fit.flat;
  result.trace = fit.trace;
  return result;
}

double mg1_steady_state_loglik(const Vector& theta, const std::vector<double>& y) {
  if (theta.size() != 3) throw std::invalid_argument("mg1_steady_state_loglik: theta must have three entries");
  const double a = theta[0];
  const double b = theta[1];
  const double lambda = theta[2];
  if (!(a >= 0.0 && b > a && lambda > 0.0)) return kNegInf;
  const double rho = lambda * (a + b) / 2.0;
  if (!(rho < 1.0)) return kNegInf;
  const double width = b - a;
  double total = 0.0;
  for (double v : y) {
    if (v < a) return kNegInf;
    const double busy = v <= b ? 1.0 / width : 0.0;
    const double idle = v <= b ? -std::expm1(-lambda * (v - a)) / width
                               : std::exp(-lambda * (v - b)) * -std::expm1(-lambda * width) / width;
    const double f = rho * busy + (1.0 - rho) * idle;
    if (!(f > 0.0)) return kNegInf;
    total += std::log(f);
  }
  return total;
}

double mg1_steady_state_theta2(const std::vector<double>& y) {
  if (y.size() < 2) throw std::invalid_argument("mg1_steady_state_theta2: need at least two observations");
  const double y_min = *std::min_element(y.begin(), y.end());
  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  if (!(y_min > 0.0)) throw std::invalid_argument("mg1_steady_state_theta2: observations must be positive");
  // theta1 = y_min * logistic(x1), theta2 = theta1 + exp(x2), theta3 = exp(x3).
  auto decode = [&](const Vector& x) {
    Vector theta(3);
    theta[0] = y_min / (1.0 + std::exp(-x[0]));
    theta[1] = theta[0] + std::exp(x[1]);
    theta[2] = std::exp(x[2]);
    return theta;
  };
  auto negative = [&](const Vector& x) { return -mg1_steady_state_loglik(decode(x), y); };
  const double theta1 = 0.9 * y_min;
  const double theta2 = std::max(1.1 * y_min, std::min(y_mean, 2.0 * y_min + 1.0));
  const double lambda = std::min(1.0 / y_mean, 1.0 / (theta1 + theta2));
  Vector x0(3);
  x0 << std::log(0.9 / 0.1), std::log(theta2 - theta1), std::log(lambda);
  NelderMeadConfig config;
  config.max_evaluations = 3000;
  NelderMeadResult fit = nelder_mead(negative, x0, Vector::Constant(3, 0.5), config);
  fit = nelder_mead(negative, fit.x, Vector::Constant(3, 0.1), config);
  return decode(fit.x)[1];
}

Vector Mg1AuxiliaryMap::apply(const Dataset& data) const {
  const std::vector<double>& y = data.values;
  if (y.empty()) throw std::invalid_argument("Mg1AuxiliaryMap: empty dataset");
  Vector out(3);
  out[0] = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  out[1] = *std::min_element(y.begin(), y.end());
  out[2] = mle_ ? mg1_steady_state_theta2(y) : *std::max_element(y.begin(), y.end());
  return out;
}

}  // namespace abc
