#include "abc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace abc {

namespace {

double poly(const double* c, int n, double x) {
  double result = c[n - 1];
  for (int i = n - 2; i >= 0; --i) result = result * x + c[i];
  return result;
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");

  static constexpr double a[8] = {3.3871328727963666080e0, 1.3314166789178437745e+2,
                                  1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                  4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                  3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static constexpr double b[8] = {1.0,
                                  4.2313330701600911252e+1, 6.8718700749205790830e+2,
                                  5.3941960214247511077e+3, 2.1213794301586595867e+4,
                                  3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                  5.2264952788528545610e+3};
  static constexpr double c[8] = {1.42343711074968357734e0, 4.63033784615654529590e0,
                                  5.76949722146069140550e0, 3.64784832476320460504e0,
                                  1.27045825245236838258e0, 2.41780725177450611770e-1,
                                  2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[8] = {1.0,
                                  2.05319162663775882187e0, 1.67638483018380384940e0,
                                  6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                  1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                  1.05075007164441684324e-9};
  static constexpr double e[8] = {6.65790464350110377720e0, 5.46378491116411436990e0,
                                  1.78482653991729133580e0, 2.96560571828504891230e-1,
                                  2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                  2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[8] = {1.0,
                                  5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                  1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                  1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                  2.04426310338993978564e-15};

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(a, 8, r) / poly(b, 8, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = poly(c, 8, r) / poly(d, 8, r);
  } else {
    r -= 5.0;
    value = poly(e, 8, r) / poly(f, 8, r);
  }
  return q < 0.0 ? -value : value;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p) {
  if (values.size() != weights.size() || values.empty())
    throw std::invalid_argument("weighted_quantile: values and weights must be non-empty and equal length");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("weighted_quantile: p must lie in [0, 1]");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weighted_quantile: weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("weighted_quantile: total weight must be positive");

  const double tol = 1e-12;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (weights[i] == 0.0) continue;
    cumulative += weights[i] / total;
    if (cumulative >= p - tol) {
      if (std::abs(cumulative - p) <= tol && p < 1.0) {
        for (std::size_t j = k + 1; j < order.size(); ++j) {
          if (weights[order[j]] > 0.0) return 0.5 * (values[i] + values[order[j]]);
        }
      }
      return values[i];
    }
  }
  for (std::size_t k = order.size(); k-- > 0;) {
    if (weights[order[k]] > 0.0) return values[order[k]];
  }
  return values[order.back()];
}

double sample_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("sample_quantile: empty input");
  if (sorted.size() == 1) return sorted[0];
  const double position = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(position));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = position - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double binomial_log_pmf(int k, int n, double p) {
  if (k < 0 || k > n) return -INFINITY;
  if (p <= 0.0) return k == 0 ? 0.0 : -INFINITY;
  if (p >= 1.0) return k == n ? 0.0 : -INFINITY;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(p) + (n - k) * std::log1p(-p);
}

std::pair<double, double> binomial_band(int trials, double p, double alpha) {
  if (trials <= 0) throw std::invalid_argument("binomial_band: trials must be positive");
  std::vector<double> cdf(static_cast<std::size_t>(trials) + 1);
  double running = 0.0;
  for (int k = 0; k <= trials; ++k) {
    running += std::exp(binomial_log_pmf(k, trials, p));
    cdf[static_cast<std::size_t>(k)] = running;
  }
  int lower = 0;
  while (lower < trials && cdf[static_cast<std::size_t>(lower)] < alpha / 2.0) ++lower;
  int upper = 0;
  while (upper < trials && cdf[static_cast<std::size_t>(upper)] < 1.0 - alpha / 2.0) ++upper;
  return {static_cast<double>(lower) / trials, static_cast<double>(upper) / trials};
}

}  // namespace abc
