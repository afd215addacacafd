#pragma once

#include <span>
#include <utility>

namespace abc {

/// Standard normal quantile, Wichura's AS241 (PPND16). Relative accuracy
/// about 1e-16 on (0, 1). Throws std::invalid_argument outside (0, 1).
double normal_quantile(double p);

double normal_cdf(double x);

/// Left-continuous inverse of the weighted empirical CDF,
/// Q(p) = inf{x : F(x) >= p}. Where F jumps exactly onto p the result is
/// the midpoint of that atom and the next one, so symmetric weights give
/// symmetric intervals.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p);

/// Plain (unweighted, type-7 interpolated) sample quantile.
double sample_quantile(std::span<const double> sorted_values, double p);

/// Acceptance band for a Binomial(trials, p) count: the [alpha/2, 1-alpha/2]
/// quantiles of the count, returned as frequencies (count / trials).
std::pair<double, double> binomial_band(int trials, double p, double alpha);

/// log of the Binomial(trials, p) probability mass at k.
double binomial_log_pmf(int k, int trials, double p);

}  // namespace abc
