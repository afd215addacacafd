#include "abc/models.hpp"
#include "abc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace abc {

double gk_inverse_cdf(double u, const GkParams& p) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("gk_inverse_cdf: u must lie in (0, 1)");
  if (!(p.B > 0.0)) throw std::invalid_argument("gk_inverse_cdf: B must be positive");
  if (!(p.k > -0.5)) throw std::invalid_argument("gk_inverse_cdf: k must exceed -1/2");
  const double z = normal_quantile(u);
  // (1 - e^{-gz}) / (1 + e^{-gz}) = tanh(gz / 2), stable for large |gz|.
  const double skew = 1.0 + p.c * std::tanh(0.5 * p.g * z);
  return p.A + p.B * skew * std::pow(1.0 + z * z, p.k) * z;
}

std::vector<std::size_t> evenly_spaced_ranks(std::size_t m, std::size_t n) {
  if (m == 0 || m > n) throw std::invalid_argument("evenly_spaced_ranks: need 1 <= m <= n");
  std::vector<std::size_t> ranks(m);
  for (std::size_t j = 1; j <= m; ++j) ranks[j - 1] = j * (n + 1) / (m + 1);
  return ranks;
}

std::vector<double> uniform_order_stats(const std::vector<std::size_t>& ranks, std::size_t n,
                                        RngStream& rng) {
  std::vector<double> partial(ranks.size());
  double sum = 0.0;
  std::size_t previous = 0;
  for (std::size_t j = 0; j < ranks.size(); ++j) {
    if (ranks[j] <= previous || ranks[j] > n)
      throw std::invalid_argument("uniform_order_stats: ranks must be strictly increasing in 1..n");
    const std::size_t gap = ranks[j] - previous;
    sum += gap == 1 ? rng.exponential(1.0) : rng.gamma(static_cast<double>(gap));
    partial[j] = sum;
    previous = ranks[j];
  }
  const std::size_t tail = n + 1 - previous;
  sum += tail == 1 ? rng.exponential(1.0) : rng.gamma(static_cast<double>(tail));
  for (double& v : partial) v /= sum;
  return partial;
}

std::vector<double> gk_simulate_order_stats(const GkParams& params, std::size_t m, std::size_t n,
                                            RngStream& rng) {
  if (m == 0 || m > n) throw std::invalid_argument("gk_simulate_order_stats: need 1 <= m <= n");
  std::vector<double> out = uniform_order_stats(evenly_spaced_ranks(m, n), n, rng);
  for (double& v : out) v = gk_inverse_cdf(v, params);
  return out;
}

LvResult lv_gillespie(const Vector& theta, LvState initial, const std::vector<double>& obs_times,
                      RngStream& rng, std::uint64_t event_cap) {
  if (theta.size() != 3 || !(theta.array() > 0.0).all())
    throw std::invalid_argument("lv_gillespie: theta must be three positive rates");
  if (initial.prey < 0 || initial.predator < 0)
    throw std::invalid_argument("lv_gillespie: initial state must be non-negative");
  if (!std::is_sorted(obs_times.begin(), obs_times.end()))
    throw std::invalid_argument("lv_gillespie: observation times must be non-decreasing");

  LvResult result;
  result.states.resize(obs_times.size());
  LvState s = initial;
  double t = 0.0;
  std::size_t next = 0;
  while (next < obs_times.size()) {
    const double birth = theta[0] * static_cast<double>(s.prey);
    const double predation = theta[1] * static_cast<double>(s.prey) * static_cast<double>(s.predator);
    const double death = theta[2] * static_cast<double>(s.predator);
    const double total = birth + predation + death;
    const double t_event = total > 0.0 ? t + rng.exponential(total) : INFINITY;
    while (next < obs_times.size() && obs_times[next] < t_event) result.states[next++] = s;
    if (next == obs_times.size()) break;
    if (++result.events > event_cap) {
      result.overflow = true;
      return result;
    }
    const double pick = rng.uniform() * total;
    if (pick < birth) {
      ++s.prey;
    } else if (pick < birth + predation) {
      --s.prey;
      ++s.predator;
    } else {
      --s.predator;
    }
    t = t_event;
  }
  return result;
}

RickerResult ricker_simulate(const Vector& theta, RngStream& rng) {
  if (theta.size() != 3) throw std::invalid_argument("ricker_simulate: theta must be (log r, sigma_e, phi)");
  const double log_r = theta[0];
  const double sigma = theta[1];
  const double phi = theta[2];
  if (!std::isfinite(log_r) || !(sigma >= 0.0) || !(phi >= 0.0))
    throw std::invalid_argument("ricker_simulate: need finite log r, sigma_e >= 0, phi >= 0");
  RickerResult result;
  result.counts.reserve(50);
  result.latent.reserve(50);
  double n = 1.0;
  for (int t = 1; t <= 100; ++t) {
    const double shock = sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0;
    // log N_t = log r + log N_{t-1} - N_{t-1} + e_t; zero is absorbing.
    if (n > 0.0) n = std::exp(log_r + std::log(n) - n + shock);
    if (!std::isfinite(n)) {
      result.non_finite = true;
      return result;
    }
    if (t > 50) {
      result.latent.push_back(n);
      result.counts.push_back(static_cast<double>(rng.poisson(phi * n)));
    }
  }
  return result;
}

std::vector<double> mg1_simulate(const Vector& theta, std::size_t n, RngStream& rng) {
  if (theta.size() != 3) throw std::invalid_argument("mg1_simulate: theta must have three entries");
  if (!(theta[0] >= 0.0) || !(theta[1] >= theta[0]) || !(theta[2] > 0.0))
    throw std::invalid_argument("mg1_simulate: need 0 <= theta1 <= theta2 and theta3 > 0");
  std::vector<double> gaps(n);
  double arrival = 0.0;
  double departure = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    arrival += rng.exponential(theta[2]);
    const double service = rng.uniform(theta[0], theta[1]);
    const double next = std::max(departure, arrival) + service;
    gaps[i] = next - departure;
    departure = next;
  }
  return gaps;
}

TbResult tb_simulate(const Vector& theta, std::size_t n_target, std::size_t sample_size,
                     RngStream& rng, int restart_cap) {
  if (theta.size() != 2) throw std::invalid_argument("tb_simulate: theta must be (a, d)");
  const double a = theta[0];
  const double d = theta[1];
  if (!(d >= 0.0 && d <= a && a + d <= 1.0))
    throw std::invalid_argument("tb_simulate: need 0 <= d <= a and a + d <= 1");
  if (sample_size == 0 || sample_size > n_target)
    throw std::invalid_argument("tb_simulate: need 0 < sample_size <= n_target");

  TbResult result;
  std::vector<std::int64_t> genotype;
  genotype.reserve(n_target);
  for (;;) {
    genotype.assign(1, 0);
    std::int64_t next_label = 1;
    while (!genotype.empty() && genotype.size() < n_target) {
      // Every case carries the same per-capita rates, so the jump chain
      // picks a uniform case and then the event type.
      const std::size_t who = rng.below(genotype.size());
      const double event = rng.uniform();
      if (event < a) {
        genotype.push_back(genotype[who]);
      } else if (event < a + d) {
        genotype[who] = genotype.back();
        genotype.pop_back();
      } else {
        genotype[who] = next_label++;
      }
    }
    if (!genotype.empty()) break;
    if (++result.restarts > restart_cap) {
      result.restart_cap_hit = true;
      return result;
    }
  }

  // Partial Fisher-Yates: the first sample_size slots become the sample.
  for (std::size_t i = 0; i < sample_size; ++i) {
    const std::size_t j = i + rng.below(genotype.size() - i);
    std::swap(genotype[i], genotype[j]);
  }
  std::unordered_map<std::int64_t, std::int64_t> counts;
  for (std::size_t i = 0; i < sample_size; ++i) ++counts[genotype[i]];
  result.clusters.reserve(counts.size());
  for (const auto& [label, count] : counts) result.clusters.push_back(count);
  std::sort(result.clusters.begin(), result.clusters.end(), std::greater<>());
  return result;
}

std::array<double, 2> tb_summaries(const std::vector<std::int64_t>& clusters) {
  if (clusters.empty()) throw std::invalid_argument("tb_summaries: no clusters");
  std::int64_t n = 0;
  std::int64_t squares = 0;
  for (std::int64_t c : clusters) {
    if (c <= 0) throw std::invalid_argument("tb_summaries: cluster sizes must be positive");
    n += c;
    squares += c * c;
  }
  const double total = static_cast<double>(n);
  return {static_cast<double>(clusters.size()) / total,
          1.0 - static_cast<double>(squares) / (total * total)};
}

std::vector<std::int64_t> tb_observed_clusters() {
  std::vector<std::int64_t> clusters;
  clusters.insert(clusters.end(), 282, 1);
  clusters.insert(clusters.end(), 20, 2);
  clusters.insert(clusters.end(), 13, 3);
  clusters.insert(clusters.end(), 4, 4);
  clusters.insert(clusters.end(), 2, 5);
  for (std::int64_t size : {8, 10, 15, 23, 30}) clusters.push_back(size);
  std::sort(clusters.begin(), clusters.end(), std::greater<>());
  return clusters;
}

}  // namespace abc
