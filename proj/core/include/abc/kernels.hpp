#pragma once

#include "abc/rng.hpp"
#include "abc/types.hpp"

#include <Eigen/Cholesky>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace abc {

enum class KernelShape { UniformEllipsoid, Gaussian };

const char* to_string(KernelShape shape);
KernelShape kernel_shape_from_string(const std::string& name);

/// Acceptance kernel K normalised so that max K = K(0) = 1.
///
/// UniformEllipsoid: K(x) = 1 if x'Ax < 1, else 0 (the cutoff is fixed at
/// one; all scale lives in the metric A and the bandwidth h).
/// Gaussian:         K(x) = exp(-x'Ax / 2).
///
/// Engines evaluate K((s - s_obs) / h). A bandwidth of exactly zero is
/// allowed and means exact matching.
class DensityKernel {
 public:
  DensityKernel(KernelShape shape, Matrix metric, double bandwidth);

  static DensityKernel uniform(int dim, double bandwidth = 1.0);
  static DensityKernel gaussian(int dim, double bandwidth = 1.0);

  KernelShape shape() const { return shape_; }
  const Matrix& metric() const { return metric_; }
  double bandwidth() const { return bandwidth_; }
  int dim() const { return static_cast<int>(metric_.rows()); }

  DensityKernel with_bandwidth(double h) const;
  DensityKernel with_metric(Matrix metric) const;

  /// x'Ax.
  double quadratic_form(const Vector& x) const;
  /// K(x) for an already-scaled argument.
  double evaluate(const Vector& x) const;
  /// log K(x); -inf outside the support.
  double log_evaluate(const Vector& x) const;
  /// log K(diff / h), handling h = 0 as exact matching.
  double log_accept_weight(const Vector& diff) const;
  double accept_weight(const Vector& diff) const;
  /// sqrt(diff' A diff): the whitened distance compared against h.
  double distance(const Vector& diff) const;

  /// A draw from the probability density proportional to K.
  Vector sample(RngStream& rng) const;

 private:
  void check_dim(const Vector& x) const;

  KernelShape shape_;
  Matrix metric_;
  double bandwidth_;
  Eigen::LLT<Matrix> chol_;
};

/// Positive-definite weight matrix of the quadratic loss.
class LossMatrix {
 public:
  explicit LossMatrix(Matrix matrix);
  static LossMatrix identity(int dim);
  /// diag(1 / variances).
  static LossMatrix inverse_variances(const Vector& variances);

  const Matrix& matrix() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

 private:
  Matrix matrix_;
};

/// Weighted parameter sample, optionally with the accepted summaries and
/// the chain each draw came from.
struct WeightedSample {
  std::vector<Vector> points;
  std::vector<double> weights;
  std::vector<Vector> summaries;
  std::vector<int> chain;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  void push_back(Vector point, double weight, std::optional<Vector> summary = std::nullopt,
                 int chain_index = 0);
  /// Throws std::invalid_argument unless lengths agree and weights are
  /// finite and non-negative.
  void validate() const;
};

double kernel_evaluate(const DensityKernel& kernel, const Vector& x);
Vector kernel_sample(const DensityKernel& kernel, RngStream& rng);

/// (truth - estimate)' A (truth - estimate).
double quadratic_loss(const Vector& truth, const Vector& estimate, const LossMatrix& loss);

/// N / mean(w^2) with weights rescaled to mean one.
double effective_sample_size(std::span<const double> weights);
double effective_sample_size(const WeightedSample& sample);

struct PosteriorSummary {
  Vector mean;
  Matrix covariance;
  Vector median;
  /// Central credible intervals at `level`, one row per parameter.
  Matrix intervals;
  double level = 0.0;
};

/// Weighted mean, covariance and central credible intervals. Throws if
/// the sample holds fewer than two distinct positively weighted points.
PosteriorSummary posterior_summaries(const WeightedSample& sample, double level = 0.95);

/// Weighted mean only; valid for a single point.
Vector weighted_mean(const WeightedSample& sample);

}  // namespace abc
