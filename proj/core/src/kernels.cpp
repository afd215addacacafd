#include "abc/kernels.hpp"

#include "abc/stats.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace abc {

namespace {

void require_symmetric_pd(const Matrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw std::invalid_argument(std::string(what) + ": matrix must be square and non-empty");
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": matrix has non-finite entries");
  if (!m.isApprox(m.transpose(), 1e-12))
    throw std::invalid_argument(std::string(what) + ": matrix must be symmetric");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(what) + ": matrix must be positive-definite");
}

}  // namespace

const char* to_string(KernelShape shape) {
  return shape == KernelShape::Gaussian ? "gaussian" : "uniform";
}

KernelShape kernel_shape_from_string(const std::string& name) {
  if (name == "gaussian") return KernelShape::Gaussian;
  if (name == "uniform" || name == "uniform-ellipsoid") return KernelShape::UniformEllipsoid;
  throw std::invalid_argument("unknown kernel shape '" + name + "'");
}

DensityKernel::DensityKernel(KernelShape shape, Matrix metric, double bandwidth)
    : shape_(shape), metric_(std::move(metric)), bandwidth_(bandwidth) {
  require_symmetric_pd(metric_, "DensityKernel metric");
  if (!(bandwidth_ >= 0.0) || !std::isfinite(bandwidth_))
    throw std::invalid_argument("DensityKernel: bandwidth must be finite and non-negative");
  chol_.compute(metric_);
}

DensityKernel DensityKernel::uniform(int dim, double bandwidth) {
  return DensityKernel(KernelShape::UniformEllipsoid, Matrix::Identity(dim, dim), bandwidth);
}

DensityKernel DensityKernel::gaussian(int dim, double bandwidth) {
  return DensityKernel(KernelShape::Gaussian, Matrix::Identity(dim, dim), bandwidth);
}

DensityKernel DensityKernel::with_bandwidth(double h) const {
  return DensityKernel(shape_, metric_, h);
}

DensityKernel DensityKernel::with_metric(Matrix metric) const {
  return DensityKernel(shape_, std::move(metric), bandwidth_);
}

void DensityKernel::check_dim(const Vector& x) const {
  if (x.size() != metric_.rows())
    throw std::invalid_argument("DensityKernel: argument has dimension " + std::to_string(x.size()) +
                                ", kernel has " + std::to_string(metric_.rows()));
  if (!x.allFinite()) throw std::invalid_argument("DensityKernel: argument is not finite");
}

double DensityKernel::quadratic_form(const Vector& x) const {
  check_dim(x);
  return x.dot(metric_ * x);
}

double DensityKernel::evaluate(const Vector& x) const {
  const double q = quadratic_form(x);
  if (shape_ == KernelShape::UniformEllipsoid) return q < 1.0 ? 1.0 : 0.0;
  return std::exp(-0.5 * q);
}

double DensityKernel::log_evaluate(const Vector& x) const {
  const double q = quadratic_form(x);
  if (shape_ == KernelShape::UniformEllipsoid)
    return q < 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -0.5 * q;
}

double DensityKernel::log_accept_weight(const Vector& diff) const {
  if (bandwidth_ == 0.0) {
    check_dim(diff);
    return diff.isZero(0.0) ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double q = quadratic_form(diff) / (bandwidth_ * bandwidth_);
  if (shape_ == KernelShape::UniformEllipsoid)
    return q < 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -0.5 * q;
}

double DensityKernel::accept_weight(const Vector& diff) const {
  return std::exp(log_accept_weight(diff));
}

double DensityKernel::distance(const Vector& diff) const { return std::sqrt(quadratic_form(diff)); }

Vector DensityKernel::sample(RngStream& rng) const {
  const int d = dim();
  Vector z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  if (shape_ == KernelShape::UniformEllipsoid) {
    // Uniform point in the unit ball: isotropic direction, radius U^(1/d).
    const double norm = z.norm();
    const double radius = std::pow(rng.uniform(), 1.0 / d);
    z *= radius / norm;
  }
  // With A = L L', x = L^{-T} z maps the unit ball onto {x'Ax < 1} and
  // N(0, I) onto N(0, A^{-1}).
  return chol_.matrixU().solve(z);
}

LossMatrix::LossMatrix(Matrix matrix) : matrix_(std::move(matrix)) {
  require_symmetric_pd(matrix_, "LossMatrix");
}

LossMatrix LossMatrix::identity(int dim) { return LossMatrix(Matrix::Identity(dim, dim)); }

LossMatrix LossMatrix::inverse_variances(const Vector& variances) {
  if ((variances.array() <= 0.0).any())
    throw std::invalid_argument("LossMatrix::inverse_variances: variances must be positive");
  return LossMatrix(variances.cwiseInverse().asDiagonal().toDenseMatrix());
}

void WeightedSample::push_back(Vector point, double weight, std::optional<Vector> summary,
                               int chain_index) {
  points.push_back(std::move(point));
  weights.push_back(weight);
  if (summary) summaries.push_back(std::move(*summary));
  chain.push_back(chain_index);
}

void WeightedSample::validate() const {
  if (points.size() != weights.size())
    throw std::invalid_argument("WeightedSample: points and weights differ in length");
  if (!summaries.empty() && summaries.size() != points.size())
    throw std::invalid_argument("WeightedSample: summaries and points differ in length");
  if (!chain.empty() && chain.size() != points.size())
    throw std::invalid_argument("WeightedSample: chain indices and points differ in length");
  for (double w : weights)
    if (!std::isfinite(w) || w < 0.0)
      throw std::invalid_argument("WeightedSample: weights must be finite and non-negative");
}

double kernel_evaluate(const DensityKernel& kernel, const Vector& x) { return kernel.evaluate(x); }

Vector kernel_sample(const DensityKernel& kernel, RngStream& rng) { return kernel.sample(rng); }

double quadratic_loss(const Vector& truth, const Vector& estimate, const LossMatrix& loss) {
  if (truth.size() != estimate.size() || truth.size() != loss.dim())
    throw std::invalid_argument("quadratic_loss: dimension mismatch");
  const Vector diff = truth - estimate;
  return diff.dot(loss.matrix() * diff);
}

double effective_sample_size(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("effective_sample_size: no weights");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw std::invalid_argument("effective_sample_size: weights must be finite and non-negative");
    sum += w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("effective_sample_size: all weights are zero");
  const double n = static_cast<double>(weights.size());
  const double mean = sum / n;
  double mean_square = 0.0;
  for (double w : weights) {
    const double normalised = w / mean;
    mean_square += normalised * normalised;
  }
  mean_square /= n;
  return n / mean_square;
}

double effective_sample_size(const WeightedSample& sample) {
  return effective_sample_size(std::span<const double>(sample.weights));
}

Vector weighted_mean(const WeightedSample& sample) {
  sample.validate();
  if (sample.empty()) throw std::invalid_argument("weighted_mean: empty sample");
  Vector mean = Vector::Zero(sample.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    mean += sample.weights[i] * sample.points[i];
    total += sample.weights[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("weighted_mean: total weight is zero");
  return mean / total;
}

PosteriorSummary posterior_summaries(const WeightedSample& sample, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("posterior_summaries: level must lie in (0, 1)");
  PosteriorSummary out;
  out.level = level;
  out.mean = weighted_mean(sample);
  const int p = sample.dim();

  std::set<std::vector<double>> distinct;
  for (std::size_t i = 0; i < sample.size() && distinct.size() < 2; ++i) {
    if (sample.weights[i] > 0.0)
      distinct.insert(std::vector<double>(sample.points[i].data(),
                                          sample.points[i].data() + sample.points[i].size()));
  }
  if (distinct.size() < 2)
    throw std::invalid_argument("posterior_summaries: variance needs at least two distinct weighted points");

  double total = 0.0;
  Matrix cov = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Vector centred = sample.points[i] - out.mean;
    cov += sample.weights[i] * centred * centred.transpose();
    total += sample.weights[i];
  }
  out.covariance = cov / total;

  out.median.resize(p);
  out.intervals.resize(p, 2);
  std::vector<double> column(sample.size());
  const double tail = (1.0 - level) / 2.0;
  for (int j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < sample.size(); ++i) column[i] = sample.points[i][j];
    out.median[j] = weighted_quantile(column, sample.weights, 0.5);
    out.intervals(j, 0) = weighted_quantile(column, sample.weights, tail);
    out.intervals(j, 1) = weighted_quantile(column, sample.weights, 1.0 - tail);
  }
  return out;
}

}  // namespace abc
