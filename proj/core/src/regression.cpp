#include "abc/parallel.hpp"
#include "abc/semiauto.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace abc {

Vector LearnedSummary::apply(const Dataset& data) const { return coefficients * features->apply(data); }

Vector LearnedSummary::predict(const Dataset& data) const { return intercepts + apply(data); }

Matrix LearnedSummary::standardize(const std::vector<Vector>& raw) const {
  const int q = static_cast<int>(feature_mean.size());
  Matrix x(static_cast<int>(raw.size()), q);
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (raw[j].size() != q) throw std::invalid_argument("LearnedSummary::standardize: feature length mismatch");
    x.row(static_cast<int>(j)) = ((raw[j] - feature_mean).cwiseQuotient(feature_scale)).transpose();
  }
  return x;
}

double LearnedSummary::mean_bic() const {
  if (bic.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(bic.begin(), bic.end(), 0.0) / static_cast<double>(bic.size());
}

LearnedSummary fit_summaries(const std::vector<Vector>& thetas, const std::vector<Vector>& features,
                             FeaturePtr feature_map) {
  const std::size_t m = thetas.size();
  if (m < 2) throw std::invalid_argument("fit_summaries: need at least two training pairs");
  if (features.size() != m) throw std::invalid_argument("fit_summaries: thetas and features differ in length");
  const int p = static_cast<int>(thetas.front().size());
  const int q = static_cast<int>(features.front().size());
  if (p == 0 || q == 0) throw std::invalid_argument("fit_summaries: empty parameter or feature vectors");

  LearnedSummary out;
  out.features = std::move(feature_map);
  out.training_size = m;
  const double md = static_cast<double>(m);

  out.feature_mean = Vector::Zero(q);
  for (const Vector& f : features) {
    if (f.size() != q || !f.allFinite()) throw std::invalid_argument("fit_summaries: features must be finite and equal length");
    out.feature_mean += f;
  }
  out.feature_mean /= md;
  out.feature_scale = Vector::Zero(q);
  for (const Vector& f : features) out.feature_scale += (f - out.feature_mean).cwiseAbs2();
  out.feature_scale = (out.feature_scale / md).cwiseSqrt();
  // A constant column stays constant (zero after centring); the ridge
  // fallback then gives it a zero coefficient.
  for (int j = 0; j < q; ++j)
    if (!(out.feature_scale[j] > 0.0)) out.feature_scale[j] = 1.0;

  const Matrix x = out.standardize(features);
  Matrix gram = x.transpose() * x;
  Eigen::LDLT<Matrix> ldlt(gram);
  // LDLT::rcond misses exact zero pivots, so the pivot ratio is checked.
  const Vector pivots = ldlt.vectorD();
  const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                        !(pivots.minCoeff() > 1e-12 * pivots.cwiseAbs().maxCoeff());
  if (singular) {
    const double trace = gram.trace();
    const double lambda = trace > 0.0 ? 1e-8 * trace / q : 1e-8;
    gram.diagonal().array() += lambda;
    ldlt.compute(gram);
    out.ridge = true;
  }

  Vector gram_inv_diag;
  const bool have_se = !out.ridge && m > static_cast<std::size_t>(q) + 1;
  if (have_se) gram_inv_diag = ldlt.solve(Matrix::Identity(q, q)).diagonal();

  out.coefficients = Matrix::Zero(p, q);
  out.coefficient_se = Matrix::Constant(p, q, std::numeric_limits<double>::quiet_NaN());
  out.intercepts = Vector::Zero(p);
  out.rss.assign(static_cast<std::size_t>(p), 0.0);
  out.bic.assign(static_cast<std::size_t>(p), 0.0);
  Vector y(static_cast<int>(m));
  for (int i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (thetas[j].size() != p) throw std::invalid_argument("fit_summaries: parameter vectors differ in length");
      y[static_cast<int>(j)] = thetas[j][i];
    }
    const double y_mean = y.mean();
    const Vector centred = y.array() - y_mean;
    Vector b = Vector::Zero(q);
    if (centred.squaredNorm() > 0.0) b = ldlt.solve(x.transpose() * centred);
    const Vector residual = centred - x * b;
    const double rss = residual.squaredNorm();
    out.rss[static_cast<std::size_t>(i)] = rss;
    out.bic[static_cast<std::size_t>(i)] =
        md * std::log(std::max(rss, std::numeric_limits<double>::min()) / md) + (q + 1) * std::log(md);
    const Vector raw = b.cwiseQuotient(out.feature_scale);
    out.coefficients.row(i) = raw.transpose();
    out.intercepts[i] = y_mean - raw.dot(out.feature_mean);
    if (have_se) {
      const double sigma2 = rss / (md - q - 1.0);
      out.coefficient_se.row(i) =
          ((sigma2 * gram_inv_diag.array()).sqrt() / out.feature_scale.array()).matrix().transpose();
    }
  }
  return out;
}

LearnedSummary fit_summaries(const TrainingSet& training, FeaturePtr feature_map, int threads) {
  if (!feature_map) throw std::invalid_argument("fit_summaries: no feature map");
  if (training.size() < 2) throw std::invalid_argument("fit_summaries: need at least two training pairs");
  std::vector<Vector> features(training.size());
  parallel_for(training.size(), resolve_threads(threads),
               [&](std::size_t j) { features[j] = feature_map->apply(training.data[j]); });
  return fit_summaries(training.thetas, features, std::move(feature_map));
}

FeatureSelection select_features(const TrainingSet& training, const std::vector<FeaturePtr>& candidates,
                                 int threads) {
  if (candidates.empty()) throw std::invalid_argument("select_features: no candidate feature maps");
  FeatureSelection out;
  for (const FeaturePtr& candidate : candidates) {
    out.fits.push_back(fit_summaries(training, candidate, threads));
    out.mean_bic.push_back(out.fits.back().mean_bic());
  }
  for (std::size_t i = 1; i < out.mean_bic.size(); ++i)
    if (out.mean_bic[i] < out.mean_bic[out.best]) out.best = i;
  return out;
}

}  // namespace abc
