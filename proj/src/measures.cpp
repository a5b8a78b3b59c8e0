#include "otecon/measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "otecon/errors.hpp"

namespace otecon {

namespace {

void check_weights(const VectorXd& w, bool probability) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw DomainError("measure weight " + std::to_string(i) +
                        " is negative or not finite");
    }
  }
  if (probability && std::abs(w.sum() - 1.0) > kMassTolerance) {
    throw DomainError("probability weights sum to " +
                      std::to_string(w.sum()) + ", expected 1");
  }
}

double symmetry_scale(const MatrixXd& a) {
  return std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(VectorXd weights, bool probability)
    : weights_(std::move(weights)), probability_(probability) {
  check_weights(weights_, probability_);
}

DiscreteMeasure::DiscreteMeasure(VectorXd weights, MatrixXd points,
                                 bool probability)
    : weights_(std::move(weights)),
      points_(std::move(points)),
      probability_(probability) {
  check_weights(weights_, probability_);
  if (points_->rows() != weights_.size()) {
    throw DomainError("measure has " + std::to_string(weights_.size()) +
                      " weights but " + std::to_string(points_->rows()) +
                      " points");
  }
  if (!points_->allFinite()) throw DomainError("measure points not finite");
}

DiscreteMeasure DiscreteMeasure::uniform(std::size_t n) {
  if (n == 0) throw DomainError("uniform measure needs at least one atom");
  return DiscreteMeasure(
      VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

const MatrixXd& DiscreteMeasure::points() const {
  if (!points_) throw DomainError("measure carries no points");
  return *points_;
}

CostMatrix::CostMatrix(MatrixXd entries) : entries_(std::move(entries)) {
  if (!entries_.allFinite()) throw DomainError("cost matrix has non-finite entries");
}

CostMatrix CostMatrix::squared_euclidean(const MatrixXd& x, const MatrixXd& y) {
  if (x.cols() != y.cols()) throw DomainError("point dimensions differ");
  MatrixXd c(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      c(i, j) = (x.row(i) - y.row(j)).squaredNorm();
    }
  }
  return CostMatrix(std::move(c));
}

Sample1D::Sample1D(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("empty sample");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("sample value not finite");
  }
  std::sort(values_.begin(), values_.end());
}

double Sample1D::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) /
         static_cast<double>(values_.size());
}

GaussianMeasure::GaussianMeasure(VectorXd mean, MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size()) {
    throw DomainError("covariance shape does not match mean");
  }
  if (mean_.size() == 0) throw DomainError("zero-dimensional Gaussian");
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw DomainError("Gaussian parameters not finite");
  }
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * symmetry_scale(cov_)) {
    throw DomainError("covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov_, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(top, 0.0)) {
    throw DomainError("covariance not positive semidefinite");
  }
}

double empirical_quantile(const Sample1D& s, double t) {
  if (!(t > 0.0) || t > 1.0) {
    throw DomainError("quantile level must lie in (0, 1]");
  }
  const auto n = static_cast<double>(s.size());
  // A few ulps of slack so that t = k/n computed in floating point still
  // selects the k-th order statistic.
  double k = std::ceil(t * n * (1.0 - 4.0 * std::numeric_limits<double>::epsilon()));
  k = std::clamp(k, 1.0, n);
  return s[static_cast<std::size_t>(k) - 1];
}

double empirical_cdf(const Sample1D& s, double y) {
  const auto& v = s.values();
  const auto count = std::upper_bound(v.begin(), v.end(), y) - v.begin();
  return static_cast<double>(count) / static_cast<double>(v.size());
}

double quantile_integral(const Sample1D& s, double lo, double hi) {
  if (lo < 0.0 || hi > 1.0 || lo > hi) {
    throw DomainError("quantile integral bounds must satisfy 0 <= lo <= hi <= 1");
  }
  const std::size_t n = s.size();
  const auto nd = static_cast<double>(n);
  // Q equals the k-th order statistic on ((k-1)/n, k/n].
  auto first = static_cast<std::size_t>(std::floor(lo * nd));
  auto last = std::min(n, static_cast<std::size_t>(std::ceil(hi * nd)));
  double total = 0.0;
  for (std::size_t k = first; k < last; ++k) {
    const double left = std::max(lo, static_cast<double>(k) / nd);
    const double right = std::min(hi, static_cast<double>(k + 1) / nd);
    if (right > left) total += (right - left) * s[k];
  }
  return total;
}

double radical_inverse(std::size_t index, unsigned base) {
  double result = 0.0;
  double scale = 1.0 / base;
  while (index > 0) {
    result += static_cast<double>(index % base) * scale;
    index /= base;
    scale /= base;
  }
  return result;
}

HaltonSet halton(std::size_t n, int d) {
  static constexpr std::array<unsigned, kMaxHaltonDimension> kPrimes = {
      2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  if (n == 0) throw DomainError("halton needs n >= 1");
  if (d < 1) throw DomainError("halton needs d >= 1");
  if (d > kMaxHaltonDimension) {
    throw UnsupportedError("halton supports at most 20 dimensions");
  }
  HaltonSet set{MatrixXd(static_cast<Eigen::Index>(n), d)};
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      set.points(static_cast<Eigen::Index>(i), k) = radical_inverse(i + 1, kPrimes[k]);
    }
  }
  return set;
}

MatrixXd spd_sqrt(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw DomainError("spd_sqrt needs a square matrix");
  if (a.size() == 0) return a;
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * symmetry_scale(a)) {
    throw DomainError("spd_sqrt needs a symmetric matrix");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  VectorXd lambda = es.eigenvalues();
  const double top = lambda.maxCoeff();
  const double floor = -1e-12 * std::max(top, 0.0);
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < floor) throw NotPsdError("matrix has a negative eigenvalue");
    lambda[i] = std::sqrt(std::max(lambda[i], 0.0));
  }
  const MatrixXd& v = es.eigenvectors();
  MatrixXd root = v * lambda.asDiagonal() * v.transpose();
  return 0.5 * (root + root.transpose());
}

}  // namespace otecon
