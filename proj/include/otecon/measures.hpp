#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

namespace otecon {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Absolute tolerance on total mass when a measure is flagged as a
/// probability measure.
inline constexpr double kMassTolerance = 1e-10;

/// Finitely supported nonnegative measure, optionally carrying one
/// d-dimensional point per atom (one row of `points` per weight).
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  /// Throws DomainError on negative or non-finite weights, on a point count
  /// that does not match the weight count, and (when `probability` is set)
  /// on total mass further than kMassTolerance from 1. Never renormalizes.
  explicit DiscreteMeasure(VectorXd weights, bool probability = true);
  DiscreteMeasure(VectorXd weights, MatrixXd points, bool probability = true);

  static DiscreteMeasure uniform(std::size_t n);

  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  const VectorXd& weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
  double total_mass() const { return weights_.sum(); }
  bool is_probability() const { return probability_; }

  bool has_points() const { return points_.has_value(); }
  /// Throws DomainError when the measure has no points.
  const MatrixXd& points() const;
  std::size_t dimension() const { return points_ ? static_cast<std::size_t>(points_->cols()) : 0; }

 private:
  VectorXd weights_;
  std::optional<MatrixXd> points_;
  bool probability_ = true;
};

/// Rows index origins, columns index destinations. Entries are finite.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(MatrixXd entries);

  static CostMatrix squared_euclidean(const MatrixXd& x, const MatrixXd& y);

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  const MatrixXd& matrix() const { return entries_; }

 private:
  MatrixXd entries_;
};

/// Scalar sample kept in nondecreasing order. The constructor sorts.
class Sample1D {
 public:
  explicit Sample1D(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  /// k-th order statistic, 0-based.
  double operator[](std::size_t k) const { return values_[k]; }
  double mean() const;

 private:
  std::vector<double> values_;
};

class GaussianMeasure {
 public:
  /// Throws DomainError when cov is not square/symmetric within 1e-12 or has
  /// an eigenvalue below -1e-12 times the largest one.
  GaussianMeasure(VectorXd mean, MatrixXd cov);

  Eigen::Index dimension() const { return mean_.size(); }
  const VectorXd& mean() const { return mean_; }
  const MatrixXd& cov() const { return cov_; }

 private:
  VectorXd mean_;
  MatrixXd cov_;
};

/// n points in the open unit cube, one per row.
struct HaltonSet {
  MatrixXd points;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dimension() const { return points.cols(); }
};

// Quantile convention: Q(t) = inf{y : F(y) >= t}, i.e. the ceil(t n)-th
// order statistic. Throws DomainError unless 0 < t <= 1.
double empirical_quantile(const Sample1D& s, double t);

/// Fraction of sample values <= y.
double empirical_cdf(const Sample1D& s, double y);

/// Exact integral of the empirical quantile function over [lo, hi] with
/// 0 <= lo <= hi <= 1.
double quantile_integral(const Sample1D& s, double lo, double hi);

inline constexpr int kMaxHaltonDimension = 20;

/// Point i (1-based) has coordinate k equal to the radical inverse of i in
/// the k-th prime base. Index 0 is skipped so every point is interior.
HaltonSet halton(std::size_t n, int d);

double radical_inverse(std::size_t index, unsigned base);

/// Symmetric PSD square root via the spectral decomposition. Eigenvalues in
/// [-1e-12 lambda_max, 0) are clamped to zero; anything lower throws
/// NotPsdError.
MatrixXd spd_sqrt(const MatrixXd& a);

}  // namespace otecon
