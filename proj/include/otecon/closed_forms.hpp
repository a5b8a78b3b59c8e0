#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "otecon/measures.hpp"

namespace otecon {

using ScalarCost = std::function<double(double, double)>;

/// x -> shift + linear * x, with `linear` symmetric PSD.
struct AffineMap {
  VectorXd shift;
  MatrixXd linear;

  VectorXd operator()(const VectorXd& x) const { return shift + linear * x; }
};

/// Integral over t in (0, 1] of cost(Qx(t), Qy(t)), computed exactly on the
/// merged breakpoint grid {k/m} u {k/n}. Valid as an optimal transport value
/// only for submodular costs; passing submodular = false throws
/// UnsupportedError.
double ot_value_1d(const Sample1D& x, const Sample1D& y, const ScalarCost& cost,
                   bool submodular = true);

/// Throws DomainError for p < 1.
double wasserstein_1d(const Sample1D& x, const Sample1D& y, double p);

/// Monge map between Gaussians. Throws NotInvertibleError when cov1 is
/// singular.
AffineMap gaussian_ot_map(const GaussianMeasure& g1, const GaussianMeasure& g2);

/// Closed-form W2 (cost |x - y|^2, unhalved).
double gaussian_w2(const GaussianMeasure& g1, const GaussianMeasure& g2);

/// Directions uniform on the unit sphere, generated from a counter-based
/// stream keyed on `seed`; one direction per row.
MatrixXd sphere_directions(std::size_t count, Eigen::Index dim, std::uint64_t seed);

/// Monte Carlo sliced Wasserstein distance between point clouds (one point
/// per row). Rows of x and y may differ in number, not in dimension.
double sliced_wasserstein(const MatrixXd& x, const MatrixXd& y, double p,
                          std::size_t n_dir, std::uint64_t seed);

/// W2 barycenter of equal-size uniform samples: order statistics averaged
/// with the given weights. Throws UnsupportedError on unequal sizes.
Sample1D barycenter_1d(const std::vector<Sample1D>& samples,
                       const std::vector<double>& weights);

}  // namespace otecon
