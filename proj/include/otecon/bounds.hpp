#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "otecon/measures.hpp"

namespace otecon {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// 0/1 matrix: gamma(i, j) = 1 marks the pair (x_i, y_j) as inside the set.
class BinaryRelation {
 public:
  explicit BinaryRelation(Eigen::MatrixXi gamma);

  Eigen::Index rows() const { return gamma_.rows(); }
  Eigen::Index cols() const { return gamma_.cols(); }
  bool operator()(Eigen::Index i, Eigen::Index j) const { return gamma_(i, j) != 0; }
  const Eigen::MatrixXi& matrix() const { return gamma_; }

 private:
  Eigen::MatrixXi gamma_;
};

enum class Modularity { submodular, supermodular };

/// Sharp bounds on E h(Y0, Y1) for equal-size samples: the comonotone and
/// antitone couplings, ordered according to `modularity`.
Interval rearrangement_bounds(const std::function<double(double, double)>& h,
                              const Sample1D& y0, const Sample1D& y1,
                              Modularity modularity);

/// Sharp bounds on E[Y1 - Y0 | a < U0 < b], U0 the rank in the Y0
/// distribution. Exact for empirical quantile functions.
Interval kaji_subgroup_bounds(double a, double b, const Sample1D& y0, const Sample1D& y1);

/// Lower bound on P(Y1 > Y0 | a < U0 < b):
/// max(0, sup over abar in [a, b] of abar - a - F1(Q0(abar))) / (b - a).
double winners_lower_bound(double a, double b, const Sample1D& y0, const Sample1D& y1);

/// Upper bound on P(Y1 > Y0 | a < U0 < b), computed as one minus the lower
/// bound on P(Y1 <= Y0 | a < U0 < b) from the binary-cost transport problem
/// on the rank discretization of Y0.
double winners_upper_bound(double a, double b, const Sample1D& y0, const Sample1D& y1);

enum class WitnessRequest {
  if_small,  ///< enumerate subsets when M <= 20, omit otherwise
  always,    ///< ResourceError when M > 20
  never,
};

struct BinaryOtResult {
  double value = 0.0;
  /// Maximizing set A for sup_A [mu(A) - nu(A^Gamma)], 0-based row indices.
  std::optional<std::vector<std::size_t>> witness;
  std::optional<double> dual_value;
};

inline constexpr std::size_t kMaxWitnessRows = 20;

/// min over couplings of pi(Gamma), with the dual witness found by subset
/// enumeration. A^Gamma = {y : exists x in A with (x, y) not in Gamma}.
BinaryOtResult binary_cost_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const BinaryRelation& rel,
                              WitnessRequest witness = WitnessRequest::if_small);

/// Dual value mu(A) - nu(A^Gamma) of a given row subset.
double binary_dual_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const BinaryRelation& rel, const std::vector<std::size_t>& subset);

struct DroBound {
  double value = 0.0;
  double lambda = 0.0;  ///< minimizing multiplier
};

/// sup of E_nu f over nu with W_delta(nu, mu) <= rho on a shared finite
/// support, via inf over lambda >= 0 of lambda rho + E_mu sup_y [f(y) - lambda delta(y, .)].
/// delta(y, ytilde) has rows indexed by y and columns by ytilde.
DroBound dro_expectation_bound(const VectorXd& f, const MatrixXd& delta,
                               const DiscreteMeasure& mu, double rho);

}  // namespace otecon
