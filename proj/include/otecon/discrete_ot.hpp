#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "otecon/measures.hpp"

namespace otecon {

/// Absolute tolerance used by the optimality certificate.
inline constexpr double kCertificateTolerance = 1e-9;

struct Edge {
  Eigen::Index row;
  Eigen::Index col;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct TransportPlan {
  MatrixXd mass;
  /// Spanning tree of the bipartite graph when produced by the solver; may
  /// be empty for user-supplied plans.
  std::vector<Edge> basis;
};

struct DualPotentials {
  VectorXd phi;
  VectorXd psi;
};

struct DiscreteOtSolution {
  TransportPlan plan;
  DualPotentials potentials;
  double value = 0.0;
  double dual_value = 0.0;
  std::size_t pivots = 0;
};

struct NetworkSimplexOptions {
  /// Pivot cap; 0 selects 50 * (M + N) * M * N + 1000.
  std::size_t max_iter = 0;
};

/// North-west corner initial plan. Advances exactly one index per step, so
/// the basis always has M + N - 1 edges. Throws InfeasibleError when the
/// total masses differ by more than kMassTolerance.
TransportPlan northwest_corner(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Network simplex started from the north-west corner plan. Entering edge is
/// the lexicographically smallest violated (i, j); leaving edge is the
/// smallest-mass decreasing edge of the cycle with lexicographic ties. This
/// is Bland's rule, so the method terminates on degenerate instances.
DiscreteOtSolution solve_discrete_ot(const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu,
                                     const CostMatrix& cost,
                                     NetworkSimplexOptions options = {});

/// True iff phi_i + psi_j <= C_ij everywhere and equality holds wherever
/// the plan has positive mass, both within kCertificateTolerance.
bool verify_optimality(const TransportPlan& plan, const DualPotentials& pot,
                       const CostMatrix& cost);

/// sigma[i] = j iff plan(i, j) > 0. Requires a square plan with exactly one
/// entry equal to 1/N (within kCertificateTolerance) per row and column.
std::vector<Eigen::Index> extract_assignment(const TransportPlan& plan);

}  // namespace otecon
