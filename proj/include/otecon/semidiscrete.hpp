#pragma once

#include <cstddef>
#include <vector>

#include "otecon/measures.hpp"

namespace otecon {

/// Power diagram for the quadratic cost: site j owns the points where
/// |x - y_j|^2 - psi_j is smallest (lowest index on ties).
struct LaguerreDiagram {
  MatrixXd sites;          ///< K x d, one site per row
  VectorXd weights;        ///< psi, normalized so the last entry is 0
  VectorXd target_masses;  ///< q, nonnegative and summing to 1
};

struct SemiDiscreteOptions {
  /// Midpoint grid resolution per axis; 0 picks 512 / 256 / 64 for d = 1 / 2 / 3.
  std::size_t grid_res = 0;
  double tol = 1e-3;
  std::size_t max_iter = 10000;
};

struct SemiDiscreteResult {
  LaguerreDiagram diagram;
  VectorXd cell_masses;  ///< grid estimate of the uniform mass of each cell
  double max_mass_error = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Semi-dual objective after each accepted step (first entry at psi = 0).
  std::vector<double> objective_history;
};

std::size_t laguerre_assign(const VectorXd& x, const LaguerreDiagram& diagram);

/// Weights psi that split the uniform measure on [0,1]^d into cells of mass
/// q_j, by gradient ascent on the semi-dual with backtracking from step 1.
/// Throws ResourceError when grid_res^d exceeds 1e7 and UnsupportedError for
/// d outside 1..3.
SemiDiscreteResult semidiscrete_solve(const DiscreteMeasure& nu,
                                      SemiDiscreteOptions options = {});

/// Grid estimate of the cell masses and the semi-dual objective for given
/// weights psi.
struct CellMasses {
  VectorXd masses;
  double objective = 0.0;
};
CellMasses grid_cell_masses(const MatrixXd& sites, const VectorXd& psi,
                            const VectorXd& target_masses, std::size_t grid_res);

/// Site of the cell containing u. Throws DomainError when u is outside
/// [0,1]^d.
VectorXd vector_quantile(const LaguerreDiagram& diagram, const VectorXd& u);

struct RankAssignment {
  /// sigma[i] is the Halton index assigned to observation i (0-based).
  std::vector<Eigen::Index> sigma;
  HaltonSet halton;
  bool perturbed = false;

  /// Rank vector of observation i.
  VectorXd rank(std::size_t i) const {
    return halton.points.row(sigma[i]).transpose();
  }
};

/// Empirical vector ranks: the quadratic-cost optimal assignment of the
/// sample (one observation per row) onto halton(n, d).
RankAssignment vector_rank(const MatrixXd& sample);

}  // namespace otecon
