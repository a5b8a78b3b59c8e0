#pragma once

#include <cstddef>
#include <vector>

#include "otecon/measures.hpp"

namespace otecon {

struct EntropicOptions {
  double tol = 1e-9;
  std::size_t max_iter = 10000;
};

/// Entropic plan in the form plan_ij = mu_i nu_j exp((phi_i + psi_j - C_ij) / eps).
inline constexpr std::size_t kHistoryCap = 100000;

struct EntropicSolution {
  MatrixXd plan;
  VectorXd phi;
  VectorXd psi;
  double eps = 0.0;
  std::size_t iterations = 0;
  /// Max-norm violation of the marginal constraints at termination.
  double marginal_error = 0.0;
  /// Quantity compared against tol: the marginal error for the balanced
  /// solver, the first-order-condition residual for the unbalanced one.
  double residual = 0.0;
  bool converged = false;
  /// L1 row-marginal violation after each of the first kHistoryCap sweeps
  /// (columns are exact after each sweep). Nonincreasing for balanced Sinkhorn.
  std::vector<double> error_history;
};

/// Log-domain Sinkhorn. Marginals must be strictly positive probability
/// vectors. Potentials are normalized so that phi_0 = 0. Hitting max_iter
/// returns with converged = false.
EntropicSolution sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          const CostMatrix& cost, double eps,
                          EntropicOptions options = {});

struct EntropicValue {
  double transport_cost = 0.0;
  /// transport_cost + eps * KL(plan | mu x nu).
  double primal_objective = 0.0;
};

EntropicValue eot_value(const EntropicSolution& sol, const DiscreteMeasure& mu,
                        const DiscreteMeasure& nu, const CostMatrix& cost);

/// Entropic transport with relative-entropy marginal penalties
///   <plan, C> + eps KL(plan | mu x nu) + lam_mu KL(plan 1 | mu) + lam_nu KL(plan' 1 | nu)
/// with KL the generalized divergence for unnormalized measures. The
/// potential updates are the Sinkhorn ones damped by lam / (lam + eps).
EntropicSolution unbalanced_sinkhorn(const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu,
                                     const CostMatrix& cost, double eps,
                                     double lam_mu, double lam_nu,
                                     EntropicOptions options = {});

/// Objective minimized by unbalanced_sinkhorn, evaluated at an arbitrary
/// positive plan.
double uot_objective(const MatrixXd& plan, const DiscreteMeasure& mu,
                     const DiscreteMeasure& nu, const CostMatrix& cost,
                     double eps, double lam_mu, double lam_nu);

/// Stabilized log(sum_k exp(v_k)).
double log_sum_exp(const VectorXd& v);

}  // namespace otecon
