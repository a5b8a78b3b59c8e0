#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "otecon/measures.hpp"

namespace otecon {

/// Observed matching flows in a market with unmatched agents. All entries
/// are strictly positive.
class MatchingTable {
 public:
  MatchingTable(MatrixXd flows, VectorXd singles_x, VectorXd singles_y);

  const MatrixXd& flows() const { return flows_; }
  const VectorXd& singles_x() const { return singles_x_; }
  const VectorXd& singles_y() const { return singles_y_; }

  /// Type masses implied by the table: singles plus matched.
  VectorXd mass_x() const { return singles_x_ + flows_.rowwise().sum(); }
  VectorXd mass_y() const { return singles_y_ + flows_.colwise().sum().transpose(); }

 private:
  MatrixXd flows_;
  VectorXd singles_x_;
  VectorXd singles_y_;
};

/// Linear surplus specification Phi(lambda) = sum_k lambda_k basis[k].
class SurplusBasis {
 public:
  explicit SurplusBasis(std::vector<MatrixXd> basis);

  std::size_t size() const { return basis_.size(); }
  Eigen::Index rows() const { return basis_.front().rows(); }
  Eigen::Index cols() const { return basis_.front().cols(); }
  const MatrixXd& operator[](std::size_t k) const { return basis_[k]; }

  MatrixXd surplus(const VectorXd& params) const;
  /// (sum_xy w_xy basis_xyk)_k.
  VectorXd moments(const MatrixXd& w) const;

 private:
  std::vector<MatrixXd> basis_;
};

/// Exponents above this throw OverflowError instead of producing inf.
inline constexpr double kExponentCap = 700.0;

struct EquilibriumOptions {
  double tol = 1e-12;
  std::size_t max_iter = 100000;
};

struct EquilibriumResult {
  MatchingTable table;
  VectorXd a;  ///< singles_x = exp(-2 a)
  VectorXd b;  ///< singles_y = exp(-2 b)
  std::size_t iterations = 0;
  double residual = 0.0;  ///< max margin violation
  bool converged = false;
};

/// Logit matching equilibrium with flows exp(Phi - a - b), singles
/// exp(-2a) and exp(-2b), found by alternating the closed-form positive
/// roots of the per-type margin equations.
EquilibriumResult cs_equilibrium(const MatrixXd& surplus, const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu, EquilibriumOptions options = {});

/// Phi_xy = log flow_xy - (log single_x + log single_y) / 2.
MatrixXd cs_identify(const MatchingTable& table);

struct PoissonParams {
  VectorXd lambda;
  VectorXd a;
  VectorXd b;
};

/// Weighted Poisson log likelihood (weight 1 on pairs, 1/2 on singles) of
/// the table under intensities exp(Phi(lambda) - a - b), exp(-2a), exp(-2b).
double poisson_loglik(const PoissonParams& theta, const MatchingTable& table,
                      const SurplusBasis& basis);

PoissonParams poisson_loglik_gradient(const PoissonParams& theta, const MatchingTable& table,
                                      const SurplusBasis& basis);

struct MomentMatchingResult {
  VectorXd lambda;
  VectorXd a;
  VectorXd b;
  VectorXd moment_residual;  ///< predicted minus observed moments
  std::size_t iterations = 0;
  /// Convex objective (negative log likelihood profiled over a, b) per
  /// accepted outer step.
  std::vector<double> objective_history;
};

/// Moment-matching estimator: outer gradient descent on lambda with inner
/// equilibrium solves. Throws NonIdentificationError for a rank-deficient
/// basis or when the descent stalls with a nonzero residual.
MomentMatchingResult moment_matching(const MatchingTable& table, const SurplusBasis& basis,
                                     double tol = 1e-10, std::size_t max_iter = 10000);

struct SistaOptions {
  double eps = 1.0;
  double l1 = 0.0;
  /// Proximal step; defaults to eps / max_k sum_xy basis_xyk^2.
  std::optional<double> step;
  double tol = 1e-10;
  std::size_t max_iter = 200000;
  std::optional<VectorXd> beta0;
};

struct SistaResult {
  VectorXd beta;
  VectorXd phi;
  VectorXd psi;
  double step = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double marginal_error = 0.0;
  /// Composite objective -F + l1 |beta|_1 after each iteration.
  std::vector<double> objective_history;
};

/// Sinkhorn iterations on (phi, psi) alternated with soft-thresholded
/// gradient steps on beta, recovering a cost c = -Phi(beta) such that
/// exp((phi + psi + Phi(beta)) / eps) reproduces pi_hat's margins and
/// basis moments.
SistaResult sista(const MatrixXd& pi_hat, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                  const SurplusBasis& basis, SistaOptions options = {});

/// The smooth part -F(phi, psi, beta) minimized by sista.
double sista_smooth_objective(const MatrixXd& pi_hat, const SurplusBasis& basis,
                              const VectorXd& phi, const VectorXd& psi,
                              const VectorXd& beta, double eps);

double soft_threshold(double x, double threshold);

}  // namespace otecon
