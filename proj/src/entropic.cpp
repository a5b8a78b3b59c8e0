#include "otecon/entropic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "otecon/errors.hpp"

namespace otecon {

namespace {

void check_inputs(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                  const CostMatrix& cost, double eps, const EntropicOptions& opt) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("eps must be positive");
  if (!(opt.tol > 0.0)) throw DomainError("tol must be positive");
  if (mu.size() == 0 || nu.size() == 0) throw DomainError("empty marginal");
  if (mu.weights().minCoeff() <= 0.0 || nu.weights().minCoeff() <= 0.0) {
    throw DomainError("entropic solvers need strictly positive marginals");
  }
  if (cost.rows() != static_cast<Eigen::Index>(mu.size()) ||
      cost.cols() != static_cast<Eigen::Index>(nu.size())) {
    throw DomainError("cost matrix shape does not match marginals");
  }
}

// -eps * log sum_j nu_j exp((psi_j - C_ij) / eps) for every row i.
VectorXd row_softmin(const MatrixXd& c, const VectorXd& log_nu, const VectorXd& psi,
                     double eps) {
  VectorXd out(c.rows());
  VectorXd buf(c.cols());
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    buf = log_nu + (psi - c.row(i).transpose()) / eps;
    out[i] = -eps * log_sum_exp(buf);
  }
  return out;
}

VectorXd col_softmin(const MatrixXd& c, const VectorXd& log_mu, const VectorXd& phi,
                     double eps) {
  VectorXd out(c.cols());
  VectorXd buf(c.rows());
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    buf = log_mu + (phi - c.col(j)) / eps;
    out[j] = -eps * log_sum_exp(buf);
  }
  return out;
}

MatrixXd assemble_plan(const MatrixXd& c, const VectorXd& log_mu, const VectorXd& log_nu,
                       const VectorXd& phi, const VectorXd& psi, double eps) {
  MatrixXd plan(c.rows(), c.cols());
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      plan(i, j) = std::exp(log_mu[i] + log_nu[j] + (phi[i] + psi[j] - c(i, j)) / eps);
    }
  }
  return plan;
}

double marginal_violation(const MatrixXd& plan, const DiscreteMeasure& mu,
                          const DiscreteMeasure& nu) {
  const double rows = (plan.rowwise().sum() - mu.weights()).cwiseAbs().maxCoeff();
  const double cols = (plan.colwise().sum().transpose() - nu.weights()).cwiseAbs().maxCoeff();
  return std::max(rows, cols);
}

double generalized_kl(const VectorXd& a, const VectorXd& b) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a[k] > 0.0) total += a[k] * std::log(a[k] / b[k]);
    total += b[k] - a[k];
  }
  return total;
}

}  // namespace

double log_sum_exp(const VectorXd& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

EntropicSolution sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                          const CostMatrix& cost, double eps, EntropicOptions options) {
  check_inputs(mu, nu, cost, eps, options);
  const MatrixXd& c = cost.matrix();
  const VectorXd log_mu = mu.weights().array().log();
  const VectorXd log_nu = nu.weights().array().log();

  EntropicSolution sol;
  sol.eps = eps;
  sol.phi = VectorXd::Zero(c.rows());
  sol.psi = VectorXd::Zero(c.cols());
  while (sol.iterations < options.max_iter) {
    sol.phi = row_softmin(c, log_nu, sol.psi, eps);
    sol.psi = col_softmin(c, log_mu, sol.phi, eps);
    ++sol.iterations;
    sol.plan = assemble_plan(c, log_mu, log_nu, sol.phi, sol.psi, eps);
    if (sol.error_history.size() < kHistoryCap) {
      sol.error_history.push_back((sol.plan.rowwise().sum() - mu.weights()).lpNorm<1>());
    }
    sol.marginal_error = marginal_violation(sol.plan, mu, nu);
    if (sol.marginal_error < options.tol) {
      sol.converged = true;
      break;
    }
  }
  if (sol.iterations == 0) sol.plan = assemble_plan(c, log_mu, log_nu, sol.phi, sol.psi, eps);
  sol.residual = sol.marginal_error;

  const double shift = sol.phi[0];
  sol.phi.array() -= shift;
  sol.psi.array() += shift;
  return sol;
}

EntropicValue eot_value(const EntropicSolution& sol, const DiscreteMeasure& mu,
                        const DiscreteMeasure& nu, const CostMatrix& cost) {
  const MatrixXd& plan = sol.plan;
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols()) {
    throw DomainError("plan and cost shapes disagree");
  }
  EntropicValue v;
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      const double p = plan(i, j);
      v.transport_cost += p * cost(i, j);
      if (p > 0.0) {
        entropy += p * (std::log(p) - std::log(mu.weights()[i]) - std::log(nu.weights()[j]));
      }
    }
  }
  v.primal_objective = v.transport_cost + sol.eps * entropy;
  return v;
}

EntropicSolution unbalanced_sinkhorn(const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu,
                                     const CostMatrix& cost, double eps,
                                     double lam_mu, double lam_nu,
                                     EntropicOptions options) {
  check_inputs(mu, nu, cost, eps, options);
  if (!(lam_mu > 0.0) || !(lam_nu > 0.0)) {
    throw DomainError("marginal penalties must be positive");
  }
  const MatrixXd& c = cost.matrix();
  const VectorXd log_mu = mu.weights().array().log();
  const VectorXd log_nu = nu.weights().array().log();
  const double damp_mu = lam_mu / (lam_mu + eps);
  const double damp_nu = lam_nu / (lam_nu + eps);

  EntropicSolution sol;
  sol.eps = eps;
  sol.phi = VectorXd::Zero(c.rows());
  sol.psi = VectorXd::Zero(c.cols());
  while (sol.iterations < options.max_iter) {
    // Exact dual ascent along (phi + t, psi - t). The damped updates alone
    // move this direction by a factor eps / lam per sweep.
    const double log_a = log_sum_exp(log_mu - sol.phi / lam_mu);
    const double log_b = log_sum_exp(log_nu - sol.psi / lam_nu);
    const double t = (log_a - log_b) / (1.0 / lam_mu + 1.0 / lam_nu);
    sol.phi.array() += t;
    sol.psi.array() -= t;
    sol.phi = damp_mu * row_softmin(c, log_nu, sol.psi, eps);
    sol.psi = damp_nu * col_softmin(c, log_mu, sol.phi, eps);
    ++sol.iterations;
    sol.plan = assemble_plan(c, log_mu, log_nu, sol.phi, sol.psi, eps);
    // The column condition holds exactly after the psi update; measure the
    // row condition plan 1 = mu exp(-phi / lam_mu) in mass units.
    const VectorXd target =
        (mu.weights().array() * (-sol.phi.array() / lam_mu).exp()).matrix();
    const VectorXd row_gap = sol.plan.rowwise().sum() - target;
    if (sol.error_history.size() < kHistoryCap) sol.error_history.push_back(row_gap.lpNorm<1>());
    sol.residual = row_gap.cwiseAbs().maxCoeff();
    if (sol.residual < options.tol) {
      sol.converged = true;
      break;
    }
  }
  if (sol.iterations == 0) sol.plan = assemble_plan(c, log_mu, log_nu, sol.phi, sol.psi, eps);
  sol.marginal_error = marginal_violation(sol.plan, mu, nu);
  return sol;
}

double uot_objective(const MatrixXd& plan, const DiscreteMeasure& mu,
                     const DiscreteMeasure& nu, const CostMatrix& cost, double eps,
                     double lam_mu, double lam_nu) {
  const VectorXd flat = Eigen::Map<const VectorXd>(plan.data(), plan.size());
  const MatrixXd product = mu.weights() * nu.weights().transpose();
  const VectorXd ref = Eigen::Map<const VectorXd>(product.data(), product.size());
  return (plan.array() * cost.matrix().array()).sum() + eps * generalized_kl(flat, ref) +
         lam_mu * generalized_kl(plan.rowwise().sum(), mu.weights()) +
         lam_nu * generalized_kl(plan.colwise().sum().transpose(), nu.weights());
}

}  // namespace otecon
