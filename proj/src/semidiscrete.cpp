#include "otecon/semidiscrete.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "otecon/discrete_ot.hpp"
#include "otecon/errors.hpp"

namespace otecon {

namespace {

constexpr double kMaxGridPoints = 1e7;

std::size_t default_grid_res(Eigen::Index d) {
  switch (d) {
    case 1: return 512;
    case 2: return 256;
    default: return 64;
  }
}

// Index of argmin_j |x - y_j|^2 - psi_j and the minimum itself.
std::pair<std::size_t, double> best_site(const double* x, const MatrixXd& sites,
                                         const VectorXd& psi) {
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < sites.rows(); ++j) {
    double dist = 0.0;
    for (Eigen::Index k = 0; k < sites.cols(); ++k) {
      const double diff = x[k] - sites(j, k);
      dist += diff * diff;
    }
    const double val = dist - psi[j];
    if (val < best_val) {
      best_val = val;
      best = static_cast<std::size_t>(j);
    }
  }
  return {best, best_val};
}

}  // namespace

std::size_t laguerre_assign(const VectorXd& x, const LaguerreDiagram& diagram) {
  if (x.size() != diagram.sites.cols()) throw DomainError("point dimension mismatch");
  if (diagram.sites.rows() == 0) throw DomainError("diagram has no sites");
  return best_site(x.data(), diagram.sites, diagram.weights).first;
}

CellMasses grid_cell_masses(const MatrixXd& sites, const VectorXd& psi,
                            const VectorXd& target_masses, std::size_t grid_res) {
  const auto d = sites.cols();
  const double total_points = std::pow(static_cast<double>(grid_res), static_cast<double>(d));
  if (total_points > kMaxGridPoints) {
    throw ResourceError("grid of " + std::to_string(grid_res) + "^" + std::to_string(d) +
                        " points exceeds 1e7");
  }
  const auto count = static_cast<std::size_t>(total_points);
  const double cell = 1.0 / static_cast<double>(count);
  CellMasses out{VectorXd::Zero(sites.rows()), 0.0};
  std::vector<std::size_t> digit(static_cast<std::size_t>(d), 0);
  std::vector<double> x(static_cast<std::size_t>(d));
  double integral = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    for (Eigen::Index k = 0; k < d; ++k) {
      x[static_cast<std::size_t>(k)] =
          (static_cast<double>(digit[static_cast<std::size_t>(k)]) + 0.5) / static_cast<double>(grid_res);
    }
    const auto [j, val] = best_site(x.data(), sites, psi);
    out.masses[static_cast<Eigen::Index>(j)] += cell;
    integral += val;
    for (std::size_t k = 0; k < digit.size(); ++k) {
      if (++digit[k] < grid_res) break;
      digit[k] = 0;
    }
  }
  out.objective = integral * cell + psi.dot(target_masses);
  return out;
}

SemiDiscreteResult semidiscrete_solve(const DiscreteMeasure& nu, SemiDiscreteOptions options) {
  const MatrixXd& sites = nu.points();
  const auto d = sites.cols();
  const auto k = sites.rows();
  if (d < 1 || d > 3) throw UnsupportedError("semi-discrete solve supports d = 1, 2, 3");
  if (nu.weights().minCoeff() <= 0.0) throw DomainError("site masses must be positive");
  if (!nu.is_probability()) throw DomainError("site masses must sum to 1");
  if (!(options.tol > 0.0)) throw DomainError("tol must be positive");
  const std::size_t grid_res = options.grid_res > 0 ? options.grid_res : default_grid_res(d);

  SemiDiscreteResult res;
  res.diagram = {sites, VectorXd::Zero(k), nu.weights()};
  const VectorXd& q = nu.weights();
  VectorXd& psi = res.diagram.weights;
  CellMasses current = grid_cell_masses(sites, psi, q, grid_res);
  res.objective_history.push_back(current.objective);

  while (true) {
    const VectorXd grad = q - current.masses;
    res.max_mass_error = grad.cwiseAbs().maxCoeff();
    if (res.max_mass_error <= options.tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= options.max_iter) break;
    ++res.iterations;
    bool accepted = false;
    for (double step = 1.0; step > 1e-18; step *= 0.5) {
      VectorXd trial = psi + step * grad;
      trial.array() -= trial[k - 1];
      CellMasses next = grid_cell_masses(sites, trial, q, grid_res);
      if (next.objective >= current.objective) {
        psi = trial;
        current = std::move(next);
        res.objective_history.push_back(current.objective);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  res.cell_masses = current.masses;
  return res;
}

VectorXd vector_quantile(const LaguerreDiagram& diagram, const VectorXd& u) {
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    if (!(u[k] >= 0.0 && u[k] <= 1.0)) throw DomainError("u must lie in [0,1]^d");
  }
  return diagram.sites.row(static_cast<Eigen::Index>(laguerre_assign(u, diagram))).transpose();
}

RankAssignment vector_rank(const MatrixXd& sample) {
  const auto n = sample.rows();
  if (n < 1) throw DomainError("vector_rank needs at least one observation");
  if (sample.cols() < 1) throw DomainError("vector_rank needs d >= 1");
  RankAssignment out;
  out.halton = halton(static_cast<std::size_t>(n), static_cast<int>(sample.cols()));
  // Unit masses keep every pivot in exact integer arithmetic.
  const DiscreteMeasure units(VectorXd::Ones(n), false);
  MatrixXd cost = CostMatrix::squared_euclidean(sample, out.halton.points).matrix();
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto sol = solve_discrete_ot(units, units, CostMatrix(cost));
    sol.plan.mass /= static_cast<double>(n);
    try {
      out.sigma = extract_assignment(sol.plan);
      return out;
    } catch (const NonAssignmentError&) {
      if (attempt == 1) throw;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        cost(i, j) += 1e-12 * static_cast<double>(i * n + j);
      }
    }
    out.perturbed = true;
  }
  return out;
}

}  // namespace otecon
