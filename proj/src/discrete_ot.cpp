#include "otecon/discrete_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "otecon/errors.hpp"

namespace otecon {

namespace {

// Node ids: rows are 0..M-1, columns are M..M+N-1.
struct Tree {
  Eigen::Index rows;
  Eigen::Index cols;
  std::vector<std::vector<std::pair<Eigen::Index, std::size_t>>> adjacent;

  Tree(Eigen::Index m, Eigen::Index n, const std::vector<Edge>& basis)
      : rows(m), cols(n), adjacent(static_cast<std::size_t>(m + n)) {
    for (std::size_t e = 0; e < basis.size(); ++e) {
      const auto r = basis[e].row;
      const auto c = m + basis[e].col;
      adjacent[static_cast<std::size_t>(r)].emplace_back(c, e);
      adjacent[static_cast<std::size_t>(c)].emplace_back(r, e);
    }
  }

  // Breadth-first parents from `root`: (parent node, edge index).
  std::vector<std::pair<Eigen::Index, std::size_t>> parents(Eigen::Index root) const {
    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::pair<Eigen::Index, std::size_t>> parent(adjacent.size(), {-1, kNone});
    std::vector<bool> seen(adjacent.size(), false);
    std::queue<Eigen::Index> queue;
    queue.push(root);
    seen[static_cast<std::size_t>(root)] = true;
    while (!queue.empty()) {
      const auto node = queue.front();
      queue.pop();
      for (const auto& [next, e] : adjacent[static_cast<std::size_t>(node)]) {
        if (seen[static_cast<std::size_t>(next)]) continue;
        seen[static_cast<std::size_t>(next)] = true;
        parent[static_cast<std::size_t>(next)] = {node, e};
        queue.push(next);
      }
    }
    return parent;
  }
};

void check_balanced(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.size() == 0 || nu.size() == 0) throw DomainError("empty marginal");
  if (std::abs(mu.total_mass() - nu.total_mass()) > kMassTolerance) {
    throw InfeasibleError("marginals have different total mass");
  }
}

DualPotentials tree_potentials(const Tree& tree, const std::vector<Edge>& basis,
                               const CostMatrix& cost) {
  DualPotentials pot{VectorXd::Zero(tree.rows), VectorXd::Zero(tree.cols)};
  std::vector<bool> seen(tree.adjacent.size(), false);
  std::queue<Eigen::Index> queue;
  queue.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!queue.empty()) {
    const auto node = queue.front();
    queue.pop();
    for (const auto& [next, e] : tree.adjacent[static_cast<std::size_t>(node)]) {
      if (seen[static_cast<std::size_t>(next)]) continue;
      seen[static_cast<std::size_t>(next)] = true;
      ++visited;
      const double c = cost(basis[e].row, basis[e].col);
      if (next < tree.rows) {
        pot.phi[next] = c - pot.psi[basis[e].col];
      } else {
        pot.psi[next - tree.rows] = c - pot.phi[basis[e].row];
      }
      queue.push(next);
    }
  }
  if (visited != tree.adjacent.size()) {
    throw SolverStallError("basis is not a spanning tree");
  }
  return pot;
}

}  // namespace

TransportPlan northwest_corner(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  check_balanced(mu, nu);
  const auto m = static_cast<Eigen::Index>(mu.size());
  const auto n = static_cast<Eigen::Index>(nu.size());
  TransportPlan plan{MatrixXd::Zero(m, n), {}};
  plan.basis.reserve(static_cast<std::size_t>(m + n - 1));
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double row_cap = mu.weights()[0];
  double col_cap = nu.weights()[0];
  while (true) {
    const double w = std::max(0.0, std::min(row_cap, col_cap));
    plan.mass(i, j) = w;
    plan.basis.push_back({i, j});
    if (i == m - 1 && j == n - 1) break;
    // Ties advance the row unless it is the last one.
    const bool row_binding = row_cap <= col_cap;
    if ((row_binding && i < m - 1) || j == n - 1) {
      col_cap -= w;
      row_cap = mu.weights()[++i];
    } else {
      row_cap -= w;
      col_cap = nu.weights()[++j];
    }
  }
  return plan;
}

DiscreteOtSolution solve_discrete_ot(const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu,
                                     const CostMatrix& cost,
                                     NetworkSimplexOptions options) {
  check_balanced(mu, nu);
  const auto m = static_cast<Eigen::Index>(mu.size());
  const auto n = static_cast<Eigen::Index>(nu.size());
  if (cost.rows() != m || cost.cols() != n) {
    throw DomainError("cost matrix is " + std::to_string(cost.rows()) + "x" +
                      std::to_string(cost.cols()) + ", marginals are " +
                      std::to_string(m) + "x" + std::to_string(n));
  }
  const std::size_t max_iter =
      options.max_iter > 0
          ? options.max_iter
          : static_cast<std::size_t>(50 * (m + n) * m * n + 1000);
  const double violation_tol =
      1e-12 * std::max(1.0, cost.matrix().cwiseAbs().maxCoeff());

  DiscreteOtSolution sol;
  sol.plan = northwest_corner(mu, nu);
  auto& basis = sol.plan.basis;
  auto& mass = sol.plan.mass;

  std::vector<bool> in_basis(static_cast<std::size_t>(m * n), false);
  for (const auto& e : basis) in_basis[static_cast<std::size_t>(e.row * n + e.col)] = true;

  while (true) {
    const Tree tree(m, n, basis);
    sol.potentials = tree_potentials(tree, basis, cost);
    const auto& phi = sol.potentials.phi;
    const auto& psi = sol.potentials.psi;

    // Row-major scan gives the lexicographically smallest violated edge.
    Edge entering{-1, -1};
    for (Eigen::Index i = 0; i < m && entering.row < 0; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (in_basis[static_cast<std::size_t>(i * n + j)]) continue;
        if (phi[i] + psi[j] > cost(i, j) + violation_tol) {
          entering = {i, j};
          break;
        }
      }
    }
    if (entering.row < 0) break;
    if (sol.pivots >= max_iter) {
      throw SolverStallError("network simplex exceeded " +
                             std::to_string(max_iter) + " pivots");
    }
    ++sol.pivots;

    // Cycle = entering edge + tree path from its column back to its row.
    const auto parent = tree.parents(entering.row);
    std::vector<std::size_t> path;
    for (auto node = m + entering.col; node != entering.row;
         node = parent[static_cast<std::size_t>(node)].first) {
      path.push_back(parent[static_cast<std::size_t>(node)].second);
    }
    // Edges at even positions (starting next to the entering column) lose mass.
    std::size_t leaving = path[0];
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const auto& cand = basis[path[k]];
      const auto& best = basis[leaving];
      const double mc = mass(cand.row, cand.col);
      const double mb = mass(best.row, best.col);
      if (mc < mb || (mc == mb && cand < best)) leaving = path[k];
    }
    const double theta = mass(basis[leaving].row, basis[leaving].col);
    for (std::size_t k = 0; k < path.size(); ++k) {
      const auto& e = basis[path[k]];
      mass(e.row, e.col) += (k % 2 == 0) ? -theta : theta;
    }
    const Edge out = basis[leaving];
    mass(out.row, out.col) = 0.0;
    mass(entering.row, entering.col) = theta;
    in_basis[static_cast<std::size_t>(out.row * n + out.col)] = false;
    in_basis[static_cast<std::size_t>(entering.row * n + entering.col)] = true;
    basis[leaving] = entering;
  }

  sol.value = (mass.array() * cost.matrix().array()).sum();
  sol.dual_value = mu.weights().dot(sol.potentials.phi) + nu.weights().dot(sol.potentials.psi);
  return sol;
}

bool verify_optimality(const TransportPlan& plan, const DualPotentials& pot,
                       const CostMatrix& cost) {
  const auto& mass = plan.mass;
  if (mass.rows() != cost.rows() || mass.cols() != cost.cols() ||
      pot.phi.size() != cost.rows() || pot.psi.size() != cost.cols()) {
    throw DomainError("plan, potentials and cost shapes disagree");
  }
  for (Eigen::Index i = 0; i < mass.rows(); ++i) {
    for (Eigen::Index j = 0; j < mass.cols(); ++j) {
      const double slack = cost(i, j) - pot.phi[i] - pot.psi[j];
      if (slack < -kCertificateTolerance) return false;
      if (mass(i, j) > 0.0 && slack > kCertificateTolerance) return false;
    }
  }
  return true;
}

std::vector<Eigen::Index> extract_assignment(const TransportPlan& plan) {
  const auto& mass = plan.mass;
  const auto n = mass.rows();
  if (n == 0 || mass.cols() != n) {
    throw NonAssignmentError("assignment needs a nonempty square plan");
  }
  const double atom = 1.0 / static_cast<double>(n);
  std::vector<Eigen::Index> sigma(static_cast<std::size_t>(n), -1);
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = mass(i, j);
      if (std::abs(w) <= kCertificateTolerance) continue;
      if (std::abs(w - atom) > kCertificateTolerance || sigma[static_cast<std::size_t>(i)] >= 0 ||
          taken[static_cast<std::size_t>(j)]) {
        throw NonAssignmentError("plan row " + std::to_string(i) +
                                 " is not a single unit of mass");
      }
      sigma[static_cast<std::size_t>(i)] = j;
      taken[static_cast<std::size_t>(j)] = true;
    }
    if (sigma[static_cast<std::size_t>(i)] < 0) {
      throw NonAssignmentError("plan row " + std::to_string(i) + " carries no mass");
    }
  }
  return sigma;
}

}  // namespace otecon
