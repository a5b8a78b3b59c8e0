#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "otecon/discrete_ot.hpp"
#include "otecon/entropic.hpp"
#include "otecon/errors.hpp"

using namespace otecon;

namespace {

MatrixXd mat2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t n) {
  return DiscreteMeasure(oracle::normalized(oracle::random_integers(rng, n, 1, 9)));
}

}  // namespace

TEST_SUITE("entropic") {

TEST_CASE("zero cost gives the product coupling") {
  std::mt19937_64 rng(1);
  const DiscreteMeasure mu = random_measure(rng, 3);
  const DiscreteMeasure nu = random_measure(rng, 4);
  for (double eps : {0.01, 1.0, 50.0}) {
    const EntropicSolution sol = sinkhorn(mu, nu, CostMatrix(MatrixXd::Zero(3, 4)), eps);
    CHECK(sol.converged);
    CHECK((sol.plan - mu.weights() * nu.weights().transpose()).cwiseAbs().maxCoeff() <= 1e-15);
    const EntropicValue v = eot_value(sol, mu, nu, CostMatrix(MatrixXd::Zero(3, 4)));
    CHECK(v.transport_cost == 0.0);
    CHECK(std::abs(v.primal_objective) <= 1e-15);
  }
}

TEST_CASE("large eps approaches independence") {
  const DiscreteMeasure half(VectorXd::Constant(2, 0.5));
  const CostMatrix cost(mat2(0, 1, 1, 0));
  const EntropicSolution sol = sinkhorn(half, half, cost, 1e6);
  CHECK((sol.plan.array() - 0.25).abs().maxCoeff() <= 1e-6);
  CHECK(std::abs(eot_value(sol, half, half, cost).transport_cost - 0.5) <= 1e-6);
}

TEST_CASE("small eps approaches the linear program") {
  const DiscreteMeasure half(VectorXd::Constant(2, 0.5));
  const CostMatrix cost(mat2(0, 1, 1, 0));
  const EntropicSolution sol = sinkhorn(half, half, cost, 0.01);
  CHECK(sol.converged);
  CHECK((sol.plan - mat2(0.5, 0, 0, 0.5)).cwiseAbs().maxCoeff() <= 1e-4);
  const EntropicValue v = eot_value(sol, half, half, cost);
  CHECK(v.transport_cost >= 0.0);
  CHECK(v.transport_cost <= 0.01 * std::log(4.0));
}

TEST_CASE("plan structure, gauge and marginals") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t m = 1 + rng() % 6;
    const std::size_t n = 1 + rng() % 6;
    const DiscreteMeasure mu = random_measure(rng, m);
    const DiscreteMeasure nu = random_measure(rng, n);
    const MatrixXd c = oracle::random_matrix(rng, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n), 0, 1);
    const double eps = rep % 2 ? 0.05 : 0.5;
    const EntropicSolution sol = sinkhorn(mu, nu, CostMatrix(c), eps);
    CHECK(sol.converged);
    CHECK(sol.marginal_error < 1e-9);
    CHECK(sol.phi[0] == 0.0);
    CHECK((sol.plan.array() > 0.0).all());
    CHECK((sol.plan.rowwise().sum() - mu.weights()).cwiseAbs().maxCoeff() <= sol.marginal_error);
    CHECK((sol.plan.colwise().sum().transpose() - nu.weights()).cwiseAbs().maxCoeff() <= sol.marginal_error);
    const double t = 0.37;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        const double scale = mu.weights()[i] * nu.weights()[j];
        const double formula = scale * std::exp((sol.phi[i] + sol.psi[j] - c(i, j)) / eps);
        const double shifted = scale * std::exp(((sol.phi[i] + t) + (sol.psi[j] - t) - c(i, j)) / eps);
        CHECK(std::abs(formula - sol.plan(i, j)) <= 1e-9 * sol.plan(i, j));
        CHECK(std::abs(shifted - formula) <= 1e-12 * formula);
      }
    }
    for (std::size_t k = 1; k < sol.error_history.size(); ++k) {
      CHECK(sol.error_history[k] <= sol.error_history[k - 1] * (1 + 1e-12) + 1e-16);
    }
  }
}

TEST_CASE("transport cost against the linear program across eps") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const DiscreteMeasure mu = random_measure(rng, 4);
    const DiscreteMeasure nu = random_measure(rng, 4);
    const CostMatrix cost(oracle::random_matrix(rng, 4, 4, 0, 1));
    const double lp = solve_discrete_ot(mu, nu, cost).value;
    double previous = -1.0;
    // At eps = 0.01 a few instances need close to 10^6 sweeps.
    EntropicOptions options;
    options.max_iter = 2000000;
    for (double eps : {0.01, 0.1, 1.0}) {
      const EntropicSolution sol = sinkhorn(mu, nu, cost, eps, options);
      CHECK(sol.converged);
      const double tc = eot_value(sol, mu, nu, cost).transport_cost;
      CHECK(std::abs(tc - lp) <= eps * std::log(16.0) + 1e-8);
      CHECK(tc >= previous - 1e-12);
      previous = tc;
    }
  }
}

TEST_CASE("iteration cap reports non-convergence") {
  const DiscreteMeasure half(VectorXd::Constant(2, 0.5));
  EntropicOptions options;
  options.max_iter = 1;
  MatrixXd c(2, 2);
  c << 0, 1, 2, 0;
  const DiscreteMeasure skew(VectorXd((VectorXd(2) << 0.3, 0.7).finished()));
  const EntropicSolution sol = sinkhorn(half, skew, CostMatrix(c), 0.1, options);
  CHECK_FALSE(sol.converged);
  CHECK(sol.iterations == 1);
  CHECK(sol.marginal_error > options.tol);
}

TEST_CASE("sinkhorn input errors") {
  const DiscreteMeasure half(VectorXd::Constant(2, 0.5));
  const CostMatrix cost(MatrixXd::Zero(2, 2));
  CHECK_THROWS_AS(sinkhorn(half, half, cost, 0.0), DomainError);
  CHECK_THROWS_AS(sinkhorn(half, half, cost, -1.0), DomainError);
  EntropicOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(sinkhorn(half, half, cost, 1.0, bad), DomainError);
  const DiscreteMeasure with_zero(VectorXd((VectorXd(2) << 1.0, 0.0).finished()));
  CHECK_THROWS_AS(sinkhorn(with_zero, half, cost, 1.0), DomainError);
  CHECK_THROWS_AS(sinkhorn(half, half, CostMatrix(MatrixXd::Zero(3, 2)), 1.0), DomainError);
}

TEST_CASE("log sum exp is stable") {
  VectorXd v(3);
  v << 1000.0, 1000.0, -1000.0;
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  v << -1e4, -1e4, -1e4;
  CHECK(log_sum_exp(v) == doctest::Approx(-1e4 + std::log(3.0)));
}

TEST_CASE("unbalanced with zero cost and equal marginals") {
  std::mt19937_64 rng(6);
  const DiscreteMeasure mu = random_measure(rng, 3);
  const EntropicSolution sol = unbalanced_sinkhorn(mu, mu, CostMatrix(MatrixXd::Zero(3, 3)), 0.3, 2.0, 5.0);
  CHECK(sol.converged);
  CHECK((sol.plan - mu.weights() * mu.weights().transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("unbalanced scalar case matches the first-order condition") {
  const DiscreteMeasure one(VectorXd::Ones(1));
  for (double c : {0.5, 2.0}) {
    for (double eps : {1.0, 0.1, 0.001}) {
      const double lam_mu = 1.5;
      const double lam_nu = 0.5;
      const EntropicSolution sol =
          unbalanced_sinkhorn(one, one, CostMatrix(MatrixXd::Constant(1, 1, c)), eps, lam_mu, lam_nu);
      CHECK(sol.converged);
      // c + (lam_mu + lam_nu + eps) log m = 0 at the fixed point.
      CHECK(std::abs(sol.plan(0, 0) - std::exp(-c / (lam_mu + lam_nu + eps))) <= 1e-9);
    }
  }
}

TEST_CASE("unbalanced with large penalties recovers the balanced plan") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const DiscreteMeasure mu = random_measure(rng, 4);
    const DiscreteMeasure nu = random_measure(rng, 4);
    const CostMatrix cost(oracle::random_matrix(rng, 4, 4, 0, 1));
    const EntropicSolution balanced = sinkhorn(mu, nu, cost, 0.5);
    const EntropicSolution loose = unbalanced_sinkhorn(mu, nu, cost, 0.5, 1e6, 1e6);
    CHECK(loose.converged);
    CHECK((loose.plan - balanced.plan).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("unbalanced solution is a local minimum of the objective") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> noise(0.0, 1e-3);
  for (int rep = 0; rep < 10; ++rep) {
    const DiscreteMeasure mu(oracle::normalized(oracle::random_integers(rng, 3, 1, 9)));
    const DiscreteMeasure nu(2.0 * oracle::normalized(oracle::random_integers(rng, 4, 1, 9)), false);
    const CostMatrix cost(oracle::random_matrix(rng, 3, 4, 0, 1));
    const EntropicSolution sol = unbalanced_sinkhorn(mu, nu, cost, 0.2, 0.7, 1.3);
    CHECK(sol.converged);
    const double best = uot_objective(sol.plan, mu, nu, cost, 0.2, 0.7, 1.3);
    for (int k = 0; k < 20; ++k) {
      MatrixXd moved = sol.plan;
      for (Eigen::Index i = 0; i < moved.size(); ++i) moved.data()[i] *= std::exp(noise(rng));
      CHECK(uot_objective(moved, mu, nu, cost, 0.2, 0.7, 1.3) >= best - 1e-12);
    }
  }
}

TEST_CASE("unbalanced input errors") {
  const DiscreteMeasure half(VectorXd::Constant(2, 0.5));
  const CostMatrix cost(MatrixXd::Zero(2, 2));
  CHECK_THROWS_AS(unbalanced_sinkhorn(half, half, cost, 1.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(unbalanced_sinkhorn(half, half, cost, 0.0, 1.0, 1.0), DomainError);
}

}
