#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "otecon/errors.hpp"
#include "otecon/matching.hpp"

using namespace otecon;

namespace {

DiscreteMeasure masses(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> dist(0.5, 2.0);
  VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = dist(rng);
  return DiscreteMeasure(w, false);
}

DiscreteMeasure uniform(Eigen::Index n) { return DiscreteMeasure(VectorXd::Constant(n, 1.0 / n)); }

MatchingTable one_by_one(double f, double sx, double sy) {
  return MatchingTable(MatrixXd::Constant(1, 1, f), VectorXd::Constant(1, sx), VectorXd::Constant(1, sy));
}

SurplusBasis random_basis(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, int k) {
  std::vector<MatrixXd> terms;
  for (int c = 0; c < k; ++c) terms.push_back(oracle::random_matrix(rng, rows, cols, -1.0, 1.0));
  return SurplusBasis(terms);
}

// Plan exp((Phi + phi + psi) / eps) with margins mu, nu by plain matrix scaling.
MatrixXd scaled_plan(const MatrixXd& surplus, const VectorXd& mu, const VectorXd& nu, double eps) {
  const MatrixXd kernel = (surplus / eps).array().exp().matrix();
  VectorXd u = VectorXd::Ones(mu.size());
  VectorXd v = VectorXd::Ones(nu.size());
  for (int it = 0; it < 100000; ++it) {
    u = mu.cwiseQuotient(kernel * v);
    v = nu.cwiseQuotient(kernel.transpose() * u);
    if ((u.cwiseProduct(kernel * v) - mu).cwiseAbs().maxCoeff() < 1e-15) break;
  }
  return u.asDiagonal() * kernel * v.asDiagonal();
}

double margin_residual(const EquilibriumResult& eq, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const double rows = (eq.table.mass_x() - mu.weights()).cwiseAbs().maxCoeff();
  const double cols = (eq.table.mass_y() - nu.weights()).cwiseAbs().maxCoeff();
  return std::max(rows, cols);
}

}  // namespace

TEST_SUITE("matching") {

TEST_CASE("one by one equilibrium") {
  const DiscreteMeasure one(VectorXd::Ones(1), false);
  const EquilibriumResult eq = cs_equilibrium(MatrixXd::Zero(1, 1), one, one, {1e-15, 100000});
  CHECK(eq.converged);
  CHECK(eq.table.flows()(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(eq.table.singles_x()[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(eq.table.singles_y()[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(eq.a[0] == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("very negative surplus gives autarky") {
  std::mt19937_64 rng(3);
  const DiscreteMeasure mu = masses(rng, 3);
  const DiscreteMeasure nu = masses(rng, 2);
  const EquilibriumResult eq = cs_equilibrium(MatrixXd::Constant(3, 2, -50.0), mu, nu);
  CHECK(eq.converged);
  CHECK(eq.table.flows().maxCoeff() < 1e-20);
  CHECK((eq.table.singles_x() - mu.weights()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((eq.table.singles_y() - nu.weights()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("random equilibria meet the margins") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const MatrixXd phi = oracle::random_matrix(rng, 3, 3, -1.0, 1.0);
    const EquilibriumResult eq = cs_equilibrium(phi, uniform(3), uniform(3));
    REQUIRE(eq.converged);
    CHECK(margin_residual(eq, uniform(3), uniform(3)) <= 1e-10);
    // The table has the stated parameterization.
    const VectorXd u = (-eq.a).array().exp();
    const VectorXd v = (-eq.b).array().exp();
    const MatrixXd flows = phi.array().exp().matrix();
    CHECK((u.asDiagonal() * flows * v.asDiagonal() - eq.table.flows()).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((u.cwiseProduct(u) - eq.table.singles_x()).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("iteration cap reports no convergence") {
  std::mt19937_64 rng(6);
  const MatrixXd phi = oracle::random_matrix(rng, 3, 3, -1.0, 1.0);
  const EquilibriumResult eq = cs_equilibrium(phi, uniform(3), uniform(3), {1e-15, 1});
  CHECK_FALSE(eq.converged);
  CHECK(eq.iterations == 1);
}

TEST_CASE("identification examples") {
  const MatrixXd phi = cs_identify(one_by_one(0.04, 0.04, 0.04));
  CHECK(std::abs(phi(0, 0)) <= 1e-15);
  CHECK(std::abs(cs_identify(one_by_one(0.5, 0.5, 0.5))(0, 0)) <= 1e-15);
  CHECK_THROWS_AS(one_by_one(0.5, 0.0, 0.5), DomainError);
  CHECK_THROWS_AS(one_by_one(-0.5, 0.5, 0.5), DomainError);
}

TEST_CASE("identification inverts the equilibrium") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> size(1, 5);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int rows = size(rng);
    const int cols = size(rng);
    const MatrixXd phi = oracle::random_matrix(rng, rows, cols, -2.0, 2.0);
    const EquilibriumResult eq = cs_equilibrium(phi, masses(rng, rows), masses(rng, cols));
    REQUIRE(eq.converged);
    worst = std::max(worst, (cs_identify(eq.table) - phi).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("poisson log likelihood example") {
  const SurplusBasis basis({MatrixXd::Ones(1, 1)});
  const PoissonParams theta{VectorXd::Zero(1), VectorXd::Zero(1), VectorXd::Zero(1)};
  CHECK(poisson_loglik(theta, one_by_one(0.5, 0.5, 0.5), basis) == doctest::Approx(-2.0).epsilon(1e-15));
  const PoissonParams huge{VectorXd::Constant(1, 800.0), VectorXd::Zero(1), VectorXd::Zero(1)};
  CHECK_THROWS_AS(poisson_loglik(huge, one_by_one(0.5, 0.5, 0.5), basis), OverflowError);
}

TEST_CASE("poisson gradient matches central differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index rows = 3;
    const Eigen::Index cols = 4;
    const SurplusBasis basis = random_basis(rng, rows, cols, 2);
    const EquilibriumResult eq =
        cs_equilibrium(oracle::random_matrix(rng, rows, cols, -1.0, 1.0), masses(rng, rows), masses(rng, cols));
    PoissonParams theta{VectorXd::Zero(2), VectorXd::Zero(rows), VectorXd::Zero(cols)};
    for (VectorXd* v : {&theta.lambda, &theta.a, &theta.b}) {
      for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = unit(rng);
    }
    const PoissonParams g = poisson_loglik_gradient(theta, eq.table, basis);
    const double h = 1e-6;
    auto check_block = [&](VectorXd PoissonParams::*block, const VectorXd& analytic) {
      for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        PoissonParams up = theta;
        PoissonParams down = theta;
        (up.*block)[i] += h;
        (down.*block)[i] -= h;
        const double fd = (poisson_loglik(up, eq.table, basis) - poisson_loglik(down, eq.table, basis)) / (2 * h);
        worst = std::max(worst, std::abs(fd - analytic[i]) / std::max(1.0, std::abs(analytic[i])));
      }
    };
    check_block(&PoissonParams::lambda, g.lambda);
    check_block(&PoissonParams::a, g.a);
    check_block(&PoissonParams::b, g.b);

    // In lambda the gradient is observed minus predicted moments.
    MatrixXd z = basis.surplus(theta.lambda);
    z.colwise() -= theta.a;
    z.rowwise() -= theta.b.transpose();
    const MatrixXd predicted = z.array().exp().matrix();
    for (std::size_t k = 0; k < 2; ++k) {
      const double expect = ((eq.table.flows() - predicted).array() * basis[k].array()).sum();
      CHECK(g.lambda[static_cast<Eigen::Index>(k)] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("moment matching recovers the generating parameter") {
  std::mt19937_64 rng(13);
  const SurplusBasis basis({MatrixXd::Ones(3, 4)});
  for (double lambda0 : {0.7, 0.0}) {
    const DiscreteMeasure mu = masses(rng, 3);
    const DiscreteMeasure nu = masses(rng, 4);
    const EquilibriumResult eq = cs_equilibrium(MatrixXd::Constant(3, 4, lambda0), mu, nu);
    const MomentMatchingResult fit = moment_matching(eq.table, basis);
    CHECK(std::abs(fit.lambda[0] - lambda0) <= 1e-6);
    CHECK(fit.moment_residual.cwiseAbs().maxCoeff() <= 1e-10);
    for (std::size_t t = 1; t < fit.objective_history.size(); ++t) {
      CHECK(fit.objective_history[t] <= fit.objective_history[t - 1] + 1e-13 * std::abs(fit.objective_history[t - 1]));
    }
  }
}

TEST_CASE("moment matching with several basis terms") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const SurplusBasis basis = random_basis(rng, 4, 3, 3);
    VectorXd lambda0(3);
    lambda0 << 0.5, -0.8, 0.3;
    const EquilibriumResult eq = cs_equilibrium(basis.surplus(lambda0), masses(rng, 4), masses(rng, 3));
    const MomentMatchingResult fit = moment_matching(eq.table, basis);
    CHECK((fit.lambda - lambda0).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(fit.moment_residual.cwiseAbs().maxCoeff() <= 1e-10);
    for (std::size_t t = 1; t < fit.objective_history.size(); ++t) {
      CHECK(fit.objective_history[t] <= fit.objective_history[t - 1] + 1e-13 * std::abs(fit.objective_history[t - 1]));
    }
  }
}

TEST_CASE("likelihood maximizer coincides with moment matching") {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 10; ++rep) {
    const SurplusBasis basis = random_basis(rng, 3, 3, 2);
    // A table that is not an exact equilibrium of the model.
    const MatchingTable table(oracle::random_matrix(rng, 3, 3, 0.05, 0.5),
                              oracle::random_matrix(rng, 3, 1, 0.05, 0.5).col(0),
                              oracle::random_matrix(rng, 3, 1, 0.05, 0.5).col(0));
    const MomentMatchingResult fit = moment_matching(table, basis);
    const PoissonParams best{fit.lambda, fit.a, fit.b};

    // Independent maximization: Newton on the concave likelihood, Hessian by
    // differences of the gradient.
    PoissonParams theta{VectorXd::Zero(2), VectorXd::Zero(3), VectorXd::Zero(3)};
    auto pack = [](const PoissonParams& p) {
      VectorXd v(8);
      v << p.lambda, p.a, p.b;
      return v;
    };
    auto unpack = [](const VectorXd& v) {
      return PoissonParams{v.segment(0, 2), v.segment(2, 3), v.segment(5, 3)};
    };
    VectorXd x = pack(theta);
    for (int it = 0; it < 100; ++it) {
      const VectorXd g = pack(poisson_loglik_gradient(unpack(x), table, basis));
      if (g.cwiseAbs().maxCoeff() < 1e-12) break;
      MatrixXd hess(8, 8);
      for (Eigen::Index j = 0; j < 8; ++j) {
        VectorXd up = x;
        VectorXd down = x;
        up[j] += 1e-6;
        down[j] -= 1e-6;
        hess.col(j) = (pack(poisson_loglik_gradient(unpack(up), table, basis)) -
                       pack(poisson_loglik_gradient(unpack(down), table, basis))) / 2e-6;
      }
      hess = (0.5 * (hess + hess.transpose())).eval();
      VectorXd dir = hess.ldlt().solve(-g);
      double t = 1.0;
      const double base = poisson_loglik(unpack(x), table, basis);
      while (poisson_loglik(unpack(x + t * dir), table, basis) < base && t > 1e-10) t *= 0.5;
      x += t * dir;
    }
    CHECK((pack(best) - x).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(pack(poisson_loglik_gradient(best, table, basis)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("rank deficient basis is not identified") {
  std::mt19937_64 rng(23);
  const MatrixXd term = oracle::random_matrix(rng, 3, 3, -1.0, 1.0);
  const SurplusBasis basis({term, 2.0 * term});
  const EquilibriumResult eq = cs_equilibrium(term, masses(rng, 3), masses(rng, 3));
  CHECK_THROWS_AS(moment_matching(eq.table, basis), NonIdentificationError);
}

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-1.0, 1.0) == 0.0);
}

TEST_CASE("sista recovers the generating cost") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 5; ++rep) {
    const SurplusBasis basis = random_basis(rng, 4, 5, 2);
    VectorXd beta0(2);
    beta0 << 0.8, -0.4;
    const DiscreteMeasure mu = uniform(4);
    const DiscreteMeasure nu = uniform(5);
    const MatrixXd pi_hat = scaled_plan(basis.surplus(beta0), mu.weights(), nu.weights(), 1.0);
    SistaOptions opt;
    opt.eps = 1.0;
    const SistaResult res = sista(pi_hat, mu, nu, basis, opt);
    CHECK(res.converged);
    CHECK((res.beta - beta0).cwiseAbs().maxCoeff() <= 1e-4);
    for (std::size_t t = 1; t < res.objective_history.size(); ++t) {
      CHECK(res.objective_history[t] <= res.objective_history[t - 1] + 1e-12 * std::abs(res.objective_history[t - 1]));
    }
    // Margins and moment conditions at the fixed point.
    MatrixXd z = basis.surplus(res.beta);
    z.colwise() += res.phi;
    z.rowwise() += res.psi.transpose();
    const MatrixXd model = z.array().exp().matrix();
    CHECK((model.rowwise().sum() - mu.weights()).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((model.colwise().sum().transpose() - nu.weights()).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((basis.moments(model) - basis.moments(pi_hat)).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("sista with a dominating penalty returns zero") {
  std::mt19937_64 rng(31);
  const SurplusBasis basis = random_basis(rng, 3, 3, 3);
  VectorXd beta0(3);
  beta0 << 1.0, -1.0, 0.5;
  const MatrixXd pi_hat = scaled_plan(basis.surplus(beta0), uniform(3).weights(), uniform(3).weights(), 1.0);
  SistaOptions opt;
  opt.l1 = 1e6;
  const SistaResult res = sista(pi_hat, uniform(3), uniform(3), basis, opt);
  CHECK(res.converged);
  for (Eigen::Index k = 0; k < 3; ++k) CHECK(res.beta[k] == 0.0);
}

TEST_CASE("sista with a null basis keeps the start") {
  std::mt19937_64 rng(37);
  const SurplusBasis basis({MatrixXd::Zero(3, 2)});
  const MatrixXd pi_hat = oracle::random_matrix(rng, 3, 2, 0.1, 1.0);
  const DiscreteMeasure mu(pi_hat.rowwise().sum(), false);
  const DiscreteMeasure nu(pi_hat.colwise().sum().transpose(), false);
  SistaOptions opt;
  opt.beta0 = VectorXd::Constant(1, 0.3);
  const SistaResult res = sista(pi_hat, mu, nu, basis, opt);
  CHECK(res.beta[0] == 0.3);
  for (std::size_t t = 1; t < res.objective_history.size(); ++t) {
    CHECK(res.objective_history[t] == doctest::Approx(res.objective_history[0]).epsilon(1e-12));
  }
}

TEST_CASE("sista rejects a nonpositive step") {
  const SurplusBasis basis({MatrixXd::Ones(2, 2)});
  const MatrixXd pi_hat = MatrixXd::Constant(2, 2, 0.25);
  SistaOptions opt;
  opt.step = 0.0;
  CHECK_THROWS_AS(sista(pi_hat, uniform(2), uniform(2), basis, opt), DomainError);
  opt.step = -1.0;
  CHECK_THROWS_AS(sista(pi_hat, uniform(2), uniform(2), basis, opt), DomainError);
}

}  // TEST_SUITE
