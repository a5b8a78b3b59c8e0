#include "otecon/matching.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "otecon/entropic.hpp"
#include "otecon/errors.hpp"

namespace otecon {

namespace {

double capped_exp(double x) {
  if (x > kExponentCap) throw OverflowError("exponent " + std::to_string(x) + " exceeds cap");
  return std::exp(x);
}

MatrixXd capped_exp(const MatrixXd& x) {
  if (x.size() > 0 && x.maxCoeff() > kExponentCap) {
    throw OverflowError("exponent exceeds cap of 700");
  }
  return x.array().exp().matrix();
}

// Positive root of u^2 + s u - m = 0, written to avoid cancellation.
double positive_root(double s, double m) { return 2.0 * m / (s + std::sqrt(s * s + 4.0 * m)); }

MatrixXd intensity(const MatrixXd& surplus, const VectorXd& a, const VectorXd& b) {
  MatrixXd z = surplus;
  z.colwise() -= a;
  z.rowwise() -= b.transpose();
  return capped_exp(z);
}

}  // namespace

MatchingTable::MatchingTable(MatrixXd flows, VectorXd singles_x, VectorXd singles_y)
    : flows_(std::move(flows)), singles_x_(std::move(singles_x)), singles_y_(std::move(singles_y)) {
  if (flows_.rows() != singles_x_.size() || flows_.cols() != singles_y_.size()) {
    throw DomainError("matching table shapes disagree");
  }
  if (flows_.size() == 0) throw DomainError("empty matching table");
  auto positive = [](const auto& m) { return m.allFinite() && (m.array() > 0.0).all(); };
  if (!positive(flows_) || !positive(singles_x_) || !positive(singles_y_)) {
    throw DomainError("matching table entries must be strictly positive");
  }
}

SurplusBasis::SurplusBasis(std::vector<MatrixXd> basis) : basis_(std::move(basis)) {
  if (basis_.empty()) throw DomainError("surplus basis needs at least one term");
  for (const auto& m : basis_) {
    if (m.rows() != basis_.front().rows() || m.cols() != basis_.front().cols()) {
      throw DomainError("surplus basis terms differ in shape");
    }
    if (!m.allFinite()) throw DomainError("surplus basis not finite");
  }
}

MatrixXd SurplusBasis::surplus(const VectorXd& params) const {
  if (static_cast<std::size_t>(params.size()) != basis_.size()) {
    throw DomainError("expected " + std::to_string(basis_.size()) + " parameters");
  }
  MatrixXd phi = MatrixXd::Zero(rows(), cols());
  for (std::size_t k = 0; k < basis_.size(); ++k) phi += params[static_cast<Eigen::Index>(k)] * basis_[k];
  return phi;
}

VectorXd SurplusBasis::moments(const MatrixXd& w) const {
  VectorXd m(static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    m[static_cast<Eigen::Index>(k)] = (w.array() * basis_[k].array()).sum();
  }
  return m;
}

EquilibriumResult cs_equilibrium(const MatrixXd& surplus, const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu, EquilibriumOptions options) {
  if (surplus.rows() != static_cast<Eigen::Index>(mu.size()) ||
      surplus.cols() != static_cast<Eigen::Index>(nu.size())) {
    throw DomainError("surplus shape does not match type masses");
  }
  if (mu.weights().minCoeff() <= 0.0 || nu.weights().minCoeff() <= 0.0) {
    throw DomainError("type masses must be strictly positive");
  }
  if (!surplus.allFinite()) throw DomainError("surplus not finite");
  const MatrixXd kernel = capped_exp(surplus);
  const VectorXd& m = mu.weights();
  const VectorXd& n = nu.weights();
  VectorXd u = VectorXd::Ones(m.size());
  VectorXd v = VectorXd::Ones(n.size());
  std::size_t it = 0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  while (it < options.max_iter) {
    const VectorXd s = kernel * v;
    for (Eigen::Index x = 0; x < u.size(); ++x) u[x] = positive_root(s[x], m[x]);
    const VectorXd t = kernel.transpose() * u;
    for (Eigen::Index y = 0; y < v.size(); ++y) v[y] = positive_root(t[y], n[y]);
    ++it;
    // Columns hold exactly after the v update; check the rows.
    const VectorXd rows = u.cwiseProduct(u) + u.cwiseProduct(kernel * v);
    residual = (rows - m).cwiseAbs().maxCoeff();
    if (residual < options.tol) {
      converged = true;
      break;
    }
  }
  MatrixXd flows = kernel;
  flows = u.asDiagonal() * flows * v.asDiagonal();
  EquilibriumResult res{MatchingTable(flows, u.cwiseProduct(u), v.cwiseProduct(v)),
                        -u.array().log().matrix(), -v.array().log().matrix(), it, residual,
                        converged};
  return res;
}

MatrixXd cs_identify(const MatchingTable& table) {
  MatrixXd phi = table.flows().array().log().matrix();
  const VectorXd half_x = 0.5 * table.singles_x().array().log();
  const VectorXd half_y = 0.5 * table.singles_y().array().log();
  phi.colwise() -= half_x;
  phi.rowwise() -= half_y.transpose();
  return phi;
}

namespace {

void check_theta(const PoissonParams& theta, const MatchingTable& table, const SurplusBasis& basis) {
  if (basis.rows() != table.flows().rows() || basis.cols() != table.flows().cols()) {
    throw DomainError("basis shape does not match the table");
  }
  if (theta.a.size() != table.flows().rows() || theta.b.size() != table.flows().cols() ||
      static_cast<std::size_t>(theta.lambda.size()) != basis.size()) {
    throw DomainError("parameter sizes do not match the table and basis");
  }
}

}  // namespace

// Sums run over all pairs including the unmatched ones (x, 0) and (0, y),
// whose surplus and partner fixed effect are zero.
double poisson_loglik(const PoissonParams& theta, const MatchingTable& table,
                      const SurplusBasis& basis) {
  check_theta(theta, table, basis);
  const MatrixXd surplus = basis.surplus(theta.lambda);
  MatrixXd z = surplus;
  z.colwise() -= theta.a;
  z.rowwise() -= theta.b.transpose();
  const MatrixXd expected = capped_exp(z);
  double ll = (table.flows().array() * z.array()).sum() - expected.sum();
  for (Eigen::Index x = 0; x < theta.a.size(); ++x) {
    ll -= table.singles_x()[x] * theta.a[x] + 0.5 * capped_exp(-2.0 * theta.a[x]);
  }
  for (Eigen::Index y = 0; y < theta.b.size(); ++y) {
    ll -= table.singles_y()[y] * theta.b[y] + 0.5 * capped_exp(-2.0 * theta.b[y]);
  }
  return ll;
}

PoissonParams poisson_loglik_gradient(const PoissonParams& theta, const MatchingTable& table,
                                      const SurplusBasis& basis) {
  check_theta(theta, table, basis);
  const MatrixXd expected = intensity(basis.surplus(theta.lambda), theta.a, theta.b);
  const MatrixXd gap = table.flows() - expected;
  PoissonParams g;
  g.lambda = basis.moments(gap);
  g.a = -gap.rowwise().sum() - table.singles_x();
  g.b = -gap.colwise().sum().transpose() - table.singles_y();
  for (Eigen::Index x = 0; x < g.a.size(); ++x) g.a[x] += capped_exp(-2.0 * theta.a[x]);
  for (Eigen::Index y = 0; y < g.b.size(); ++y) g.b[y] += capped_exp(-2.0 * theta.b[y]);
  return g;
}

MomentMatchingResult moment_matching(const MatchingTable& table, const SurplusBasis& basis,
                                     double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  const auto k = static_cast<Eigen::Index>(basis.size());
  if (basis.rows() != table.flows().rows() || basis.cols() != table.flows().cols()) {
    throw DomainError("basis shape does not match the table");
  }
  MatrixXd design(basis.rows() * basis.cols(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    design.col(c) = Eigen::Map<const VectorXd>(basis[static_cast<std::size_t>(c)].data(), design.rows());
  }
  if (Eigen::ColPivHouseholderQR<MatrixXd>(design).rank() < k) {
    throw NonIdentificationError("surplus basis is rank deficient");
  }

  const DiscreteMeasure mu(table.mass_x(), false);
  const DiscreteMeasure nu(table.mass_y(), false);
  const VectorXd observed = basis.moments(table.flows());
  const double scale = std::max({1.0, mu.weights().maxCoeff(), nu.weights().maxCoeff()});
  const EquilibriumOptions inner{1e-13 * scale, 1000000};

  struct Point {
    VectorXd lambda;
    VectorXd a;
    VectorXd b;
    VectorXd grad;
    double objective;
  };
  auto evaluate = [&](const VectorXd& lambda) {
    auto eq = cs_equilibrium(basis.surplus(lambda), mu, nu, inner);
    Point p{lambda, eq.a, eq.b, basis.moments(eq.table.flows()) - observed, 0.0};
    p.objective = -poisson_loglik({lambda, p.a, p.b}, table, basis);
    return p;
  };

  MomentMatchingResult res;
  Point cur = evaluate(VectorXd::Zero(k));
  res.objective_history.push_back(cur.objective);
  double step = 1.0 / std::max(1.0, scale);
  std::optional<Point> prev;
  while (cur.grad.cwiseAbs().maxCoeff() > tol) {
    if (res.iterations >= max_iter) {
      throw NonIdentificationError("moment matching did not converge; residual " +
                                   std::to_string(cur.grad.cwiseAbs().maxCoeff()));
    }
    if (prev) {
      // Barzilai-Borwein initial step.
      const VectorXd dl = cur.lambda - prev->lambda;
      const VectorXd dg = cur.grad - prev->grad;
      const double curv = dl.dot(dg);
      if (curv > 0.0) step = dl.squaredNorm() / curv;
    }
    const double gnorm2 = cur.grad.squaredNorm();
    bool accepted = false;
    for (int halving = 0; halving < 80; ++halving, step *= 0.5) {
      Point trial = evaluate(cur.lambda - step * cur.grad);
      // Near the optimum the decrease is below roundoff in the objective.
      const double slack = 1e-14 * std::abs(cur.objective);
      const bool armijo = trial.objective <= cur.objective - 1e-4 * step * gnorm2;
      const bool flat = trial.objective <= cur.objective + slack &&
                        trial.grad.squaredNorm() < gnorm2;
      if (armijo || flat) {
        prev = std::move(cur);
        cur = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NonIdentificationError("moment matching stalled with residual " +
                                   std::to_string(cur.grad.cwiseAbs().maxCoeff()));
    }
    ++res.iterations;
    res.objective_history.push_back(cur.objective);
  }
  res.lambda = cur.lambda;
  res.a = cur.a;
  res.b = cur.b;
  res.moment_residual = cur.grad;
  return res;
}

double soft_threshold(double x, double threshold) {
  if (x > threshold) return x - threshold;
  if (x < -threshold) return x + threshold;
  return 0.0;
}

double sista_smooth_objective(const MatrixXd& pi_hat, const SurplusBasis& basis,
                              const VectorXd& phi, const VectorXd& psi,
                              const VectorXd& beta, double eps) {
  MatrixXd z = basis.surplus(beta);
  z.colwise() += phi;
  z.rowwise() += psi.transpose();
  const double linear = (pi_hat.array() * z.array()).sum();
  const double mass = capped_exp((z / eps).eval()).sum();
  return -(linear - eps * mass);
}

SistaResult sista(const MatrixXd& pi_hat, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                  const SurplusBasis& basis, SistaOptions options) {
  const double eps = options.eps;
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(options.l1 >= 0.0)) throw DomainError("l1 must be nonnegative");
  if (!(options.tol > 0.0)) throw DomainError("tol must be positive");
  if (options.step && !(*options.step > 0.0)) throw DomainError("step must be positive");
  if (pi_hat.size() == 0 || !pi_hat.allFinite() || (pi_hat.array() <= 0.0).any()) {
    throw DomainError("observed plan must be strictly positive");
  }
  if (pi_hat.rows() != static_cast<Eigen::Index>(mu.size()) ||
      pi_hat.cols() != static_cast<Eigen::Index>(nu.size()) || basis.rows() != pi_hat.rows() ||
      basis.cols() != pi_hat.cols()) {
    throw DomainError("plan, marginals and basis shapes disagree");
  }
  if (mu.weights().minCoeff() <= 0.0 || nu.weights().minCoeff() <= 0.0) {
    throw DomainError("marginals must be strictly positive");
  }
  const auto k = static_cast<Eigen::Index>(basis.size());

  SistaResult res;
  res.beta = options.beta0.value_or(VectorXd::Zero(k));
  if (res.beta.size() != k) throw DomainError("beta0 has the wrong length");
  if (options.step) {
    res.step = *options.step;
  } else {
    double lipschitz = 0.0;
    for (std::size_t c = 0; c < basis.size(); ++c) lipschitz = std::max(lipschitz, basis[c].squaredNorm());
    res.step = lipschitz > 0.0 ? eps / lipschitz : 1.0;
  }
  const VectorXd log_mu = mu.weights().array().log();
  const VectorXd log_nu = nu.weights().array().log();
  res.phi = VectorXd::Zero(pi_hat.rows());
  res.psi = VectorXd::Zero(pi_hat.cols());
  const VectorXd observed = basis.moments(pi_hat);

  auto composite = [&](const VectorXd& beta) {
    return sista_smooth_objective(pi_hat, basis, res.phi, res.psi, beta, eps) +
           options.l1 * beta.lpNorm<1>();
  };

  int increases = 0;
  double last = std::numeric_limits<double>::infinity();
  VectorXd buf;
  while (res.iterations < options.max_iter) {
    ++res.iterations;
    const MatrixXd surplus = basis.surplus(res.beta);
    // Exact block maximization of F in phi, then in psi.
    buf.resize(pi_hat.cols());
    for (Eigen::Index x = 0; x < pi_hat.rows(); ++x) {
      buf = (res.psi + surplus.row(x).transpose()) / eps;
      res.phi[x] = eps * (log_mu[x] - log_sum_exp(buf));
    }
    buf.resize(pi_hat.rows());
    for (Eigen::Index y = 0; y < pi_hat.cols(); ++y) {
      buf = (res.phi + surplus.col(y)) / eps;
      res.psi[y] = eps * (log_nu[y] - log_sum_exp(buf));
    }
    MatrixXd z = surplus;
    z.colwise() += res.phi;
    z.rowwise() += res.psi.transpose();
    const MatrixXd model = capped_exp((z / eps).eval());
    res.marginal_error = (model.rowwise().sum() - mu.weights()).cwiseAbs().maxCoeff();

    const VectorXd grad = basis.moments(model) - observed;
    const double before = composite(res.beta);
    VectorXd next(k);
    double after = before;
    for (int halving = 0; halving < 60; ++halving) {
      for (Eigen::Index c = 0; c < k; ++c) {
        next[c] = soft_threshold(res.beta[c] - res.step * grad[c], options.l1 * res.step);
      }
      after = composite(next);
      if (after <= before + 1e-14 * std::abs(before)) break;
      res.step *= 0.5;
    }
    const double change = (next - res.beta).cwiseAbs().maxCoeff();
    if (after <= before + 1e-14 * std::abs(before)) res.beta = next;
    res.objective_history.push_back(composite(res.beta));

    const double now = res.objective_history.back();
    if (now > last + 1e-12 * std::max(1.0, std::abs(last))) {
      if (++increases >= 2) throw StepSizeError("SISTA objective increased twice in a row");
    } else {
      increases = 0;
    }
    last = now;
    if (change < options.tol && res.marginal_error < options.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace otecon
