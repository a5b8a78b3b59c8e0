#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otecon/bounds.hpp"
#include "otecon/closed_forms.hpp"
#include "otecon/discrete_ot.hpp"
#include "otecon/entropic.hpp"
#include "otecon/errors.hpp"
#include "otecon/matching.hpp"
#include "otecon/semidiscrete.hpp"
#include "otecon/version.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace otecon;

namespace {

DiscreteMeasure probability(const VectorXd& w) { return DiscreteMeasure(w); }
DiscreteMeasure positive(const VectorXd& w) { return DiscreteMeasure(w, false); }

Sample1D sample(const std::vector<double>& v) { return Sample1D(v); }

py::dict entropic_dict(const EntropicSolution& s) {
  return py::dict("plan"_a = s.plan, "phi"_a = s.phi, "psi"_a = s.psi, "iterations"_a = s.iterations,
                  "marginal_error"_a = s.marginal_error, "residual"_a = s.residual,
                  "converged"_a = s.converged, "error_history"_a = s.error_history);
}

SurplusBasis basis_from(const std::vector<MatrixXd>& terms) { return SurplusBasis(terms); }

}  // namespace

PYBIND11_MODULE(_otecon, m) {
  m.doc() = "Optimal transport solvers, bounds and matching estimators";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base);
  py::register_exception<NotPsdError>(m, "NotPsdError", base);
  py::register_exception<NotInvertibleError>(m, "NotInvertibleError", base);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", base);
  py::register_exception<ResourceError>(m, "ResourceError", base);
  py::register_exception<SolverStallError>(m, "SolverStallError", base);
  py::register_exception<NonAssignmentError>(m, "NonAssignmentError", base);
  py::register_exception<NonIdentificationError>(m, "NonIdentificationError", base);
  py::register_exception<StepSizeError>(m, "StepSizeError", base);
  py::register_exception<OverflowError>(m, "OverflowError", base);

  m.def(
      "solve_ot",
      [](const VectorXd& mu, const VectorXd& nu, const MatrixXd& cost, std::size_t max_iter) {
        const DiscreteOtSolution s = solve_discrete_ot(probability(mu), probability(nu), CostMatrix(cost), {max_iter});
        std::vector<std::pair<Eigen::Index, Eigen::Index>> basis;
        for (const Edge& e : s.plan.basis) basis.emplace_back(e.row, e.col);
        return py::dict("value"_a = s.value, "dual_value"_a = s.dual_value, "plan"_a = s.plan.mass,
                        "basis"_a = basis, "phi"_a = s.potentials.phi, "psi"_a = s.potentials.psi,
                        "pivots"_a = s.pivots);
      },
      "mu"_a, "nu"_a, "cost"_a, "max_iter"_a = 0,
      "Exact discrete optimal transport by the network simplex.");

  m.def(
      "sinkhorn",
      [](const VectorXd& mu, const VectorXd& nu, const MatrixXd& cost, double eps, double tol, std::size_t max_iter) {
        const DiscreteMeasure a = probability(mu), b = probability(nu);
        const EntropicSolution s = sinkhorn(a, b, CostMatrix(cost), eps, {tol, max_iter});
        py::dict out = entropic_dict(s);
        const EntropicValue v = eot_value(s, a, b, CostMatrix(cost));
        out["transport_cost"] = v.transport_cost;
        out["primal_objective"] = v.primal_objective;
        return out;
      },
      "mu"_a, "nu"_a, "cost"_a, "eps"_a = 0.1, "tol"_a = 1e-9, "max_iter"_a = 10000);

  m.def(
      "unbalanced_sinkhorn",
      [](const VectorXd& mu, const VectorXd& nu, const MatrixXd& cost, double eps, double lam_mu, double lam_nu,
         double tol, std::size_t max_iter) {
        const DiscreteMeasure a = positive(mu), b = positive(nu);
        const EntropicSolution s = unbalanced_sinkhorn(a, b, CostMatrix(cost), eps, lam_mu, lam_nu, {tol, max_iter});
        py::dict out = entropic_dict(s);
        out["objective"] = uot_objective(s.plan, a, b, CostMatrix(cost), eps, lam_mu, lam_nu);
        return out;
      },
      "mu"_a, "nu"_a, "cost"_a, "eps"_a = 0.1, "lam_mu"_a = 1.0, "lam_nu"_a = 1.0, "tol"_a = 1e-9,
      "max_iter"_a = 10000);

  m.def(
      "wasserstein_1d",
      [](const std::vector<double>& x, const std::vector<double>& y, double p) {
        return wasserstein_1d(sample(x), sample(y), p);
      },
      "x"_a, "y"_a, "p"_a = 1.0);

  m.def(
      "ot_value_1d",
      [](const std::vector<double>& x, const std::vector<double>& y, const ScalarCost& cost) {
        return ot_value_1d(sample(x), sample(y), cost);
      },
      "x"_a, "y"_a, "cost"_a, "Quantile coupling value; valid for submodular costs.");

  m.def(
      "gaussian_w2",
      [](const VectorXd& m1, const MatrixXd& s1, const VectorXd& m2, const MatrixXd& s2) {
        return gaussian_w2(GaussianMeasure(m1, s1), GaussianMeasure(m2, s2));
      },
      "mean1"_a, "cov1"_a, "mean2"_a, "cov2"_a);

  m.def(
      "gaussian_map",
      [](const VectorXd& m1, const MatrixXd& s1, const VectorXd& m2, const MatrixXd& s2) {
        const AffineMap map = gaussian_ot_map(GaussianMeasure(m1, s1), GaussianMeasure(m2, s2));
        return py::make_tuple(map.shift, map.linear);
      },
      "mean1"_a, "cov1"_a, "mean2"_a, "cov2"_a, "Returns (shift, linear) with T(x) = shift + linear x.");

  m.def("sliced_wasserstein", &sliced_wasserstein, "x"_a, "y"_a, "p"_a = 2.0, "n_dir"_a = 100, "seed"_a = 0);

  m.def(
      "semidiscrete",
      [](const VectorXd& weights, const MatrixXd& sites, std::size_t grid_res, double tol, std::size_t max_iter) {
        const SemiDiscreteResult r = semidiscrete_solve(DiscreteMeasure(weights, sites), {grid_res, tol, max_iter});
        return py::dict("psi"_a = r.diagram.weights, "cell_masses"_a = r.cell_masses,
                        "max_mass_error"_a = r.max_mass_error, "iterations"_a = r.iterations,
                        "converged"_a = r.converged);
      },
      "weights"_a, "sites"_a, "grid_res"_a = 0, "tol"_a = 1e-3, "max_iter"_a = 10000);

  m.def(
      "vector_rank",
      [](const MatrixXd& x) {
        const RankAssignment r = vector_rank(x);
        MatrixXd ranks(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) ranks.row(i) = r.rank(static_cast<std::size_t>(i)).transpose();
        return py::make_tuple(r.sigma, ranks);
      },
      "x"_a, "Returns (sigma, ranks): Halton index and rank vector of each row.");

  m.def(
      "subgroup_bounds",
      [](double a, double b, const std::vector<double>& y0, const std::vector<double>& y1) {
        const Interval iv = kaji_subgroup_bounds(a, b, sample(y0), sample(y1));
        return py::make_tuple(iv.lower, iv.upper);
      },
      "a"_a, "b"_a, "y0"_a, "y1"_a);

  m.def(
      "winners_bounds",
      [](double a, double b, const std::vector<double>& y0, const std::vector<double>& y1) {
        return py::make_tuple(winners_lower_bound(a, b, sample(y0), sample(y1)),
                              winners_upper_bound(a, b, sample(y0), sample(y1)));
      },
      "a"_a, "b"_a, "y0"_a, "y1"_a);

  m.def(
      "binary_ot",
      [](const VectorXd& mu, const VectorXd& nu, const Eigen::MatrixXi& relation) {
        const BinaryOtResult r = binary_cost_ot(probability(mu), probability(nu), BinaryRelation(relation));
        return py::dict("value"_a = r.value, "witness"_a = r.witness, "dual_value"_a = r.dual_value);
      },
      "mu"_a, "nu"_a, "relation"_a);

  m.def(
      "dro_bound",
      [](const VectorXd& f, const MatrixXd& delta, const VectorXd& mu, double rho) {
        const DroBound r = dro_expectation_bound(f, delta, probability(mu), rho);
        return py::make_tuple(r.value, r.lambda);
      },
      "f"_a, "delta"_a, "mu"_a, "rho"_a);

  m.def(
      "match_equilibrium",
      [](const MatrixXd& phi, const VectorXd& mu, const VectorXd& nu, double tol, std::size_t max_iter) {
        const EquilibriumResult r = cs_equilibrium(phi, positive(mu), positive(nu), {tol, max_iter});
        return py::dict("flows"_a = r.table.flows(), "singles_x"_a = r.table.singles_x(),
                        "singles_y"_a = r.table.singles_y(), "a"_a = r.a, "b"_a = r.b,
                        "iterations"_a = r.iterations, "residual"_a = r.residual, "converged"_a = r.converged);
      },
      "phi"_a, "mu"_a, "nu"_a, "tol"_a = 1e-12, "max_iter"_a = 100000);

  m.def(
      "match_identify",
      [](const MatrixXd& flows, const VectorXd& singles_x, const VectorXd& singles_y) {
        return cs_identify(MatchingTable(flows, singles_x, singles_y));
      },
      "flows"_a, "singles_x"_a, "singles_y"_a);

  m.def(
      "match_fit",
      [](const MatrixXd& flows, const VectorXd& singles_x, const VectorXd& singles_y,
         const std::vector<MatrixXd>& basis, double tol, std::size_t max_iter) {
        const MatchingTable table(flows, singles_x, singles_y);
        const SurplusBasis b = basis_from(basis);
        const MomentMatchingResult r = moment_matching(table, b, tol, max_iter);
        return py::dict("lambda"_a = r.lambda, "a"_a = r.a, "b"_a = r.b, "moment_residual"_a = r.moment_residual,
                        "iterations"_a = r.iterations, "objective_history"_a = r.objective_history,
                        "loglik"_a = poisson_loglik({r.lambda, r.a, r.b}, table, b));
      },
      "flows"_a, "singles_x"_a, "singles_y"_a, "basis"_a, "tol"_a = 1e-10, "max_iter"_a = 10000);

  m.def(
      "poisson_loglik",
      [](const VectorXd& lambda, const VectorXd& a, const VectorXd& b, const MatrixXd& flows,
         const VectorXd& singles_x, const VectorXd& singles_y, const std::vector<MatrixXd>& basis) {
        return poisson_loglik({lambda, a, b}, MatchingTable(flows, singles_x, singles_y), basis_from(basis));
      },
      "lam"_a, "a"_a, "b"_a, "flows"_a, "singles_x"_a, "singles_y"_a, "basis"_a);

  m.def(
      "match_sista",
      [](const MatrixXd& plan, const std::vector<MatrixXd>& basis, std::optional<VectorXd> mu,
         std::optional<VectorXd> nu, double eps, double l1, std::optional<double> step, double tol,
         std::size_t max_iter) {
        const DiscreteMeasure a = positive(mu ? *mu : VectorXd(plan.rowwise().sum()));
        const DiscreteMeasure b = positive(nu ? *nu : VectorXd(plan.colwise().sum().transpose()));
        SistaOptions opt;
        opt.eps = eps;
        opt.l1 = l1;
        opt.step = step;
        opt.tol = tol;
        opt.max_iter = max_iter;
        const SistaResult r = sista(plan, a, b, basis_from(basis), opt);
        return py::dict("beta"_a = r.beta, "phi"_a = r.phi, "psi"_a = r.psi, "step"_a = r.step,
                        "iterations"_a = r.iterations, "converged"_a = r.converged,
                        "objective_history"_a = r.objective_history);
      },
      "plan"_a, "basis"_a, "mu"_a = py::none(), "nu"_a = py::none(), "eps"_a = 1.0, "l1"_a = 0.0,
      "step"_a = py::none(), "tol"_a = 1e-10, "max_iter"_a = 200000);
}
