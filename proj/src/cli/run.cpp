#include "otecon/cli/run.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "otecon/bounds.hpp"
#include "otecon/cli/io.hpp"
#include "otecon/closed_forms.hpp"
#include "otecon/discrete_ot.hpp"
#include "otecon/entropic.hpp"
#include "otecon/errors.hpp"
#include "otecon/matching.hpp"
#include "otecon/semidiscrete.hpp"
#include "otecon/version.hpp"

namespace otecon::cli {

namespace {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json to_json(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(VectorXd(m.row(i).transpose())));
  return out;
}

// Accumulates the document while a command runs.
struct Output {
  Json options = Json::object();
  Json result = Json::object();
  Json diagnostics = Json::object();
  bool converged = true;
};

class Runner {
 public:
  explicit Runner(const RunConfig& config) : c_(config) {}

  Output run() {
    static const std::map<std::string, void (Runner::*)()> table = {
        {"ot", &Runner::ot},
        {"sinkhorn", &Runner::sinkhorn_cmd},
        {"uot", &Runner::uot},
        {"w1d", &Runner::w1d},
        {"gaussian-w2", &Runner::gaussian},
        {"sliced", &Runner::sliced},
        {"semidiscrete", &Runner::semidiscrete},
        {"ranks", &Runner::ranks},
        {"bounds-te", &Runner::bounds_te},
        {"bounds-subgroup", &Runner::bounds_subgroup},
        {"bounds-winners", &Runner::bounds_winners},
        {"binary-ot", &Runner::binary_ot},
        {"dro", &Runner::dro},
        {"match-identify", &Runner::match_identify},
        {"match-equilibrium", &Runner::match_equilibrium},
        {"match-fit", &Runner::match_fit},
        {"match-sista", &Runner::match_sista},
    };
    const auto it = table.find(c_.command);
    if (it == table.end()) throw ConfigError("unknown command '" + c_.command + "'");
    (this->*(it->second))();
    return std::move(out_);
  }

 private:
  const std::string& input(const std::string& name) const {
    const auto it = c_.inputs.find(name);
    if (it == c_.inputs.end() || it->second.empty()) {
      throw ConfigError("command '" + c_.command + "' needs --" + name);
    }
    return it->second;
  }

  bool has_input(const std::string& name) const {
    const auto it = c_.inputs.find(name);
    return it != c_.inputs.end() && !it->second.empty();
  }

  double number(const char* name, const std::optional<double>& value, std::optional<double> fallback,
                const std::function<bool(double)>& valid, const char* range) {
    if (!value && !fallback) throw ConfigError("command '" + c_.command + "' needs --" + name);
    const double v = value ? *value : *fallback;
    if (!std::isfinite(v) || !valid(v)) {
      throw ConfigError(std::string("--") + name + " must be " + range);
    }
    out_.options[name] = v;
    return v;
  }

  double positive(const char* name, const std::optional<double>& value, std::optional<double> fallback) {
    return number(name, value, fallback, [](double v) { return v > 0.0; }, "positive");
  }

  double unit(const char* name, const std::optional<double>& value) {
    return number(name, value, std::nullopt, [](double v) { return v >= 0.0 && v <= 1.0; },
                  "in [0, 1]");
  }

  std::size_t max_iter(std::size_t fallback) {
    std::size_t v = c_.max_iter.value_or(fallback);
    if (const char* env = std::getenv("OTECON_MAX_ITER"); env && *env) {
      char* end = nullptr;
      const unsigned long long parsed = std::strtoull(env, &end, 10);
      if (*end != '\0' || parsed == 0) throw ConfigError("OTECON_MAX_ITER must be a positive integer");
      v = static_cast<std::size_t>(parsed);
    }
    out_.options["max_iter"] = v;
    return v;
  }

  CostMatrix cost_for(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (has_input("cost")) return CostMatrix(read_matrix(input("cost")));
    if (mu.has_points() && nu.has_points()) {
      out_.options["cost"] = "squared-euclidean";
      return CostMatrix::squared_euclidean(mu.points(), nu.points());
    }
    throw ConfigError("command '" + c_.command + "' needs --cost or measures with points");
  }

  void entropic_report(const EntropicSolution& sol) {
    out_.result["plan"] = to_json(sol.plan);
    out_.result["phi"] = to_json(sol.phi);
    out_.result["psi"] = to_json(sol.psi);
    out_.diagnostics["iterations"] = sol.iterations;
    out_.diagnostics["marginal_error"] = sol.marginal_error;
    out_.diagnostics["residual"] = sol.residual;
    out_.diagnostics["converged"] = sol.converged;
    out_.converged = sol.converged;
  }

  void ot() {
    const DiscreteMeasure mu = read_measure(input("mu"));
    const DiscreteMeasure nu = read_measure(input("nu"));
    const CostMatrix cost = cost_for(mu, nu);
    NetworkSimplexOptions options;
    if (c_.max_iter || std::getenv("OTECON_MAX_ITER")) options.max_iter = max_iter(0);
    const DiscreteOtSolution sol = solve_discrete_ot(mu, nu, cost, options);
    out_.result["value"] = sol.value;
    out_.result["dual_value"] = sol.dual_value;
    out_.result["plan"] = to_json(sol.plan.mass);
    Json basis = Json::array();
    for (const Edge& e : sol.plan.basis) basis.push_back(Json::array({e.row, e.col}));
    out_.result["basis"] = std::move(basis);
    out_.result["phi"] = to_json(sol.potentials.phi);
    out_.result["psi"] = to_json(sol.potentials.psi);
    out_.diagnostics["pivots"] = sol.pivots;
    out_.diagnostics["duality_gap"] = std::abs(sol.value - sol.dual_value);
    out_.diagnostics["certified"] = verify_optimality(sol.plan, sol.potentials, cost);
    out_.diagnostics["converged"] = true;
  }

  void sinkhorn_cmd() {
    const DiscreteMeasure mu = read_measure(input("mu"));
    const DiscreteMeasure nu = read_measure(input("nu"));
    const CostMatrix cost = cost_for(mu, nu);
    const double eps = positive("eps", c_.eps, 0.1);
    EntropicOptions options;
    options.tol = positive("tol", c_.tol, options.tol);
    options.max_iter = max_iter(options.max_iter);
    const EntropicSolution sol = sinkhorn(mu, nu, cost, eps, options);
    const EntropicValue value = eot_value(sol, mu, nu, cost);
    out_.result["transport_cost"] = value.transport_cost;
    out_.result["primal_objective"] = value.primal_objective;
    entropic_report(sol);
  }

  void uot() {
    const DiscreteMeasure mu = read_measure(input("mu"), false);
    const DiscreteMeasure nu = read_measure(input("nu"), false);
    const CostMatrix cost = cost_for(mu, nu);
    const double eps = positive("eps", c_.eps, 0.1);
    const double lam_mu = positive("lam-mu", c_.lam_mu, 1.0);
    const double lam_nu = positive("lam-nu", c_.lam_nu, 1.0);
    EntropicOptions options;
    options.tol = positive("tol", c_.tol, options.tol);
    options.max_iter = max_iter(options.max_iter);
    const EntropicSolution sol = unbalanced_sinkhorn(mu, nu, cost, eps, lam_mu, lam_nu, options);
    out_.result["objective"] = uot_objective(sol.plan, mu, nu, cost, eps, lam_mu, lam_nu);
    out_.result["mass"] = sol.plan.sum();
    entropic_report(sol);
  }

  void w1d() {
    const Sample1D x = read_sample(input("x"));
    const Sample1D y = read_sample(input("y"));
    const double p = number("p", c_.p, 1.0, [](double v) { return v >= 1.0; }, "at least 1");
    out_.result["value"] = wasserstein_1d(x, y, p);
  }

  void gaussian() {
    const GaussianMeasure g1 = read_gaussian(input("g1"));
    const GaussianMeasure g2 = read_gaussian(input("g2"));
    out_.result["value"] = gaussian_w2(g1, g2);
    try {
      const AffineMap map = gaussian_ot_map(g1, g2);
      out_.result["map"] = {{"shift", to_json(map.shift)}, {"linear", to_json(map.linear)}};
    } catch (const NotInvertibleError&) {
      out_.result["map"] = nullptr;
    }
  }

  void sliced() {
    const MatrixXd x = read_matrix(input("x"));
    const MatrixXd y = read_matrix(input("y"));
    const double p = number("p", c_.p, 2.0, [](double v) { return v >= 1.0; }, "at least 1");
    const std::size_t n_dir = c_.n_dir.value_or(100);
    if (n_dir == 0) throw ConfigError("--n-dir must be positive");
    out_.options["n_dir"] = n_dir;
    out_.options["seed"] = c_.seed;
    out_.result["value"] = sliced_wasserstein(x, y, p, n_dir, c_.seed);
  }

  void semidiscrete() {
    const DiscreteMeasure nu = read_measure(input("nu"));
    SemiDiscreteOptions options;
    options.grid_res = c_.grid_res.value_or(0);
    out_.options["grid_res"] = options.grid_res;
    options.tol = positive("tol", c_.tol, options.tol);
    options.max_iter = max_iter(options.max_iter);
    const SemiDiscreteResult r = semidiscrete_solve(nu, options);
    out_.result["sites"] = to_json(r.diagram.sites);
    out_.result["weights"] = to_json(r.diagram.weights);
    out_.result["target_masses"] = to_json(r.diagram.target_masses);
    out_.result["cell_masses"] = to_json(r.cell_masses);
    out_.diagnostics["iterations"] = r.iterations;
    out_.diagnostics["max_mass_error"] = r.max_mass_error;
    out_.diagnostics["converged"] = r.converged;
    out_.converged = r.converged;
  }

  void ranks() {
    const MatrixXd x = read_matrix(input("x"));
    const RankAssignment r = vector_rank(x);
    Json sigma = Json::array();
    for (Eigen::Index s : r.sigma) sigma.push_back(s);
    out_.result["sigma"] = std::move(sigma);
    MatrixXd assigned(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) assigned.row(i) = r.rank(static_cast<std::size_t>(i)).transpose();
    out_.result["ranks"] = to_json(assigned);
    out_.diagnostics["perturbed"] = r.perturbed;
  }

  void bounds_te() {
    const Sample1D y0 = read_sample(input("y0"));
    const Sample1D y1 = read_sample(input("y1"));
    const std::string h = c_.h.empty() ? "diff" : c_.h;
    std::function<double(double, double)> fn;
    Modularity modularity = Modularity::submodular;
    if (h == "diff") {
      fn = [](double u, double v) { return v - u; };
    } else if (h == "product") {
      fn = [](double u, double v) { return u * v; };
      modularity = Modularity::supermodular;
    } else if (h == "squared-diff") {
      fn = [](double u, double v) { return (v - u) * (v - u); };
    } else if (h == "abs-diff") {
      fn = [](double u, double v) { return std::abs(v - u); };
    } else {
      throw ConfigError("--functional must be one of diff, product, squared-diff, abs-diff");
    }
    out_.options["functional"] = h;
    const Interval iv = rearrangement_bounds(fn, y0, y1, modularity);
    out_.result["lower"] = iv.lower;
    out_.result["upper"] = iv.upper;
    out_.result["modularity"] = modularity == Modularity::submodular ? "submodular" : "supermodular";
  }

  void window() {
    const double a = unit("a", c_.a);
    const double b = unit("b", c_.b);
    if (!(a < b)) throw ConfigError("--a must be smaller than --b");
  }

  void bounds_subgroup() {
    window();
    const Interval iv = kaji_subgroup_bounds(*c_.a, *c_.b, read_sample(input("y0")), read_sample(input("y1")));
    out_.result["lower"] = iv.lower;
    out_.result["upper"] = iv.upper;
  }

  void bounds_winners() {
    window();
    const Sample1D y0 = read_sample(input("y0"));
    const Sample1D y1 = read_sample(input("y1"));
    out_.result["lower"] = winners_lower_bound(*c_.a, *c_.b, y0, y1);
    out_.result["upper"] = winners_upper_bound(*c_.a, *c_.b, y0, y1);
  }

  void binary_ot() {
    const DiscreteMeasure mu = read_measure(input("mu"));
    const DiscreteMeasure nu = read_measure(input("nu"));
    const BinaryRelation rel = read_relation(input("relation"));
    const BinaryOtResult r = binary_cost_ot(mu, nu, rel, WitnessRequest::if_small);
    out_.result["value"] = r.value;
    if (r.witness) {
      Json w = Json::array();
      for (std::size_t i : *r.witness) w.push_back(i + 1);
      out_.result["witness"] = std::move(w);
      out_.result["dual_value"] = *r.dual_value;
      out_.diagnostics["duality_gap"] = std::abs(r.value - *r.dual_value);
    } else {
      out_.result["witness"] = nullptr;
      out_.result["dual_value"] = nullptr;
    }
  }

  void dro() {
    const VectorXd f = read_vector(input("f"));
    const MatrixXd delta = read_matrix(input("delta"));
    const DiscreteMeasure mu = read_measure(input("mu"));
    const double rho = number("rho", c_.rho, std::nullopt, [](double v) { return v >= 0.0; },
                              "nonnegative");
    const DroBound r = dro_expectation_bound(f, delta, mu, rho);
    out_.result["value"] = r.value;
    out_.result["lambda"] = r.lambda;
  }

  void match_identify() {
    const MatchingTable table = read_matching_table(input("table"));
    out_.result["Phi"] = to_json(cs_identify(table));
  }

  void match_equilibrium() {
    const MatrixXd phi = read_matrix(input("phi"));
    const DiscreteMeasure mu = read_measure(input("mu"), false);
    const DiscreteMeasure nu = read_measure(input("nu"), false);
    EquilibriumOptions options;
    options.tol = positive("tol", c_.tol, options.tol);
    options.max_iter = max_iter(options.max_iter);
    const EquilibriumResult r = cs_equilibrium(phi, mu, nu, options);
    out_.result["flows"] = to_json(r.table.flows());
    out_.result["singles_x"] = to_json(r.table.singles_x());
    out_.result["singles_y"] = to_json(r.table.singles_y());
    out_.result["a"] = to_json(r.a);
    out_.result["b"] = to_json(r.b);
    out_.diagnostics["iterations"] = r.iterations;
    out_.diagnostics["residual"] = r.residual;
    out_.diagnostics["converged"] = r.converged;
    out_.converged = r.converged;
  }

  void match_fit() {
    const MatchingTable table = read_matching_table(input("table"));
    const SurplusBasis basis = read_basis(input("basis"), table.flows().rows(), table.flows().cols());
    const double tol = positive("tol", c_.tol, 1e-10);
    const MomentMatchingResult r = moment_matching(table, basis, tol, max_iter(10000));
    out_.result["lambda"] = to_json(r.lambda);
    out_.result["a"] = to_json(r.a);
    out_.result["b"] = to_json(r.b);
    out_.result["loglik"] = poisson_loglik({r.lambda, r.a, r.b}, table, basis);
    out_.diagnostics["iterations"] = r.iterations;
    out_.diagnostics["moment_residual"] = to_json(r.moment_residual);
    out_.diagnostics["converged"] = true;
  }

  void match_sista() {
    const MatrixXd plan = read_matrix(input("plan"));
    const SurplusBasis basis = read_basis(input("basis"), plan.rows(), plan.cols());
    const DiscreteMeasure mu = has_input("mu") ? read_measure(input("mu"), false)
                                               : DiscreteMeasure(plan.rowwise().sum(), false);
    const DiscreteMeasure nu = has_input("nu") ? read_measure(input("nu"), false)
                                               : DiscreteMeasure(plan.colwise().sum().transpose(), false);
    SistaOptions options;
    options.eps = positive("eps", c_.eps, options.eps);
    options.l1 = number("l1", c_.l1, 0.0, [](double v) { return v >= 0.0; }, "nonnegative");
    if (c_.step) options.step = positive("step", c_.step, std::nullopt);
    options.tol = positive("tol", c_.tol, options.tol);
    options.max_iter = max_iter(options.max_iter);
    const SistaResult r = sista(plan, mu, nu, basis, options);
    out_.result["beta"] = to_json(r.beta);
    out_.result["phi"] = to_json(r.phi);
    out_.result["psi"] = to_json(r.psi);
    out_.diagnostics["step"] = r.step;
    out_.diagnostics["iterations"] = r.iterations;
    out_.diagnostics["marginal_error"] = r.marginal_error;
    out_.diagnostics["objective"] = r.objective_history.empty() ? 0.0 : r.objective_history.back();
    out_.diagnostics["converged"] = r.converged;
    out_.converged = r.converged;
  }

  const RunConfig& c_;
  Output out_;
};

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "ot",        "sinkhorn",        "uot",           "w1d",          "gaussian-w2",
      "sliced",    "semidiscrete",    "ranks",         "bounds-te",    "bounds-subgroup",
      "bounds-winners", "binary-ot",  "dro",           "match-identify", "match-equilibrium",
      "match-fit", "match-sista"};
  return names;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Output result;
  try {
    result = Runner(config).run();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const CsvError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const SolverStallError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const StepSizeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  Json doc;
  doc["command"] = config.command;
  doc["version"] = kVersion;
  Json inputs = Json::object();
  for (const auto& [name, path] : config.inputs) {
    if (!path.empty()) inputs[name] = path;
  }
  doc["config"] = {{"inputs", std::move(inputs)}, {"options", std::move(result.options)}};
  doc["result"] = std::move(result.result);
  doc["diagnostics"] = std::move(result.diagnostics);
  out << doc.dump(2) << "\n";
  return result.converged ? kExitOk : kExitNoConvergence;
}

int run(const RunConfig& config) {
  if (config.out.empty()) return run(config, std::cout, std::cerr);
  std::ostringstream buffer;
  const int code = run(config, buffer, std::cerr);
  if (!buffer.str().empty()) {
    std::ofstream file(config.out, std::ios::binary);
    if (!file) {
      std::cerr << "error: cannot write " << config.out << "\n";
      return kExitInput;
    }
    file << buffer.str();
  }
  return code;
}

}  // namespace otecon::cli
