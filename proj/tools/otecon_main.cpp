#include <CLI11.hpp>

#include "otecon/cli/run.hpp"
#include "otecon/version.hpp"

namespace {

struct Flags {
  std::string help;
  std::vector<std::string> inputs;
  bool eps = false, tol = false, p = false, rho = false, l1 = false, window = false;
  bool lam = false, step = false, n_dir = false, grid_res = false, seed = false, h = false;
  bool max_iter = false;
};

// Inputs and options each command accepts.
std::map<std::string, Flags> command_flags() {
  std::map<std::string, Flags> f;
  f["ot"] = {.help = "exact discrete OT by network simplex", .inputs = {"mu", "nu", "cost"}, .max_iter = true};
  f["sinkhorn"] = {.help = "entropic OT in the log domain", .inputs = {"mu", "nu", "cost"}, .eps = true, .tol = true, .max_iter = true};
  f["uot"] = {.help = "unbalanced entropic OT with KL marginal penalties", .inputs = {"mu", "nu", "cost"}, .eps = true, .tol = true, .lam = true, .max_iter = true};
  f["w1d"] = {.help = "Wasserstein distance between 1D samples", .inputs = {"x", "y"}, .p = true};
  f["gaussian-w2"] = {.help = "W2 distance and map between Gaussians", .inputs = {"g1", "g2"}};
  f["sliced"] = {.help = "sliced Wasserstein distance", .inputs = {"x", "y"}, .p = true, .n_dir = true, .seed = true};
  f["semidiscrete"] = {.help = "uniform-to-discrete OT on the unit cube", .inputs = {"nu"}, .tol = true, .grid_res = true, .max_iter = true};
  f["ranks"] = {.help = "vector ranks of a sample", .inputs = {"x"}};
  f["bounds-te"] = {.help = "sharp bounds on E h(y0, y1)", .inputs = {"y0", "y1"}, .h = true};
  f["bounds-subgroup"] = {.help = "bounds on the mean effect in a rank window", .inputs = {"y0", "y1"}, .window = true};
  f["bounds-winners"] = {.help = "bounds on the share of winners in a rank window", .inputs = {"y0", "y1"}, .window = true};
  f["binary-ot"] = {.help = "OT with a 0/1 cost and a witness", .inputs = {"mu", "nu", "relation"}};
  f["dro"] = {.help = "worst-case expectation over a Wasserstein ball", .inputs = {"f", "delta", "mu"}, .rho = true};
  f["match-identify"] = {.help = "surplus identified from a matching table", .inputs = {"table"}};
  f["match-equilibrium"] = {.help = "matching equilibrium for a given surplus", .inputs = {"phi", "mu", "nu"}, .tol = true, .max_iter = true};
  f["match-fit"] = {.help = "surplus parameters by moment matching", .inputs = {"table", "basis"}, .tol = true, .max_iter = true};
  f["match-sista"] = {.help = "sparse surplus parameters by SISTA", .inputs = {"plan", "basis", "mu", "nu"}, .eps = true, .tol = true, .l1 = true,
                      .step = true, .max_iter = true};
  return f;
}

template <typename T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target,
                   const std::string& help) {
  app->add_option_function<T>("--" + name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal transport solvers, bounds and matching estimators"};
  app.set_version_flag("--version", otecon::kVersion);
  app.require_subcommand(1);

  otecon::cli::RunConfig config;
  const auto flags = command_flags();
  for (const std::string& name : otecon::cli::command_names()) {
    CLI::App* sub = app.add_subcommand(name, flags.at(name).help);
    const Flags& f = flags.at(name);
    for (const std::string& input : f.inputs) {
      sub->add_option("--" + input, config.inputs[input], "input CSV");
    }
    if (f.eps) optional_flag(sub, "eps", config.eps, "regularization strength");
    if (f.tol) optional_flag(sub, "tol", config.tol, "convergence tolerance");
    if (f.p) optional_flag(sub, "p", config.p, "Wasserstein order");
    if (f.rho) optional_flag(sub, "rho", config.rho, "ball radius");
    if (f.l1) optional_flag(sub, "l1", config.l1, "l1 penalty");
    if (f.window) {
      optional_flag(sub, "a", config.a, "lower rank");
      optional_flag(sub, "b", config.b, "upper rank");
    }
    if (f.lam) {
      optional_flag(sub, "lam-mu", config.lam_mu, "penalty on the first marginal");
      optional_flag(sub, "lam-nu", config.lam_nu, "penalty on the second marginal");
    }
    if (f.step) optional_flag(sub, "step", config.step, "proximal step");
    if (f.n_dir) optional_flag(sub, "n-dir", config.n_dir, "number of directions");
    if (f.grid_res) optional_flag(sub, "grid-res", config.grid_res, "grid points per axis");
    if (f.max_iter) optional_flag(sub, "max-iter", config.max_iter, "iteration cap");
    if (f.seed) sub->add_option("--seed", config.seed, "direction seed (values depend on it)");
    if (f.h) {
      sub->add_option("--functional", config.h, "functional of (y0, y1)")
          ->check(CLI::IsMember({"diff", "product", "squared-diff", "abs-diff"}));
    }
    sub->add_option("--out", config.out, "output path (stdout when omitted)");
    sub->callback([&config, name] { config.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : otecon::cli::kExitInput;
  }
  return otecon::cli::run(config);
}
