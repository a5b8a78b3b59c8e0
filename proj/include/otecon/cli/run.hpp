#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace otecon::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNoConvergence = 3;

const std::vector<std::string>& command_names();

struct RunConfig {
  std::string command;
  /// Input flag name (without dashes) to path.
  std::map<std::string, std::string> inputs;
  std::optional<double> eps;
  std::optional<double> tol;
  std::optional<double> p;
  std::optional<double> rho;
  std::optional<double> l1;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> lam_mu;
  std::optional<double> lam_nu;
  std::optional<double> step;
  std::optional<std::size_t> n_dir;
  std::optional<std::size_t> grid_res;
  std::optional<std::size_t> max_iter;
  std::uint64_t seed = 0;
  std::string h;     ///< bounds-te functional (--functional)
  std::string out;   ///< empty writes to stdout
};

/// Runs one command and writes its JSON document. Errors go to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Same, writing to config.out (or stdout) and stderr.
int run(const RunConfig& config);

}  // namespace otecon::cli
