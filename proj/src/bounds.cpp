#include "otecon/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "otecon/discrete_ot.hpp"
#include "otecon/errors.hpp"

namespace otecon {

namespace {

void check_window(double a, double b) {
  if (!(a >= 0.0) || !(b <= 1.0) || !(a < b)) {
    throw DomainError("rank window needs 0 <= a < b <= 1");
  }
}

// Y0 atoms split at the window edges: each order statistic covers ranks
// ((k-1)/n, k/n]; the part inside (a, b) and the part outside become
// separate atoms.
struct RankPieces {
  std::vector<double> mass;
  std::vector<double> value;
  std::vector<bool> inside;
};

RankPieces rank_pieces(double a, double b, const Sample1D& y0) {
  RankPieces out;
  const auto n = static_cast<double>(y0.size());
  for (std::size_t k = 0; k < y0.size(); ++k) {
    const double lo = static_cast<double>(k) / n;
    const double hi = static_cast<double>(k + 1) / n;
    const double in = std::max(0.0, std::min(hi, b) - std::max(lo, a));
    const double outside = (hi - lo) - in;
    if (in > 0.0) {
      out.mass.push_back(in);
      out.value.push_back(y0[k]);
      out.inside.push_back(true);
    }
    if (outside > 1e-15) {
      out.mass.push_back(outside);
      out.value.push_back(y0[k]);
      out.inside.push_back(false);
    }
  }
  return out;
}

}  // namespace

BinaryRelation::BinaryRelation(Eigen::MatrixXi gamma) : gamma_(std::move(gamma)) {
  if ((gamma_.array() != 0 && gamma_.array() != 1).any()) {
    throw DomainError("binary relation entries must be 0 or 1");
  }
}

Interval rearrangement_bounds(const std::function<double(double, double)>& h,
                              const Sample1D& y0, const Sample1D& y1,
                              Modularity modularity) {
  const std::size_t n = y0.size();
  if (y1.size() != n) throw UnsupportedError("rearrangement bounds need equal sample sizes");
  double comonotone = 0.0;
  double antitone = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    comonotone += h(y0[i], y1[i]);
    antitone += h(y0[i], y1[n - 1 - i]);
  }
  comonotone /= static_cast<double>(n);
  antitone /= static_cast<double>(n);
  if (modularity == Modularity::submodular) return {comonotone, antitone};
  return {antitone, comonotone};
}

Interval kaji_subgroup_bounds(double a, double b, const Sample1D& y0, const Sample1D& y1) {
  check_window(a, b);
  const double width = b - a;
  const double base = quantile_integral(y0, a, b);
  // Substituting s = u - a and s = 1 - u + a turns both integrals of Q1 into
  // integrals over a window of width b - a.
  const double low = quantile_integral(y1, 0.0, width);
  const double high = quantile_integral(y1, 1.0 - width, 1.0);
  return {(low - base) / width, (high - base) / width};
}

double winners_lower_bound(double a, double b, const Sample1D& y0, const Sample1D& y1) {
  check_window(a, b);
  const auto n = static_cast<double>(y0.size());
  // F1(Q0(.)) is constant on ((k-1)/n, k/n], so the supremum is attained at
  // a, b, or a right endpoint k/n inside the window.
  auto objective = [&](double abar) {
    const double f1q0 = abar > 0.0 ? empirical_cdf(y1, empirical_quantile(y0, abar)) : 0.0;
    return abar - a - f1q0;
  };
  double best = std::max(objective(a), objective(b));
  for (std::size_t k = 1; k <= y0.size(); ++k) {
    const double abar = static_cast<double>(k) / n;
    if (abar > a && abar < b) best = std::max(best, objective(abar));
  }
  return std::clamp(best / (b - a), 0.0, 1.0);
}

double winners_upper_bound(double a, double b, const Sample1D& y0, const Sample1D& y1) {
  check_window(a, b);
  const RankPieces pieces = rank_pieces(a, b, y0);
  const auto m = static_cast<Eigen::Index>(pieces.mass.size());
  const auto n1 = static_cast<Eigen::Index>(y1.size());
  Eigen::MatrixXi gamma = Eigen::MatrixXi::Zero(m, n1);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!pieces.inside[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < n1; ++j) {
      gamma(i, j) = y1[static_cast<std::size_t>(j)] <= pieces.value[static_cast<std::size_t>(i)] ? 1 : 0;
    }
  }
  const DiscreteMeasure mu(Eigen::Map<const VectorXd>(pieces.mass.data(), m));
  const DiscreteMeasure nu = DiscreteMeasure::uniform(y1.size());
  const double losers = binary_cost_ot(mu, nu, BinaryRelation(gamma), WitnessRequest::never).value;
  return std::clamp((b - a - losers) / (b - a), 0.0, 1.0);
}

double binary_dual_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const BinaryRelation& rel, const std::vector<std::size_t>& subset) {
  std::vector<bool> hit(static_cast<std::size_t>(rel.cols()), false);
  double value = 0.0;
  for (std::size_t i : subset) {
    value += mu[i];
    for (Eigen::Index j = 0; j < rel.cols(); ++j) {
      if (!rel(static_cast<Eigen::Index>(i), j)) hit[static_cast<std::size_t>(j)] = true;
    }
  }
  for (std::size_t j = 0; j < hit.size(); ++j) {
    if (hit[j]) value -= nu[j];
  }
  return value;
}

BinaryOtResult binary_cost_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const BinaryRelation& rel, WitnessRequest witness) {
  const auto m = static_cast<Eigen::Index>(mu.size());
  const auto n = static_cast<Eigen::Index>(nu.size());
  if (rel.rows() != m || rel.cols() != n) throw DomainError("relation shape does not match marginals");
  if (witness == WitnessRequest::always && mu.size() > kMaxWitnessRows) {
    throw ResourceError("subset enumeration limited to 20 rows");
  }
  BinaryOtResult out;
  out.value = solve_discrete_ot(mu, nu, CostMatrix(rel.matrix().cast<double>())).value;
  if (witness == WitnessRequest::never || mu.size() > kMaxWitnessRows) return out;

  // zero_cols[i]: columns j with (i, j) outside the relation, as bit words.
  const std::size_t words = (static_cast<std::size_t>(n) + 63) / 64;
  std::vector<std::vector<std::uint64_t>> zero_cols(
      static_cast<std::size_t>(m), std::vector<std::uint64_t>(words, 0));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!rel(i, j)) zero_cols[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) / 64] |=
          std::uint64_t{1} << (j % 64);
    }
  }
  double best = 0.0;  // empty set
  std::uint64_t best_mask = 0;
  std::vector<std::uint64_t> image(words);
  const std::uint64_t subsets = std::uint64_t{1} << m;
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    std::fill(image.begin(), image.end(), 0);
    double value = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!(mask >> i & 1U)) continue;
      value += mu[static_cast<std::size_t>(i)];
      for (std::size_t w = 0; w < words; ++w) image[w] |= zero_cols[static_cast<std::size_t>(i)][w];
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (image[static_cast<std::size_t>(j) / 64] >> (j % 64) & 1U) value -= nu[static_cast<std::size_t>(j)];
    }
    if (value > best + 1e-15) {
      best = value;
      best_mask = mask;
    }
  }
  std::vector<std::size_t> set;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (best_mask >> i & 1U) set.push_back(static_cast<std::size_t>(i));
  }
  out.witness = std::move(set);
  out.dual_value = best;
  return out;
}

DroBound dro_expectation_bound(const VectorXd& f, const MatrixXd& delta,
                               const DiscreteMeasure& mu, double rho) {
  const auto k = f.size();
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("rho must be nonnegative");
  if (k == 0 || delta.rows() != k || delta.cols() != k ||
      static_cast<Eigen::Index>(mu.size()) != k) {
    throw DomainError("f, delta and mu must share one support");
  }
  if (!f.allFinite() || !delta.allFinite()) throw DomainError("f and delta must be finite");
  double min_positive = std::numeric_limits<double>::infinity();
  for (Eigen::Index y = 0; y < k; ++y) {
    if (delta(y, y) != 0.0) throw DomainError("delta must vanish on the diagonal");
    for (Eigen::Index t = 0; t < k; ++t) {
      if (delta(y, t) < 0.0) throw DomainError("delta must be nonnegative");
      if (delta(y, t) > 0.0) min_positive = std::min(min_positive, delta(y, t));
    }
  }
  auto dual = [&](double lambda) {
    double total = lambda * rho;
    for (Eigen::Index t = 0; t < k; ++t) {
      double sup = -std::numeric_limits<double>::infinity();
      for (Eigen::Index y = 0; y < k; ++y) sup = std::max(sup, f[y] - lambda * delta(y, t));
      total += mu.weights()[t] * sup;
    }
    return total;
  };
  // Beyond lambda_max every inner sup picks y = ytilde, so the dual is
  // increasing there.
  const double lambda_max =
      std::isfinite(min_positive) ? (f.maxCoeff() - f.minCoeff()) / min_positive : 0.0;

  double lo = 0.0;
  double hi = lambda_max;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = dual(x1);
  double f2 = dual(x2);
  while (hi - lo > 1e-9 * std::max(1.0, lambda_max)) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = dual(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = dual(x2);
    }
  }
  DroBound out{dual(0.5 * (lo + hi)), 0.5 * (lo + hi)};
  for (double candidate : {0.0, lambda_max}) {
    const double v = dual(candidate);
    if (v < out.value) out = {v, candidate};
  }
  return out;
}

}  // namespace otecon
