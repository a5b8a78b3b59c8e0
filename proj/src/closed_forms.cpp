#include "otecon/closed_forms.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "otecon/errors.hpp"

namespace otecon {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform on (0, 1) from (seed, counter).
double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ (counter * 0xd1b54a32d192ed03ULL));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal number `index` of the stream, by Box-Muller on pairs.
double counter_normal(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t pair = index / 2;
  const double u1 = counter_uniform(seed, 2 * pair);
  const double u2 = counter_uniform(seed, 2 * pair + 1);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return index % 2 == 0 ? radius * std::cos(angle) : radius * std::sin(angle);
}

MatrixXd inverse_sqrt_pd(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const VectorXd& lambda = es.eigenvalues();
  const double top = lambda.maxCoeff();
  if (!(lambda.minCoeff() > 1e-12 * std::max(top, 0.0))) {
    throw NotInvertibleError("source covariance is singular");
  }
  const VectorXd inv_root = lambda.array().rsqrt();
  MatrixXd r = es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

void check_same_dimension(const GaussianMeasure& g1, const GaussianMeasure& g2) {
  if (g1.dimension() != g2.dimension()) {
    throw DomainError("Gaussian dimensions differ");
  }
}

}  // namespace

double ot_value_1d(const Sample1D& x, const Sample1D& y, const ScalarCost& cost,
                   bool submodular) {
  if (!submodular) {
    throw UnsupportedError("the quantile formula needs a submodular cost");
  }
  const std::uint64_t m = x.size();
  const std::uint64_t n = y.size();
  const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(n));
  // Breakpoints in units of 1/(m n): x steps at multiples of n, y at multiples of m.
  std::uint64_t i = 0;
  std::uint64_t j = 0;
  std::uint64_t prev = 0;
  double total = 0.0;
  while (i < m && j < n) {
    const std::uint64_t next = std::min((i + 1) * n, (j + 1) * m);
    total += static_cast<double>(next - prev) * scale * cost(x[i], y[j]);
    if ((i + 1) * n == next) ++i;
    if ((j + 1) * m == next) ++j;
    prev = next;
  }
  return total;
}

double wasserstein_1d(const Sample1D& x, const Sample1D& y, double p) {
  if (!(p >= 1.0)) throw DomainError("wasserstein_1d needs p >= 1");
  const double value = ot_value_1d(
      x, y, [p](double a, double b) { return std::pow(std::abs(a - b), p); });
  return std::pow(value, 1.0 / p);
}

AffineMap gaussian_ot_map(const GaussianMeasure& g1, const GaussianMeasure& g2) {
  check_same_dimension(g1, g2);
  const MatrixXd inv_root1 = inverse_sqrt_pd(g1.cov());
  const MatrixXd root1 = spd_sqrt(g1.cov());
  MatrixXd middle = root1 * g2.cov() * root1;
  middle = (0.5 * (middle + middle.transpose())).eval();
  MatrixXd a = inv_root1 * spd_sqrt(middle) * inv_root1;
  a = (0.5 * (a + a.transpose())).eval();
  return AffineMap{g2.mean() - a * g1.mean(), a};
}

double gaussian_w2(const GaussianMeasure& g1, const GaussianMeasure& g2) {
  check_same_dimension(g1, g2);
  const MatrixXd root1 = spd_sqrt(g1.cov());
  MatrixXd middle = root1 * g2.cov() * root1;
  middle = (0.5 * (middle + middle.transpose())).eval();
  const double bracket = (g1.cov() + g2.cov() - 2.0 * spd_sqrt(middle)).trace();
  const double squared = (g1.mean() - g2.mean()).squaredNorm() + std::max(bracket, 0.0);
  return std::sqrt(std::max(squared, 0.0));
}

MatrixXd sphere_directions(std::size_t count, Eigen::Index dim, std::uint64_t seed) {
  if (dim <= 0) throw DomainError("directions need a positive dimension");
  MatrixXd dirs(static_cast<Eigen::Index>(count), dim);
  for (Eigen::Index r = 0; r < dirs.rows(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      dirs(r, c) = counter_normal(seed, static_cast<std::uint64_t>(r * dim + c));
    }
    const double norm = dirs.row(r).norm();
    if (norm > 0.0) {
      dirs.row(r) /= norm;
    } else {
      dirs.row(r).setZero();
      dirs(r, 0) = 1.0;
    }
  }
  return dirs;
}

double sliced_wasserstein(const MatrixXd& x, const MatrixXd& y, double p,
                          std::size_t n_dir, std::uint64_t seed) {
  if (x.cols() == 0 || y.cols() == 0) throw DomainError("sliced_wasserstein needs d >= 1");
  if (x.cols() != y.cols()) throw DomainError("point clouds differ in dimension");
  if (x.rows() == 0 || y.rows() == 0) throw DomainError("empty point cloud");
  if (n_dir == 0) throw DomainError("sliced_wasserstein needs n_dir >= 1");
  if (!(p >= 1.0)) throw DomainError("sliced_wasserstein needs p >= 1");
  const MatrixXd dirs = sphere_directions(n_dir, x.cols(), seed);
  double total = 0.0;
  for (Eigen::Index r = 0; r < dirs.rows(); ++r) {
    const VectorXd px = x * dirs.row(r).transpose();
    const VectorXd py = y * dirs.row(r).transpose();
    const double w = wasserstein_1d(Sample1D({px.data(), px.data() + px.size()}),
                                    Sample1D({py.data(), py.data() + py.size()}), p);
    total += std::pow(w, p);
  }
  return std::pow(total / static_cast<double>(n_dir), 1.0 / p);
}

Sample1D barycenter_1d(const std::vector<Sample1D>& samples,
                       const std::vector<double>& weights) {
  if (samples.empty()) throw DomainError("barycenter needs at least one sample");
  if (weights.size() != samples.size()) {
    throw DomainError("one weight per sample required");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("barycenter weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kMassTolerance) throw DomainError("barycenter weights must sum to 1");
  const std::size_t n = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != n) {
      throw UnsupportedError("barycenter_1d needs samples of equal size");
    }
  }
  std::vector<double> atoms(n, 0.0);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) atoms[i] += weights[k] * samples[k][i];
  }
  return Sample1D(std::move(atoms));
}

}  // namespace otecon
