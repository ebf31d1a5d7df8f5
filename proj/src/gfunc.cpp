#include "gsde/gfunc.hpp"

#include "gsde/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gsde {

namespace {

void validate(const SymMatrix& a, const VolBounds& bounds) {
  if (a.dim() != bounds.m)
    throw std::invalid_argument("G: matrix dimension " + std::to_string(a.dim()) +
                                " does not match m = " + std::to_string(bounds.m));
  if (!a.all_finite()) throw std::invalid_argument("G: matrix has non-finite entries");
}

}  // namespace

double g_eval(const SymMatrix& a, const VolBounds& bounds) {
  validate(a, bounds);
  if (a.dim() == 1) {
    const double x = a(0, 0);
    if (std::abs(x) < kEigenZero) return 0.0;
    return 0.5 * (x > 0.0 ? bounds.var_hi() * x : bounds.var_lo() * x);
  }
  const Eigen::VectorXd lambda = a.eigenvalues();
  double positive = 0.0;
  double negative = 0.0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    const double l = lambda(k);
    if (std::abs(l) < kEigenZero) continue;
    if (l > 0.0)
      positive += l;
    else
      negative += -l;
  }
  return 0.5 * (bounds.var_hi() * positive - bounds.var_lo() * negative);
}

SymMatrix g_maximizer(const SymMatrix& a, const VolBounds& bounds) {
  validate(a, bounds);
  const Eigensystem es = a.eigensystem();
  Eigen::VectorXd g(es.values.size());
  for (Eigen::Index k = 0; k < g.size(); ++k)
    g(k) = es.values(k) > -kEigenZero ? bounds.var_hi() : bounds.var_lo();
  return SymMatrix(Eigen::MatrixXd(es.vectors * g.asDiagonal() * es.vectors.transpose()));
}

SymMatrix random_feasible_gamma(const VolBounds& bounds, CounterRng& rng) {
  const auto m = static_cast<Eigen::Index>(bounds.m);
  Eigen::VectorXd g(m);
  for (Eigen::Index k = 0; k < m; ++k) g(k) = rng.uniform(bounds.var_lo(), bounds.var_hi());
  if (m == 1) return SymMatrix(Eigen::MatrixXd(g.asDiagonal()));
  // Haar orthogonal factor: QR of a Gaussian matrix with R's diagonal made positive.
  Eigen::MatrixXd z(m, m);
  for (Eigen::Index c = 0; c < m; ++c)
    for (Eigen::Index r = 0; r < m; ++r) z(r, c) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < m; ++c)
    if (rr(c, c) < 0.0) q.col(c) = -q.col(c);
  return SymMatrix(Eigen::MatrixXd(q * g.asDiagonal() * q.transpose()));
}

std::vector<SymMatrix> sample_feasible_gammas(const VolBounds& bounds, std::size_t n,
                                              std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::vector<SymMatrix> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(random_feasible_gamma(bounds, rng));
  return out;
}

double g_pairing_max(const SymMatrix& a, std::span<const SymMatrix> gammas) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& g : gammas) best = std::max(best, 0.5 * matrix_pair(g, a));
  return best;
}

double g_oracle_lower_bound(const SymMatrix& a, const VolBounds& bounds, std::size_t n_samples,
                            std::uint64_t seed) {
  validate(a, bounds);
  if (n_samples < 1) throw std::invalid_argument("g_oracle_lower_bound: n_samples must be >= 1");
  CounterRng rng(seed, 0);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n_samples; ++k)
    best = std::max(best, 0.5 * matrix_pair(random_feasible_gamma(bounds, rng), a));
  return best;
}

GReport g_report(const SymMatrix& a, const VolBounds& bounds, std::size_t n_samples,
                 std::uint64_t seed) {
  const double value = g_eval(a, bounds);
  return GReport{value, g_maximizer(a, bounds),
                 value - g_oracle_lower_bound(a, bounds, n_samples, seed)};
}

GPropertyReport check_g_properties(const SymMatrix& a, const SymMatrix& b, double lambda,
                                   const VolBounds& bounds, double tol) {
  if (a.dim() != b.dim()) throw std::invalid_argument("check_g_properties: dimension mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("check_g_properties: lambda must be >= 0");
  const double ga = g_eval(a, bounds);
  const double gb = g_eval(b, bounds);
  const SymMatrix diff = a - b;

  GPropertyReport r;
  r.homogeneity = std::abs(g_eval(lambda * a, bounds) - lambda * ga) <= tol;
  r.subadditivity = g_eval(a + b, bounds) <= ga + gb + tol;
  r.difference_bound = ga - gb <= g_eval(diff, bounds) + tol;
  r.growth_bound = std::abs(ga) <= 0.5 * a.frobenius_norm() * std::sqrt(static_cast<double>(a.dim())) *
                                           bounds.var_hi() +
                                       tol;
  r.ordered = diff.eigenvalues().minCoeff() >= -kEigenZero;
  r.trace_lower_bound = !r.ordered || ga - gb >= 0.5 * bounds.var_lo() * diff.trace() - tol;
  return r;
}

}  // namespace gsde
