#pragma once

// Independent reference computations for the unit and acceptance tests.
// Nothing here calls into the library under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t n) { return Mat(n, std::vector<double>(n, 0.0)); }

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> jacobi_eigenvalues(Mat a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t k = 0; k < n; ++k) ev[k] = a[k][k];
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// G(A) = 1/2 (var_hi tr A^+ - var_lo tr A^-) from Jacobi eigenvalues.
inline double g_closed_form(const Mat& a, double var_lo, double var_hi) {
  double v = 0.0;
  for (double l : jacobi_eigenvalues(a)) v += l >= 0 ? var_hi * l : var_lo * l;
  return 0.5 * v;
}

/// Brute-force 2x2 maximization of <gamma, A>/2 over gamma = R diag(a, b) R^T
/// with a, b on a grid in [var_lo, var_hi] and the rotation angle on a grid.
inline double g_brute_force_2x2(const Mat& a, double var_lo, double var_hi, int n_angle, int n_eig) {
  double best = -1e300;
  const double pi = std::acos(-1.0);
  for (int ia = 0; ia <= n_angle; ++ia) {
    const double th = pi * ia / n_angle;
    const double c = std::cos(th), s = std::sin(th);
    for (int i = 0; i <= n_eig; ++i) {
      const double e1 = var_lo + (var_hi - var_lo) * i / n_eig;
      for (int j = 0; j <= n_eig; ++j) {
        const double e2 = var_lo + (var_hi - var_lo) * j / n_eig;
        const double g00 = c * c * e1 + s * s * e2;
        const double g11 = s * s * e1 + c * c * e2;
        const double g01 = c * s * (e1 - e2);
        const double pair = g00 * a[0][0] + g11 * a[1][1] + 2.0 * g01 * a[0][1];
        best = std::max(best, 0.5 * pair);
      }
    }
  }
  return best;
}

/// psi_n'' straight from its definition: a tent on [0, 1/n] peaking at 1/(2n).
inline double psi_second_def(int n, double s) {
  const double nn = n;
  if (s <= 0.0 || s >= 1.0 / nn) return 0.0;
  if (s <= 0.5 / nn) return 4.0 * nn * nn * s;
  return 4.0 * nn * nn * (1.0 / nn - s);
}

/// psi_n'(s) and psi_n(s) by composite Simpson quadrature of the definition,
/// splitting at the kinks 0, 1/(2n), 1/n.
inline double simpson(double (*f)(int, double), int n, double a, double b, int panels) {
  if (b <= a) return 0.0;
  const double h = (b - a) / panels;
  double s = f(n, a) + f(n, b);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(n, a + k * h);
  return s * h / 3.0;
}

inline double psi_prime_quad(int n, double s) {
  if (s <= 0.0) return 0.0;
  const double k1 = 0.5 / n, k2 = 1.0 / n;
  double v = simpson(psi_second_def, n, 0.0, std::min(s, k1), 64);
  if (s > k1) v += simpson(psi_second_def, n, k1, std::min(s, k2), 64);
  return v;
}

inline double psi_quad(int n, double s) {
  if (s <= 0.0) return 0.0;
  const double k1 = 0.5 / n, k2 = 1.0 / n;
  // psi' is piecewise polynomial of degree 2 on [0, 1/n] and constant after,
  // so Simpson is exact up to rounding on each piece.
  double v = simpson(psi_prime_quad, n, 0.0, std::min(s, k1), 64);
  if (s > k1) v += simpson(psi_prime_quad, n, k1, std::min(s, k2), 64);
  if (s > k2) v += s - k2;
  return v;
}

/// Textbook mean and standard error (n - 1 variance), two-pass, plain summation.
inline std::pair<double, double> mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  long double sum = 0.0L;
  for (double x : v) sum += x;
  const double mean = static_cast<double>(sum / v.size());
  long double ss = 0.0L;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? static_cast<double>(ss / (v.size() - 1)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

/// Random symmetric matrix with entries uniform in [-scale, scale].
inline Mat random_symmetric(std::size_t n, std::mt19937_64& rng, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat a = zeros(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k; l < n; ++l) a[k][l] = a[l][k] = u(rng);
  return a;
}

}  // namespace oracle
