#pragma once

// C^2 approximations psi_n of the positive part s^+, with piecewise-linear
// second derivative
//
//   psi_n''(s) = 4 n^2 s            on [0, 1/(2n)]
//              = -4 n^2 (s - 1/n)   on [1/(2n), 1/n]
//              = 0                  otherwise,
//
// and psi_n(s) = psi_n'(s) = 0 for s <= 0. Diagnostic only: the order
// estimators use the raw positive part.

#include <span>

namespace gsde {

double psi(int n, double s);
double psi_prime(int n, double s);
double psi_second(int n, double s);

struct PsiLimitReport {
  bool derivative_in_unit_interval = true;  // 0 <= psi_n' <= 1, and psi_n' = 0 for s <= 0
  bool monotone_in_n = true;                // psi_n <= psi_n' for n < n'
  bool below_positive_part = true;          // psi_n <= s^+
  bool curvature_bound = true;              // s psi_n''(s) <= 1, positive only on (0, 1/n)
  double max_tail_gap_error = 0.0;          // max |s^+ - psi_n(s) - 1/(2n)| over s >= 1/n
  double max_curvature = 0.0;               // max s psi_n''(s) seen

  bool all(double tail_tol = 1e-12) const noexcept {
    return derivative_in_unit_interval && monotone_in_n && below_positive_part &&
           curvature_bound && max_tail_gap_error <= tail_tol;
  }
};

/// Checks the limit properties of the family on s_grid for each n in n_list
/// (which must be strictly increasing).
PsiLimitReport psi_limit_check(std::span<const int> n_list, std::span<const double> s_grid);

}  // namespace gsde
