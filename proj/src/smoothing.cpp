#include "gsde/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gsde {

namespace {
void require_n(int n) {
  if (n < 1) throw std::invalid_argument("psi: sharpness index n must be >= 1");
}
}  // namespace

double psi_second(int n, double s) {
  require_n(n);
  const double nn = static_cast<double>(n);
  const double half = 0.5 / nn;
  const double end = 1.0 / nn;
  if (s <= 0.0 || s >= end) return 0.0;
  if (s <= half) return 4.0 * nn * nn * s;
  return -4.0 * nn * nn * (s - end);
}

double psi_prime(int n, double s) {
  require_n(n);
  const double nn = static_cast<double>(n);
  const double half = 0.5 / nn;
  const double end = 1.0 / nn;
  if (s <= 0.0) return 0.0;
  if (s <= half) return 2.0 * nn * nn * s * s;
  if (s < end) {
    const double u = s - end;
    return 1.0 - 2.0 * nn * nn * u * u;
  }
  return 1.0;
}

double psi(int n, double s) {
  require_n(n);
  const double nn = static_cast<double>(n);
  const double half = 0.5 / nn;
  const double end = 1.0 / nn;
  if (s <= 0.0) return 0.0;
  if (s <= half) return (2.0 / 3.0) * nn * nn * s * s * s;
  if (s < end) {
    const double at_half = 1.0 / (12.0 * nn);
    const double u = s - end;
    return at_half + (s - half) - (2.0 * nn * nn / 3.0) * (u * u * u + 1.0 / (8.0 * nn * nn * nn));
  }
  return s - half;
}

PsiLimitReport psi_limit_check(std::span<const int> n_list, std::span<const double> s_grid) {
  for (std::size_t k = 1; k < n_list.size(); ++k)
    if (n_list[k] <= n_list[k - 1])
      throw std::invalid_argument("psi_limit_check: n_list must be strictly increasing");

  PsiLimitReport r;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const int n = n_list[k];
    const double end = 1.0 / n;
    for (double s : s_grid) {
      const double p = psi(n, s);
      const double dp = psi_prime(n, s);
      const double curv = s * psi_second(n, s);
      const double pos = std::max(s, 0.0);

      if (dp < 0.0 || dp > 1.0 || (s <= 0.0 && dp != 0.0)) r.derivative_in_unit_interval = false;
      if (p > pos) r.below_positive_part = false;
      if (k + 1 < n_list.size() && p > psi(n_list[k + 1], s)) r.monotone_in_n = false;
      if (curv > 1.0 + 1e-12 || (curv > 0.0 && !(s > 0.0 && s < end))) r.curvature_bound = false;
      r.max_curvature = std::max(r.max_curvature, curv);
      if (s >= end)
        r.max_tail_gap_error = std::max(r.max_tail_gap_error, std::abs(pos - p - 0.5 / n));
    }
  }
  return r;
}

}  // namespace gsde
