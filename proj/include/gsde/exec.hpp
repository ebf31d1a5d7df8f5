#pragma once

// Execution policy shared by the Monte Carlo kernels. Every kernel has a
// serial reference loop and an OpenMP loop; both must produce bit-identical
// results because all per-item work is independent and reductions happen
// afterwards in index order.

#include <cstddef>
#include <exception>
#include <limits>
#include <span>

namespace gsde {

enum class Exec { serial, parallel };

/// Calls f(i) for i in [0, n). Under Exec::parallel the loop is an OpenMP
/// worksharing loop; the exception thrown by the lowest failing index is
/// rethrown after the loop.
template <class F>
void for_each_index(Exec exec, std::size_t n, F&& f) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr first_error;
  std::size_t first_index = std::numeric_limits<std::size_t>::max();
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      f(i);
    } catch (...) {
#pragma omp critical(gsde_for_each_index_error)
      {
        if (i < first_index) {
          first_index = i;
          first_error = std::current_exception();
        }
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

/// Pairwise (cascade) summation; the result depends only on the order of
/// the input, never on how it was produced.
inline double pairwise_sum(std::span<const double> v) noexcept {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace gsde
