#pragma once

// The sublinear generator
//
//   G(A) = 1/2 sup { <gamma, A> : gamma symmetric, sigma_lo^2 I <= gamma <= sigma_hi^2 I }.
//
// The box constraint diagonalizes in the eigenbasis of A, which gives the
// closed form G(A) = 1/2 (sigma_hi^2 tr A^+ - sigma_lo^2 tr A^-). The
// sampling oracle below guards that derivation.

#include "gsde/core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gsde {

class CounterRng;

/// Eigenvalues with magnitude below this are treated as zero.
inline constexpr double kEigenZero = 1e-12;

double g_eval(const SymMatrix& a, const VolBounds& bounds);

/// gamma* = U diag(sigma_hi^2 if lambda >= 0 else sigma_lo^2) U^T.
SymMatrix g_maximizer(const SymMatrix& a, const VolBounds& bounds);

/// Random feasible gamma = U diag(g) U^T, U Haar-orthogonal, g uniform in the box.
SymMatrix random_feasible_gamma(const VolBounds& bounds, CounterRng& rng);

/// n feasible samples drawn from stream (seed, 0).
std::vector<SymMatrix> sample_feasible_gammas(const VolBounds& bounds, std::size_t n,
                                              std::uint64_t seed);

/// max over the given gammas of <gamma, A>/2.
double g_pairing_max(const SymMatrix& a, std::span<const SymMatrix> gammas);

/// Best sampled feasible pairing/2; a lower bound of g_eval.
double g_oracle_lower_bound(const SymMatrix& a, const VolBounds& bounds, std::size_t n_samples,
                            std::uint64_t seed);

struct GReport {
  double value;
  SymMatrix maximizer;
  double certificate_gap;  // value minus the best sampled pairing/2
};

GReport g_report(const SymMatrix& a, const VolBounds& bounds, std::size_t n_samples,
                 std::uint64_t seed);

/// Outcome of the four structural properties of G at one (A, B, lambda).
struct GPropertyReport {
  bool homogeneity = false;         // G(lambda A) = lambda G(A)
  bool subadditivity = false;       // G(A+B) <= G(A) + G(B)
  bool difference_bound = false;    // G(A) - G(B) <= G(A - B)
  bool growth_bound = false;        // |G(A)| <= 1/2 |A|_F sqrt(m) sigma_hi^2
  bool trace_lower_bound = false;   // A >= B  =>  G(A) - G(B) >= sigma_lo^2/2 tr(A - B)
  bool ordered = false;             // whether A >= B held (else the trace bound is vacuous)

  bool all() const noexcept {
    return homogeneity && subadditivity && difference_bound && growth_bound && trace_lower_bound;
  }
};

GPropertyReport check_g_properties(const SymMatrix& a, const SymMatrix& b, double lambda,
                                   const VolBounds& bounds, double tol = 1e-10);

}  // namespace gsde
