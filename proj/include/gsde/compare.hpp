#pragma once

// Order preservation of the coupled pair.
//
// Sufficient conditions, for every component i:
//   (1) b^i(t, xi) - bbar^i(t, eta) + 2 G(h^i(t, xi) - hbar^i(t, eta)) <= 0
//       whenever xi <= eta and xi^i(0) = eta^i(0);
//   (2) sigma = sigmabar, and sigma^{ij}(t, xi) depends on xi only through xi^i(0).
// Both are also necessary for continuous coefficients. The checkers probe
// the conditions on random constrained segments; the verifier simulates the
// pair on common noise and estimates the G-expectation of the positive part
// of X - Xbar together with the capacity of a crossing.

#include "gsde/coeffspec.hpp"
#include "gsde/core.hpp"
#include "gsde/exec.hpp"
#include "gsde/gexpect.hpp"
#include "gsde/random.hpp"
#include "gsde/sim.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsde {

struct OrderedPair {
  SegmentPath xi;
  SegmentPath eta;
};

/// eta: random piecewise-linear path with amplitude <= scale; xi = eta - delta
/// with delta >= 0 and delta^i(0) = 0, so xi <= eta and xi^i(0) = eta^i(0)
/// exactly. `component` is 1-based.
OrderedPair sample_ordered_pair(std::size_t d, double r0, double spacing, std::size_t component,
                                double scale, CounterRng& rng);
OrderedPair sample_ordered_pair(std::size_t d, double r0, double spacing, std::size_t component,
                                double scale, std::uint64_t seed);

/// Random piecewise-linear segment with amplitude <= scale.
SegmentPath sample_smooth_segment(std::size_t d, double r0, double spacing, double scale,
                                  CounterRng& rng);

struct ProbeOptions {
  std::size_t n_trials = 10000;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  double spacing = 0.0;  // segment sample spacing (must divide r0 when r0 > 0)
  double scale = 1.0;    // amplitude of probe segments
  Exec exec = Exec::parallel;
};

enum class Probe { drift, equality, locality };

struct MarginRecord {
  std::size_t trial;
  double t;
  std::size_t i;  // 1-based
  std::size_t j;  // 1-based (0 for condition 1)
  Probe probe;
  double margin;
};

struct Witness {
  double t;
  std::size_t i;  // 1-based
  std::size_t j;  // 1-based (0 for condition 1)
  Probe probe;
  SegmentPath xi;
  SegmentPath eta;
};

struct ConditionReport {
  int condition = 1;
  std::size_t n_trials = 0;
  double max_margin = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::optional<Witness> witness;  // trial attaining max_margin (lowest index on ties)
  std::vector<MarginRecord> margins;
};

/// b^i(t,xi) - bbar^i(t,eta) + 2 G(h^i(t,xi) - hbar^i(t,eta)); i 0-based.
double condition1_margin(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                         const VolBounds& bounds, std::size_t i, double t,
                         const SegmentPath& xi, const SegmentPath& eta);

/// Equality probe |sigma^{ij}(t,xi) - sigmabar^{ij}(t,xi)| and locality probe
/// |sigma^{ij}(t,xi) - sigma^{ij}(t,eta)|; i, j 0-based.
double condition2_equality(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                           std::size_t i, std::size_t j, double t, const SegmentPath& xi);
double condition2_locality(const CoefficientSet& set_x, std::size_t i, std::size_t j, double t,
                           const SegmentPath& xi, const SegmentPath& eta);

ConditionReport check_condition1(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                                 const VolBounds& bounds, std::span<const double> t_grid,
                                 const ProbeOptions& opts);

ConditionReport check_condition2(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                                 std::span<const double> t_grid, const ProbeOptions& opts);

/// Re-evaluates the witness of a report.
double replay_witness(const ConditionReport& report, const CoefficientSet& set_x,
                      const CoefficientSet& set_xbar, const VolBounds& bounds);

/// CSV of all probed margins. Condition 1: trial,t,i,margin.
/// Condition 2: trial,t,i,j,probe,margin.
void write_margins_csv(std::ostream& os, const ConditionReport& report);

// ---------------------------------------------------------------------------

struct VerifyOptions {
  std::size_t n_paths = 2000;
  std::uint64_t seed = 1;
  double band = 0.0;              // crossing allowance for Euler jitter
  double accept_threshold = 0.02; // on the violation G-expectation
  Exec exec = Exec::parallel;
};

struct OrderVerdict {
  GEstimate gexp_of_violation;     // of sup_t max_i (X^i - Xbar^i)^+
  GEstimate capacity_of_crossing;  // of {exists t, i: X^i(t) > Xbar^i(t) + band}
  double band = 0.0;
  double accept_threshold = 0.0;
  bool crossing_detected = false;  // some policy's frequency >= 3 SE above 0
  bool preserved = false;
};

/// sup over grid times in [t0, T] of max_i (X^i - Xbar^i)^+.
double violation_functional(const PathSample& s);

/// Whether X^i(t) > Xbar^i(t) + band at some grid time in [t0, T].
bool crossing_event(const PathSample& s, double band);

OrderVerdict verify_order_preservation(const CoupledSystem& system,
                                       std::span<const NamedPolicy> policies,
                                       const TimeGrid& grid, const VerifyOptions& opts);

// ---------------------------------------------------------------------------

struct NecessityProbeReport {
  std::size_t component = 0;          // 1-based
  SymMatrix gamma;
  std::vector<double> s_list;
  std::vector<PolicyEstimate> quotients;  // (1/s) E[X^i(t0+s) - Xbar^i(t0+s)] per s
  double slope = 0.0;                 // polynomial extrapolation to s = dt
  double slope_se = 0.0;              // Monte Carlo standard error of the extrapolation
  double extrapolation_error = 0.0;   // |slope - extrapolation without the largest s|
  double combined_se = 0.0;           // sqrt(slope_se^2 + extrapolation_error^2)
  double direct = 0.0;                // b^i - bbar^i + <h^i - hbar^i, gamma> at (t0, xi, eta)

  /// |slope - direct| <= k combined_se, with a floor at rounding level.
  bool consistent(double k = 3.0) const noexcept;
};

/// Short-time drift probe under the constant policy gamma. system.xi and
/// system.xibar are the ordered pair (xi <= eta, equal i-th value at 0);
/// s_list entries must be positive multiples of dt (at least two).
NecessityProbeReport necessity_probe_drift(const CoupledSystem& system, const SymMatrix& gamma,
                                           const VolBounds& bounds, std::size_t component,
                                           double t0, std::span<const double> s_list, double dt,
                                           std::size_t n_paths, std::uint64_t seed,
                                           Exec exec = Exec::parallel);

}  // namespace gsde
