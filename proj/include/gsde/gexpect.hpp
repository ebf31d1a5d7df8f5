#pragma once

// G-expectations and capacities as suprema over volatility policies:
//
//   E^G[F]  ~  max over policies theta of  E_{P_theta}[F]
//   C(A)    ~  max over policies theta of  P_theta(A)
//
// Every policy in the supplied family is admissible, so each estimate is a
// lower bound of the true supremum over all admissible policies. All
// policies share the Gaussian increments of (seed, path, step).

#include "gsde/core.hpp"
#include "gsde/exec.hpp"
#include "gsde/scenario.hpp"
#include "gsde/sim.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsde {

/// One simulated path as seen by a functional.
struct PathSample {
  const TimeGrid& grid;
  std::size_t path;
  const DriverPath& driver;
  // Histories of the coupled system on [t0 - r0, T]; empty when no system is simulated.
  std::span<const double> x;
  std::span<const double> xbar;
  std::size_t d = 0;
  std::size_t n_lag = 0;
  double r0 = 0.0;

  std::size_t m() const noexcept { return driver.m; }
  /// B_j(t_k), j 0-based.
  double B(std::size_t k, std::size_t j) const { return driver.B[k * driver.m + j]; }
  /// State at history index idx (idx = n_lag + k is grid time t_k), component i 0-based.
  double X(std::size_t idx, std::size_t i) const { return x[idx * d + i]; }
  double Xbar(std::size_t idx, std::size_t i) const { return xbar[idx * d + i]; }
  std::size_t n_history() const noexcept { return d == 0 ? 0 : x.size() / d; }
};

using PathFunctional = std::function<double(const PathSample&)>;
using PathPredicate = std::function<bool(const PathSample&)>;

struct NamedPolicy {
  std::string id;
  VolatilityPolicy policy;
};

struct MonteCarloSetup {
  TimeGrid grid;
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  std::optional<CoupledSystem> system;
  Exec exec = Exec::parallel;
};

struct PolicyEstimate {
  std::string id;
  std::string params;
  double mean = 0.0;
  double se = 0.0;
  std::size_t n_paths = 0;
};

struct GEstimate {
  std::vector<PolicyEstimate> per_policy;
  double value = 0.0;        // max of the per-policy means
  std::size_t argmax = 0;    // first policy attaining the max
  bool capacity_mode = false;

  const PolicyEstimate& best() const { return per_policy.at(argmax); }
};

/// values[policy][functional][path].
using PathValues = std::vector<std::vector<std::vector<double>>>;

/// Simulates every policy once and evaluates all functionals on the same paths.
PathValues evaluate_paths(std::span<const PathFunctional> functionals,
                          std::span<const NamedPolicy> policies, const MonteCarloSetup& setup);

/// Mean (shifted by the first value, so constant inputs are exact) and
/// standard error sd / sqrt(n) with the n - 1 sample variance.
PolicyEstimate summarize(std::string id, std::string params, std::span<const double> values);

/// Frequency of the 0/1 values with binomial standard error sqrt(p(1-p)/n).
PolicyEstimate summarize_frequency(std::string id, std::string params,
                                   std::span<const double> indicators);

GEstimate combine(std::vector<PolicyEstimate> per_policy, bool capacity_mode);

GEstimate estimate_gexp(const PathFunctional& functional, std::span<const NamedPolicy> policies,
                        const MonteCarloSetup& setup);

GEstimate estimate_capacity(const PathPredicate& event, std::span<const NamedPolicy> policies,
                            const MonteCarloSetup& setup);

/// A frequency counts as detected when it is at least k binomial standard
/// errors above zero (and positive).
bool significantly_positive(const PolicyEstimate& e, double k = 3.0);

/// CSV: id,parameters,mean,se,n
void write_policy_csv(std::ostream& os, const GEstimate& est);

/// n constant policies v I with v equally spaced over [sigma_lo^2, sigma_hi^2].
std::vector<NamedPolicy> constant_policy_grid(const VolBounds& bounds, std::size_t n);

/// Eight policies: constant low/mid/high, low-to-high and high-to-low switches
/// at the grid midpoint, two threshold feedbacks on B_1, and a four-piece
/// alternation.
std::vector<NamedPolicy> standard_policies(const VolBounds& bounds, const TimeGrid& grid);

// ---------------------------------------------------------------------------
// Search over a parametric slice of the admissible policies.

struct PolicyFamily {
  enum class Kind { constant_diagonal, piecewise_diagonal, feedback_diagonal };

  Kind kind = Kind::constant_diagonal;
  VolBounds bounds;
  std::size_t pieces = 2;          // piecewise: number of constant pieces
  std::size_t component = 1;       // feedback: B component (1-based)
  double threshold_range = 1.0;    // feedback: threshold searched in [-range, range]

  /// Parameter box; piecewise: (pieces - 1) switch times then pieces * m variances;
  /// feedback: threshold then m low and m high variances.
  std::vector<std::pair<double, double>> ranges(const TimeGrid& grid) const;
  VolatilityPolicy make(std::span<const double> params, const TimeGrid& grid) const;
};

struct SearchResult {
  std::vector<double> best_params;
  VolatilityPolicy best_policy;
  GEstimate trace;  // one entry per evaluated candidate, in evaluation order
};

/// Random search over the family followed by coordinate refinement; uses
/// exactly min(budget, needed) evaluations, each with the same seed.
SearchResult policy_search(const PathFunctional& functional, const PolicyFamily& family,
                           std::size_t budget, const MonteCarloSetup& setup);

}  // namespace gsde
