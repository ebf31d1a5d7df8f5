#pragma once

// Admissible volatility policies theta (theta theta^T inside the box
// [sigma_lo^2 I, sigma_hi^2 I]) and the per-path driver increments they
// generate: dB = theta dW and d<B> = theta theta^T dt.

#include "gsde/core.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gsde {

/// One volatility regime: the quadratic-variation rate gamma and theta = gamma^{1/2}.
struct VolRegime {
  SymMatrix gamma;
  Eigen::MatrixXd theta;
};

class VolatilityPolicy {
 public:
  enum class Kind { constant, piecewise_constant, feedback_threshold };

  /// theta = gamma^{1/2}; gamma must lie in the box.
  static VolatilityPolicy constant(const SymMatrix& gamma, const VolBounds& bounds);

  /// gammas[k] applies on [switch_times[k-1], switch_times[k]) (absolute times,
  /// strictly increasing); gammas.size() == switch_times.size() + 1.
  static VolatilityPolicy piecewise(std::vector<double> switch_times,
                                    const std::vector<SymMatrix>& gammas,
                                    const VolBounds& bounds);

  /// Uses `high` while B_component(t) > threshold and `low` otherwise
  /// (component is 1-based), evaluated before each step.
  static VolatilityPolicy feedback(std::size_t component, double threshold, const SymMatrix& low,
                                   const SymMatrix& high, const VolBounds& bounds);

  Kind kind() const noexcept { return kind_; }
  std::size_t m() const noexcept { return bounds_.m; }
  const VolBounds& bounds() const noexcept { return bounds_; }
  const std::vector<VolRegime>& regimes() const noexcept { return regimes_; }
  const std::vector<double>& switch_times() const noexcept { return switch_times_; }
  std::size_t feedback_component() const noexcept { return component_; }
  double threshold() const noexcept { return threshold_; }

  /// Regime active at time t given the current value of B (non-anticipative).
  std::size_t regime_at(double t, std::span<const double> b_now) const noexcept;

  /// Compact parameter description for reports.
  std::string describe() const;

 private:
  VolatilityPolicy(Kind kind, const VolBounds& bounds) : kind_(kind), bounds_(bounds) {}

  Kind kind_;
  VolBounds bounds_;
  std::vector<VolRegime> regimes_;
  std::vector<double> switch_times_;
  std::size_t component_ = 1;
  double threshold_ = 0.0;
};

/// Validates gamma against the box (within 1e-10) and returns the regime.
/// Throws AdmissibilityError naming the offending eigenvalue.
VolRegime make_regime(const SymMatrix& gamma, const VolBounds& bounds);

/// Generic policy description used by configuration files.
struct PolicySpec {
  VolatilityPolicy::Kind kind = VolatilityPolicy::Kind::constant;
  std::vector<SymMatrix> gammas;     // 1 (constant), k+1 (piecewise) or 2 (feedback: low, high)
  std::vector<double> switch_times;  // piecewise only
  std::size_t component = 1;         // feedback only
  double threshold = 0.0;            // feedback only
};

VolatilityPolicy make_policy(const PolicySpec& spec, const VolBounds& bounds);

/// Increments of one path. Arrays are step-major.
struct DriverPath {
  std::size_t n_steps = 0;
  std::size_t m = 0;
  std::vector<double> dW;             // n_steps * m
  std::vector<double> dB;             // n_steps * m
  std::vector<double> B;              // (n_steps + 1) * m, B(t0) = 0
  std::vector<std::uint32_t> regime;  // n_steps, index into policy regimes

  std::span<const double> dW_at(std::size_t k) const { return {dW.data() + k * m, m}; }
  std::span<const double> dB_at(std::size_t k) const { return {dB.data() + k * m, m}; }
  std::span<const double> B_at(std::size_t k) const { return {B.data() + k * m, m}; }
};

/// Lazily generated batch of driver paths. Path p is a pure function of
/// (policy, grid, seed, p); ΔW depends only on (seed, p, step), so different
/// policies driven with the same seed share their Gaussian increments.
class DriverBatch {
 public:
  DriverBatch(VolatilityPolicy policy, TimeGrid grid, std::size_t n_paths, std::uint64_t seed);

  const VolatilityPolicy& policy() const noexcept { return policy_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t n_paths() const noexcept { return n_paths_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t m() const noexcept { return policy_.m(); }

  /// Fills `out` with path p (reuses its storage).
  void fill(std::size_t p, DriverPath& out) const;
  DriverPath path(std::size_t p) const;

  /// Quadratic-variation increment gamma * dt of regime r.
  Eigen::MatrixXd qv_increment(std::uint32_t regime) const;

 private:
  VolatilityPolicy policy_;
  TimeGrid grid_;
  std::size_t n_paths_;
  std::uint64_t seed_;
};

DriverBatch drive(const VolatilityPolicy& policy, const TimeGrid& grid, std::size_t n_paths,
                  std::uint64_t seed);

}  // namespace gsde
