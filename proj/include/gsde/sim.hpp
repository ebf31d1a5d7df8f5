#pragma once

// Explicit Euler scheme for the coupled pair
//
//   dX    = b(t, X_t) dt    + <h(t, X_t), d<B>>       + sigma(t, X_t) dB
//   dXbar = bbar(t, Xbar_t) dt + <hbar(t, Xbar_t), d<B>> + sigmabar(t, Xbar_t) dB
//
// Both equations consume the same driver path (common-noise coupling).
// Coefficients are evaluated at the left endpoint; the segment X_t is a
// window over the last r0/dt + 1 recorded states.

#include "gsde/coeffspec.hpp"
#include "gsde/core.hpp"
#include "gsde/exec.hpp"
#include "gsde/scenario.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace gsde {

/// Guard for |X| in the Euler recursion.
inline constexpr double kDivergenceBound = 1e12;

/// Coefficient sets and initial segments of both equations.
struct CoupledSystem {
  CoefficientSet x;
  CoefficientSet xbar;
  SegmentPath xi;
  SegmentPath xibar;

  std::size_t d() const noexcept { return x.d(); }
  double r0() const noexcept { return x.r0(); }

  /// Checks dimensions and grid alignment; returns the lag in steps.
  std::size_t validate(const TimeGrid& grid, std::size_t m) const;
};

enum class Which { x, xbar };

/// Recorded trajectories on [t0 - r0, T] for every path of a batch.
class TrajectoryPair {
 public:
  TrajectoryPair(DriverBatch driver, std::size_t d, double r0, std::size_t n_lag);

  const DriverBatch& driver() const noexcept { return driver_; }
  const TimeGrid& grid() const noexcept { return driver_.grid(); }
  std::size_t n_paths() const noexcept { return driver_.n_paths(); }
  std::size_t d() const noexcept { return d_; }
  double r0() const noexcept { return r0_; }
  std::size_t n_lag() const noexcept { return n_lag_; }
  std::size_t n_times() const noexcept { return n_lag_ + grid().n_steps() + 1; }

  /// Time of history index idx (idx = n_lag is t0).
  double time_at(std::size_t idx) const noexcept;

  std::span<const double> history(Which w, std::size_t path) const;
  std::span<double> history(Which w, std::size_t path);

  double state(Which w, std::size_t path, std::size_t idx, std::size_t i) const {
    return history(w, path)[idx * d_ + i];
  }

  /// Segment of the recorded path over [t - r0, t]; t must be a grid time in [t0, T].
  SegmentPath segment_at(Which w, std::size_t path, double t) const;

 private:
  DriverBatch driver_;
  std::size_t d_;
  double r0_;
  std::size_t n_lag_;
  std::vector<double> x_;
  std::vector<double> xbar_;
};

/// Runs one equation along one driver path. `history` has (n_lag + n_steps + 1) * d
/// entries; the first n_lag + 1 states are overwritten with `init`.
/// `qv` holds gamma_r * dt for each regime r of the driver's policy.
void euler_path(const CoefficientSet& set, const SegmentPath& init, const TimeGrid& grid,
                std::size_t n_lag, const DriverPath& drv, std::span<const Eigen::MatrixXd> qv,
                std::span<double> history, std::size_t path_index);

/// Per-regime quadratic-variation increments of a batch.
std::vector<Eigen::MatrixXd> qv_increments(const DriverBatch& batch);

TrajectoryPair simulate_pair(const CoupledSystem& system, const DriverBatch& batch,
                             Exec exec = Exec::parallel);

TrajectoryPair simulate_pair(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                             const SegmentPath& xi, const SegmentPath& xibar,
                             const DriverBatch& batch, Exec exec = Exec::parallel);

/// CSV with columns path,t,X_1..X_d,Xbar_1..Xbar_d (initial segments included).
void write_trajectory_csv(std::ostream& os, const TrajectoryPair& traj);

}  // namespace gsde
