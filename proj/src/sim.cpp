#include "gsde/sim.hpp"

#include "gsde/csv.hpp"
#include "gsde/errors.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace gsde {

std::size_t CoupledSystem::validate(const TimeGrid& grid, std::size_t m) const {
  const std::size_t d = x.d();
  if (xbar.d() != d || xi.dim() != d || xibar.dim() != d)
    throw std::invalid_argument("coupled system: state dimensions disagree");
  if (x.m() != m || xbar.m() != m)
    throw std::invalid_argument("coupled system: noise dimension m disagrees with the policy");
  if (x.r0() != xbar.r0() || xi.r0() != x.r0() || xibar.r0() != x.r0())
    throw std::invalid_argument("coupled system: delays r0 disagree");
  const std::size_t n_lag = grid.lag_steps(x.r0());
  if (xi.size() != n_lag + 1 || xibar.size() != n_lag + 1)
    throw std::invalid_argument("initial segments must be sampled at the simulation step dt");
  return n_lag;
}

TrajectoryPair::TrajectoryPair(DriverBatch driver, std::size_t d, double r0, std::size_t n_lag)
    : driver_(std::move(driver)), d_(d), r0_(r0), n_lag_(n_lag) {
  const std::size_t per_path = n_times() * d_;
  x_.assign(n_paths() * per_path, 0.0);
  xbar_.assign(n_paths() * per_path, 0.0);
}

double TrajectoryPair::time_at(std::size_t idx) const noexcept {
  if (idx >= n_lag_) return grid().time(idx - n_lag_);
  return grid().t0() - static_cast<double>(n_lag_ - idx) * grid().dt();
}

std::span<const double> TrajectoryPair::history(Which w, std::size_t path) const {
  const std::size_t per_path = n_times() * d_;
  const auto& v = w == Which::x ? x_ : xbar_;
  return {v.data() + path * per_path, per_path};
}

std::span<double> TrajectoryPair::history(Which w, std::size_t path) {
  const std::size_t per_path = n_times() * d_;
  auto& v = w == Which::x ? x_ : xbar_;
  return {v.data() + path * per_path, per_path};
}

SegmentPath TrajectoryPair::segment_at(Which w, std::size_t path, double t) const {
  if (path >= n_paths()) throw std::invalid_argument("segment_at: path index out of range");
  const std::size_t k = grid().index_of(t);
  const auto h = history(w, path);
  std::vector<double> samples(h.begin() + static_cast<std::ptrdiff_t>(k * d_),
                              h.begin() + static_cast<std::ptrdiff_t>((k + n_lag_ + 1) * d_));
  return SegmentPath(r0_, d_, grid().dt(), std::move(samples));
}

void euler_path(const CoefficientSet& set, const SegmentPath& init, const TimeGrid& grid,
                std::size_t n_lag, const DriverPath& drv, std::span<const Eigen::MatrixXd> qv,
                std::span<double> history, std::size_t path_index) {
  const std::size_t d = set.d();
  const std::size_t m = set.m();
  const double dt = grid.dt();
  const double r0 = set.r0();
  std::copy(init.samples().begin(), init.samples().end(), history.begin());

  for (std::size_t k = 0; k < drv.n_steps; ++k) {
    const std::size_t now = n_lag + k;
    const SegmentView seg(history.subspan(k * d, (n_lag + 1) * d), d, r0, dt);
    const double t = grid.time(k);
    const Eigen::MatrixXd& dqv = qv[drv.regime[k]];
    const auto dB = drv.dB_at(k);
    for (std::size_t i = 0; i < d; ++i) {
      double inc = set.drift(i, t, seg) * dt + set.h_pair(i, t, seg, dqv);
      for (std::size_t j = 0; j < m; ++j) {
        const CoeffExpr& s = set.sigma_expr(i, j);
        if (!s.is_constant_zero()) inc += s.eval(t, seg) * dB[j];
      }
      const double next = history[now * d + i] + inc;
      if (!std::isfinite(next) || std::abs(next) > kDivergenceBound)
        throw DivergenceError(path_index, k + 1,
                              "Euler state diverged on path " + std::to_string(path_index) +
                                  " at step " + std::to_string(k + 1) + " (component " +
                                  std::to_string(i + 1) + ")");
      history[(now + 1) * d + i] = next;
    }
  }
}

std::vector<Eigen::MatrixXd> qv_increments(const DriverBatch& batch) {
  std::vector<Eigen::MatrixXd> qv;
  for (std::uint32_t r = 0; r < batch.policy().regimes().size(); ++r)
    qv.push_back(batch.qv_increment(r));
  return qv;
}

TrajectoryPair simulate_pair(const CoupledSystem& system, const DriverBatch& batch, Exec exec) {
  const std::size_t n_lag = system.validate(batch.grid(), batch.m());
  TrajectoryPair traj(batch, system.d(), system.r0(), n_lag);
  const auto qv = qv_increments(batch);
  for_each_index(exec, batch.n_paths(), [&](std::size_t p) {
    const DriverPath drv = batch.path(p);
    euler_path(system.x, system.xi, batch.grid(), n_lag, drv, qv, traj.history(Which::x, p), p);
    euler_path(system.xbar, system.xibar, batch.grid(), n_lag, drv, qv,
               traj.history(Which::xbar, p), p);
  });
  return traj;
}

TrajectoryPair simulate_pair(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                             const SegmentPath& xi, const SegmentPath& xibar,
                             const DriverBatch& batch, Exec exec) {
  return simulate_pair(CoupledSystem{set_x, set_xbar, xi, xibar}, batch, exec);
}

void write_trajectory_csv(std::ostream& os, const TrajectoryPair& traj) {
  CsvWriter csv(os);
  std::vector<std::string> header{"path", "t"};
  for (std::size_t i = 1; i <= traj.d(); ++i) header.push_back("X_" + std::to_string(i));
  for (std::size_t i = 1; i <= traj.d(); ++i) header.push_back("Xbar_" + std::to_string(i));
  csv.header(header);
  for (std::size_t p = 0; p < traj.n_paths(); ++p) {
    for (std::size_t idx = 0; idx < traj.n_times(); ++idx) {
      csv.field(p).field(traj.time_at(idx));
      for (std::size_t i = 0; i < traj.d(); ++i) csv.field(traj.state(Which::x, p, idx, i));
      for (std::size_t i = 0; i < traj.d(); ++i) csv.field(traj.state(Which::xbar, p, idx, i));
      csv.end_row();
    }
  }
}

}  // namespace gsde
