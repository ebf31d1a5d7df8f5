#include "gsde/scenario.hpp"

#include "gsde/errors.hpp"
#include "gsde/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace gsde {

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string matrix_text(const SymMatrix& g) {
  std::string s;
  for (std::size_t k = 0; k < g.dim(); ++k) {
    if (k) s += ";";
    for (std::size_t l = 0; l < g.dim(); ++l) {
      if (l) s += " ";
      s += num(g(k, l));
    }
  }
  return s;
}

}  // namespace

VolRegime make_regime(const SymMatrix& gamma, const VolBounds& bounds) {
  if (gamma.dim() != bounds.m)
    throw std::invalid_argument("policy matrix has dimension " + std::to_string(gamma.dim()) +
                                ", expected m = " + std::to_string(bounds.m));
  if (!gamma.all_finite()) throw std::invalid_argument("policy matrix has non-finite entries");
  const Eigen::VectorXd ev = gamma.eigenvalues();
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    const double l = ev(k);
    if (l < bounds.var_lo() - 1e-10 || l > bounds.var_hi() + 1e-10)
      throw AdmissibilityError("volatility matrix eigenvalue " + num(l) + " outside [" +
                               num(bounds.var_lo()) + ", " + num(bounds.var_hi()) + "]");
  }
  return VolRegime{gamma, symmetric_sqrt(gamma)};
}

VolatilityPolicy VolatilityPolicy::constant(const SymMatrix& gamma, const VolBounds& bounds) {
  VolatilityPolicy p(Kind::constant, bounds);
  p.regimes_.push_back(make_regime(gamma, bounds));
  return p;
}

VolatilityPolicy VolatilityPolicy::piecewise(std::vector<double> switch_times,
                                             const std::vector<SymMatrix>& gammas,
                                             const VolBounds& bounds) {
  if (gammas.size() != switch_times.size() + 1)
    throw std::invalid_argument("piecewise policy needs one more matrix than switch times");
  for (std::size_t k = 0; k < switch_times.size(); ++k) {
    if (!std::isfinite(switch_times[k]))
      throw std::invalid_argument("piecewise policy switch times must be finite");
    if (k > 0 && !(switch_times[k] > switch_times[k - 1]))
      throw std::invalid_argument("piecewise policy switch times must be strictly increasing");
  }
  VolatilityPolicy p(Kind::piecewise_constant, bounds);
  p.switch_times_ = std::move(switch_times);
  for (const auto& g : gammas) p.regimes_.push_back(make_regime(g, bounds));
  return p;
}

VolatilityPolicy VolatilityPolicy::feedback(std::size_t component, double threshold,
                                            const SymMatrix& low, const SymMatrix& high,
                                            const VolBounds& bounds) {
  if (component < 1 || component > bounds.m)
    throw std::invalid_argument("feedback component must be in 1..m");
  if (!std::isfinite(threshold)) throw std::invalid_argument("feedback threshold must be finite");
  VolatilityPolicy p(Kind::feedback_threshold, bounds);
  p.component_ = component;
  p.threshold_ = threshold;
  p.regimes_.push_back(make_regime(low, bounds));
  p.regimes_.push_back(make_regime(high, bounds));
  return p;
}

std::size_t VolatilityPolicy::regime_at(double t, std::span<const double> b_now) const noexcept {
  switch (kind_) {
    case Kind::constant:
      return 0;
    case Kind::piecewise_constant:
      return static_cast<std::size_t>(
          std::upper_bound(switch_times_.begin(), switch_times_.end(), t) - switch_times_.begin());
    case Kind::feedback_threshold:
      return b_now[component_ - 1] > threshold_ ? 1 : 0;
  }
  return 0;
}

std::string VolatilityPolicy::describe() const {
  std::string s;
  switch (kind_) {
    case Kind::constant:
      s = "constant gamma=[" + matrix_text(regimes_[0].gamma) + "]";
      break;
    case Kind::piecewise_constant:
      s = "piecewise";
      for (std::size_t k = 0; k < regimes_.size(); ++k) {
        if (k > 0) s += " switch=" + num(switch_times_[k - 1]);
        s += " gamma=[" + matrix_text(regimes_[k].gamma) + "]";
      }
      break;
    case Kind::feedback_threshold:
      s = "feedback component=" + std::to_string(component_) + " threshold=" + num(threshold_) +
          " low=[" + matrix_text(regimes_[0].gamma) + "] high=[" + matrix_text(regimes_[1].gamma) +
          "]";
      break;
  }
  return s;
}

VolatilityPolicy make_policy(const PolicySpec& spec, const VolBounds& bounds) {
  switch (spec.kind) {
    case VolatilityPolicy::Kind::constant:
      if (spec.gammas.size() != 1) throw std::invalid_argument("constant policy takes one matrix");
      return VolatilityPolicy::constant(spec.gammas[0], bounds);
    case VolatilityPolicy::Kind::piecewise_constant:
      return VolatilityPolicy::piecewise(spec.switch_times, spec.gammas, bounds);
    case VolatilityPolicy::Kind::feedback_threshold:
      if (spec.gammas.size() != 2)
        throw std::invalid_argument("feedback policy takes two matrices (low, high)");
      return VolatilityPolicy::feedback(spec.component, spec.threshold, spec.gammas[0],
                                        spec.gammas[1], bounds);
  }
  throw std::invalid_argument("unknown policy kind");
}

// ---------------------------------------------------------------------------

DriverBatch::DriverBatch(VolatilityPolicy policy, TimeGrid grid, std::size_t n_paths,
                         std::uint64_t seed)
    : policy_(std::move(policy)), grid_(grid), n_paths_(n_paths), seed_(seed) {}

void DriverBatch::fill(std::size_t p, DriverPath& out) const {
  const std::size_t n = grid_.n_steps();
  const std::size_t m = policy_.m();
  const double sqrt_dt = std::sqrt(grid_.dt());
  out.n_steps = n;
  out.m = m;
  out.dW.resize(n * m);
  out.dB.resize(n * m);
  out.B.assign((n + 1) * m, 0.0);
  out.regime.resize(n);
  const auto& regimes = policy_.regimes();
  for (std::size_t k = 0; k < n; ++k) {
    std::span<double> dw(out.dW.data() + k * m, m);
    brownian_normals(seed_, p, k, dw);
    for (double& w : dw) w *= sqrt_dt;
    const std::size_t r = policy_.regime_at(grid_.time(k), out.B_at(k));
    out.regime[k] = static_cast<std::uint32_t>(r);
    const Eigen::MatrixXd& theta = regimes[r].theta;
    for (std::size_t a = 0; a < m; ++a) {
      double s = 0.0;
      for (std::size_t c = 0; c < m; ++c)
        s += theta(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) * dw[c];
      out.dB[k * m + a] = s;
      out.B[(k + 1) * m + a] = out.B[k * m + a] + s;
    }
  }
}

DriverPath DriverBatch::path(std::size_t p) const {
  DriverPath out;
  fill(p, out);
  return out;
}

Eigen::MatrixXd DriverBatch::qv_increment(std::uint32_t regime) const {
  return grid_.dt() * policy_.regimes().at(regime).gamma.matrix();
}

DriverBatch drive(const VolatilityPolicy& policy, const TimeGrid& grid, std::size_t n_paths,
                  std::uint64_t seed) {
  if (n_paths < 1) throw std::invalid_argument("drive: n_paths must be >= 1");
  return DriverBatch(policy, grid, n_paths, seed);
}

}  // namespace gsde
