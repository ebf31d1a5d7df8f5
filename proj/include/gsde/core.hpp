#pragma once

// Foundational value types: volatility bounds, symmetric matrices, time
// grids and segment paths on [-r0, 0] with their componentwise order.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace gsde {

/// Volatility bounds 0 < sigma_lo < sigma_hi for an m-dimensional driver.
struct VolBounds {
  double sigma_lo;
  double sigma_hi;
  std::size_t m;

  VolBounds(double lo, double hi, std::size_t dim);

  double var_lo() const noexcept { return sigma_lo * sigma_lo; }
  double var_hi() const noexcept { return sigma_hi * sigma_hi; }

  bool operator==(const VolBounds&) const = default;
};

/// Eigenvalues ascending; eigenvector columns normalized so that their
/// largest-magnitude entry (first on ties) is positive.
struct Eigensystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Real symmetric matrix. Construction symmetrizes with (M + M^T)/2, so the
/// stored entries are exactly symmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim);
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(std::size_t dim, double scale = 1.0);
  static SymMatrix diagonal(std::span<const double> diag);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t k, std::size_t l) const { return m_(k, l); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }

  double trace() const { return m_.trace(); }
  double frobenius_norm() const { return m_.norm(); }
  bool all_finite() const { return m_.allFinite(); }

  Eigensystem eigensystem() const;
  Eigen::VectorXd eigenvalues() const { return eigensystem().values; }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator-() const;
  friend SymMatrix operator*(double s, const SymMatrix& a);

  bool operator==(const SymMatrix& o) const;

 private:
  Eigen::MatrixXd m_;
};

/// Frobenius pairing sum_{k,l} M_kl N_kl.
double matrix_pair(const SymMatrix& a, const SymMatrix& b);

/// Symmetric matrix function U f(Lambda) U^T via the deterministic eigensystem.
/// Diagonal inputs are handled entrywise so that e.g. sqrt(s^2 I) = s I exactly.
Eigen::MatrixXd symmetric_sqrt(const SymMatrix& a);

/// Uniform grid t_k = t0 + k dt, k = 0..n_steps, with t_{n_steps} = T.
/// T == t0 gives the degenerate zero-step grid.
class TimeGrid {
 public:
  TimeGrid(double t0, double T, double dt);

  double t0() const noexcept { return t0_; }
  double horizon() const noexcept { return T_; }
  double dt() const noexcept { return dt_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  double time(std::size_t k) const noexcept {
    return k == n_steps_ ? T_ : t0_ + static_cast<double>(k) * dt_;
  }

  /// Number of steps spanning the delay r0; throws if dt does not divide r0.
  std::size_t lag_steps(double r0) const;

  /// Index k with time(k) == t (within 1e-9 dt); throws when t is off-grid.
  std::size_t index_of(double t) const;

  bool operator==(const TimeGrid&) const = default;

 private:
  double t0_;
  double T_;
  double dt_;
  std::size_t n_steps_;
};

/// Number of uniform samples covering [-r0, 0] at the given spacing (1 when r0 = 0).
std::size_t segment_sample_count(double r0, double spacing);

/// Non-owning view of a segment: `n` samples of R^d, row-major
/// (sample-major), sample k at s = -r0 + k * spacing.
class SegmentView {
 public:
  SegmentView(std::span<const double> samples, std::size_t d, double r0, double spacing)
      : samples_(samples), d_(d), r0_(r0), spacing_(spacing) {}

  std::size_t dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return samples_.size() / d_; }
  double r0() const noexcept { return r0_; }
  double spacing() const noexcept { return spacing_; }
  std::span<const double> data() const noexcept { return samples_; }

  /// Sample k, component i (0-based).
  double sample(std::size_t k, std::size_t i) const noexcept { return samples_[k * d_ + i]; }
  double at_zero(std::size_t i) const noexcept { return sample(size() - 1, i); }

  /// Piecewise-linear interpolant at s in [-r0, 0], component i (0-based).
  double eval(double s, std::size_t i) const;

  double sup_norm() const noexcept;

 private:
  std::span<const double> samples_;
  std::size_t d_;
  double r0_;
  double spacing_;
};

/// Owning segment path on [-r0, 0].
class SegmentPath {
 public:
  SegmentPath(double r0, std::size_t d, double spacing, std::vector<double> samples);

  static SegmentPath constant(double r0, std::size_t d, double spacing,
                              std::span<const double> value);

  /// Samples f(s, i) on the grid; f takes (s, 0-based component).
  template <class F>
  static SegmentPath from_function(double r0, std::size_t d, double spacing, F&& f) {
    const std::size_t n = segment_sample_count(r0, spacing);
    std::vector<double> v(n * d);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < d; ++i)
        v[k * d + i] = f(sample_time(r0, spacing, n, k), i);
    return SegmentPath(r0, d, spacing, std::move(v));
  }

  static double sample_time(double r0, double spacing, std::size_t n, std::size_t k) noexcept {
    return k + 1 == n ? 0.0 : -r0 + static_cast<double>(k) * spacing;
  }

  SegmentView view() const noexcept { return SegmentView(samples_, d_, r0_, spacing_); }

  std::size_t dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return samples_.size() / d_; }
  double r0() const noexcept { return r0_; }
  double spacing() const noexcept { return spacing_; }
  const std::vector<double>& samples() const noexcept { return samples_; }

  double sample(std::size_t k, std::size_t i) const noexcept { return samples_[k * d_ + i]; }
  double at_zero(std::size_t i) const noexcept { return view().at_zero(i); }
  double eval(double s, std::size_t i) const { return view().eval(s, i); }

  bool same_shape(const SegmentPath& o) const noexcept;
  bool operator==(const SegmentPath& o) const = default;

 private:
  double r0_;
  std::size_t d_;
  double spacing_;
  std::vector<double> samples_;
};

/// xi <= eta componentwise at every sample.
bool segment_order_leq(const SegmentPath& xi, const SegmentPath& eta);

/// Componentwise, samplewise minimum (xi1 ^ xi2).
SegmentPath segment_min(const SegmentPath& a, const SegmentPath& b);

/// Sup norm of the samplewise difference.
double segment_distance(const SegmentPath& a, const SegmentPath& b);

}  // namespace gsde
