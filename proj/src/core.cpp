#include "gsde/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gsde {

VolBounds::VolBounds(double lo, double hi, std::size_t dim) : sigma_lo(lo), sigma_hi(hi), m(dim) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && lo < hi))
    throw std::invalid_argument("volatility bounds require 0 < sigma_lo < sigma_hi");
  if (dim < 1) throw std::invalid_argument("volatility bounds require m >= 1");
}

// ---------------------------------------------------------------------------
// SymMatrix

SymMatrix::SymMatrix(std::size_t dim)
    : m_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix requires a square matrix");
  m_.resize(m.rows(), m.cols());
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    m_(k, k) = m(k, k);
    for (Eigen::Index l = k + 1; l < m.cols(); ++l) {
      const double v = 0.5 * (m(k, l) + m(l, k));
      m_(k, l) = v;
      m_(l, k) = v;
    }
  }
}

SymMatrix SymMatrix::identity(std::size_t dim, double scale) {
  SymMatrix s(dim);
  s.m_.diagonal().setConstant(scale);
  return s;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix s(diag.size());
  for (std::size_t k = 0; k < diag.size(); ++k) s.m_(k, k) = diag[k];
  return s;
}

namespace {

bool is_diagonal(const Eigen::MatrixXd& m) {
  for (Eigen::Index k = 0; k < m.rows(); ++k)
    for (Eigen::Index l = 0; l < m.cols(); ++l)
      if (k != l && m(k, l) != 0.0) return false;
  return true;
}

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < vectors.rows(); ++r)
      if (std::abs(vectors(r, c)) > std::abs(vectors(arg, c))) arg = r;
    if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

}  // namespace

Eigensystem SymMatrix::eigensystem() const {
  const Eigen::Index n = m_.rows();
  Eigensystem es;
  if (is_diagonal(m_)) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return m_(a, a) < m_(b, b); });
    es.values.resize(n);
    es.vectors = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      es.values(c) = m_(order[static_cast<std::size_t>(c)], order[static_cast<std::size_t>(c)]);
      es.vectors(order[static_cast<std::size_t>(c)], c) = 1.0;
    }
    return es;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m_);
  if (solver.info() != Eigen::Success)
    throw std::invalid_argument("eigendecomposition failed (non-finite entries?)");
  es.values = solver.eigenvalues();
  es.vectors = solver.eigenvectors();
  fix_signs(es.vectors);
  return es;
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  if (dim() != o.dim()) throw std::invalid_argument("SymMatrix dimension mismatch");
  SymMatrix r;
  r.m_ = m_ + o.m_;
  return r;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  if (dim() != o.dim()) throw std::invalid_argument("SymMatrix dimension mismatch");
  SymMatrix r;
  r.m_ = m_ - o.m_;
  return r;
}

SymMatrix SymMatrix::operator-() const {
  SymMatrix r;
  r.m_ = -m_;
  return r;
}

SymMatrix operator*(double s, const SymMatrix& a) {
  SymMatrix r;
  r.m_ = s * a.m_;
  return r;
}

bool SymMatrix::operator==(const SymMatrix& o) const {
  return dim() == o.dim() && m_ == o.m_;
}

double matrix_pair(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("matrix_pair: dimension mismatch (" + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()) + ")");
  return a.matrix().cwiseProduct(b.matrix()).sum();
}

Eigen::MatrixXd symmetric_sqrt(const SymMatrix& a) {
  if (is_diagonal(a.matrix())) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(a.matrix().rows(), a.matrix().cols());
    for (Eigen::Index k = 0; k < r.rows(); ++k) r(k, k) = std::sqrt(std::max(0.0, a(k, k)));
    return r;
  }
  const Eigensystem es = a.eigensystem();
  const Eigen::VectorXd root = es.values.cwiseMax(0.0).cwiseSqrt();
  return es.vectors * root.asDiagonal() * es.vectors.transpose();
}

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid::TimeGrid(double t0, double T, double dt) : t0_(t0), T_(T), dt_(dt), n_steps_(0) {
  if (!(std::isfinite(t0) && std::isfinite(T) && std::isfinite(dt)))
    throw std::invalid_argument("time grid values must be finite");
  if (t0 < 0.0) throw std::invalid_argument("time grid requires t0 >= 0");
  if (T < t0) throw std::invalid_argument("time grid requires T >= t0");
  if (!(dt > 0.0)) throw std::invalid_argument("time grid requires dt > 0");
  const double steps = std::round((T - t0) / dt);
  n_steps_ = static_cast<std::size_t>(steps);
  const double end = t0 + steps * dt;
  if (std::abs(end - T) > 1e-12 * std::max(1.0, std::abs(T)))
    throw std::invalid_argument("time grid: dt does not divide T - t0");
}

std::size_t TimeGrid::lag_steps(double r0) const {
  if (r0 < 0.0) throw std::invalid_argument("delay r0 must be >= 0");
  const double q = r0 / dt_;
  const double k = std::round(q);
  if (std::abs(q - k) > 1e-9 * std::max(1.0, q))
    throw std::invalid_argument("grid step dt must divide the delay r0");
  return static_cast<std::size_t>(k);
}

std::size_t TimeGrid::index_of(double t) const {
  const double q = (t - t0_) / dt_;
  const double k = std::round(q);
  if (k < 0.0 || k > static_cast<double>(n_steps_) || std::abs(q - k) > 1e-9)
    throw std::invalid_argument("time " + std::to_string(t) + " is not a grid point");
  return static_cast<std::size_t>(k);
}

// ---------------------------------------------------------------------------
// Segments

std::size_t segment_sample_count(double r0, double spacing) {
  if (r0 < 0.0) throw std::invalid_argument("segment delay r0 must be >= 0");
  if (r0 == 0.0) return 1;
  if (!(spacing > 0.0)) throw std::invalid_argument("segment spacing must be > 0");
  const double q = r0 / spacing;
  const double k = std::round(q);
  if (k < 1.0 || std::abs(q - k) > 1e-9 * std::max(1.0, q))
    throw std::invalid_argument("segment spacing must divide r0");
  return static_cast<std::size_t>(k) + 1;
}

double SegmentView::eval(double s, std::size_t i) const {
  const std::size_t n = size();
  if (n == 1) return sample(0, i);
  if (s < -r0_ - 1e-12 || s > 1e-12)
    throw std::invalid_argument("segment evaluation outside [-r0, 0]");
  double pos = (s + r0_) / spacing_;
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9) pos = nearest;
  pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
  const auto k = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(k);
  if (frac == 0.0 || k + 1 >= n) return sample(k, i);
  return (1.0 - frac) * sample(k, i) + frac * sample(k + 1, i);
}

double SegmentView::sup_norm() const noexcept {
  double m = 0.0;
  for (double v : samples_) m = std::max(m, std::abs(v));
  return m;
}

SegmentPath::SegmentPath(double r0, std::size_t d, double spacing, std::vector<double> samples)
    : r0_(r0), d_(d), spacing_(r0 == 0.0 ? 0.0 : spacing), samples_(std::move(samples)) {
  if (d == 0) throw std::invalid_argument("segment dimension must be >= 1");
  const std::size_t n = segment_sample_count(r0, spacing);
  if (samples_.size() != n * d)
    throw std::invalid_argument("segment sample count " + std::to_string(samples_.size()) +
                                " does not match " + std::to_string(n) + " x " +
                                std::to_string(d));
}

SegmentPath SegmentPath::constant(double r0, std::size_t d, double spacing,
                                  std::span<const double> value) {
  if (value.size() != d) throw std::invalid_argument("constant segment: value has wrong size");
  return from_function(r0, d, spacing, [&](double, std::size_t i) { return value[i]; });
}

bool SegmentPath::same_shape(const SegmentPath& o) const noexcept {
  return d_ == o.d_ && r0_ == o.r0_ && samples_.size() == o.samples_.size();
}

namespace {
void require_same_shape(const SegmentPath& a, const SegmentPath& b, const char* op) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(op) + ": segment shape mismatch");
}
}  // namespace

bool segment_order_leq(const SegmentPath& xi, const SegmentPath& eta) {
  require_same_shape(xi, eta, "segment_order_leq");
  const auto& a = xi.samples();
  const auto& b = eta.samples();
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!(a[k] <= b[k])) return false;
  return true;
}

SegmentPath segment_min(const SegmentPath& a, const SegmentPath& b) {
  require_same_shape(a, b, "segment_min");
  std::vector<double> v(a.samples().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::min(a.samples()[k], b.samples()[k]);
  return SegmentPath(a.r0(), a.dim(), a.spacing(), std::move(v));
}

double segment_distance(const SegmentPath& a, const SegmentPath& b) {
  require_same_shape(a, b, "segment_distance");
  double m = 0.0;
  for (std::size_t k = 0; k < a.samples().size(); ++k)
    m = std::max(m, std::abs(a.samples()[k] - b.samples()[k]));
  return m;
}

}  // namespace gsde
