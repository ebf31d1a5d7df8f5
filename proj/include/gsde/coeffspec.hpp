#pragma once

// Coefficient expression language for path functionals on [0, inf) x C.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := number | 't' | probe | reduce | func '(' expr ')'
//           | 'min(' expr ',' expr ')' | 'max(' expr ',' expr ')'
//           | 'clip(' expr ',' number ',' number ')' | '(' expr ')' | '-' factor
//   probe  := 'x[' int '](' '-'? number ')'        value of component int at s = -number
//   reduce := ('avg'|'min'|'max') '(x[' int '])'   over the whole segment
//   func   := 'sin' | 'cos' | 'tanh' | 'abs'
//
// Components are 1-based. The grammar has no division, so every expression
// is Lipschitz on bounded sets; products of two segment-dependent factors
// are only locally Lipschitz and are flagged as such.

#include "gsde/core.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gsde {

enum class ExprOp {
  constant,
  time,
  probe,
  seg_avg,
  seg_min,
  seg_max,
  add,
  sub,
  mul,
  min,
  max,
  sin,
  cos,
  tanh,
  abs,
  neg,
  clip,
};

struct ExprNode {
  ExprOp op = ExprOp::constant;
  double value = 0.0;       // constant value, or probe lag tau >= 0
  std::size_t index = 0;    // 1-based segment component for probes/reductions
  double lo = 0.0;          // clip bounds
  double hi = 0.0;
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

using ExprPtr = std::shared_ptr<const ExprNode>;

/// Static bounds of an expression on the domain |segment| <= radius, t in [0, t_max].
struct ExprBound {
  double lipschitz = 0.0;   // w.r.t. the sup norm of the segment
  double magnitude = 0.0;   // bound on |value|
  bool global = true;       // false when a product of two segment-dependent factors appears
};

/// Immutable parsed expression. Evaluation runs a compiled postfix program.
class CoeffExpr {
 public:
  CoeffExpr();  // the constant 0
  explicit CoeffExpr(ExprPtr root);

  static CoeffExpr constant(double c);

  double eval(double t, const SegmentView& seg) const;
  double eval(double t, const SegmentPath& seg) const { return eval(t, seg.view()); }

  const ExprPtr& root() const noexcept { return root_; }
  std::string to_string() const;

  bool is_constant_zero() const noexcept;
  bool depends_on_segment() const noexcept { return max_index_ > 0; }
  std::size_t max_index() const noexcept { return max_index_; }
  double max_lag() const noexcept { return max_lag_; }

  ExprBound bound(double radius, double t_max) const;

  /// Structural equality of the syntax trees.
  friend bool operator==(const CoeffExpr& a, const CoeffExpr& b);

 private:
  struct Instr {
    ExprOp op;
    double value;
    std::size_t index;
    double lo;
    double hi;
  };
  void compile();

  ExprPtr root_;
  std::vector<Instr> program_;
  std::size_t stack_depth_ = 0;
  std::size_t max_index_ = 0;
  double max_lag_ = 0.0;
};

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

/// Semantic limits applied while parsing.
struct ParseContext {
  std::size_t d = 1;   // segment components allowed in probes (0 forbids probes)
  double r0 = 0.0;     // maximum lag
};

/// Parses `text`; throws ParseError (with line/column) on syntax errors,
/// unknown identifiers, lags outside [0, r0] or indices outside 1..d.
CoeffExpr parse_coeff(std::string_view text, const ParseContext& ctx);

// ---------------------------------------------------------------------------

/// alpha(t) or K(t) declared as c0 + c1 t with c0, c1 >= 0.
struct AffineBound {
  double c0 = 0.0;
  double c1 = 0.0;
  double operator()(double t) const noexcept { return c0 + c1 * t; }
  bool operator==(const AffineBound&) const = default;
};

/// Raw coefficient texts of one equation of the system.
struct CoefficientTexts {
  std::vector<std::string> b;      // d entries
  std::vector<std::string> h;      // d * m * m entries, h[(i*m + k)*m + l]
  std::vector<std::string> sigma;  // d * m entries, sigma[i*m + j]

  bool operator==(const CoefficientTexts&) const = default;
};

/// (b, h, sigma) for one equation plus declared regularity bounds. Each h^i
/// is stored symmetrized: entries (k,l) and (l,k) share the expression
/// 0.5*(h_kl + h_lk), so evaluated h^i is exactly symmetric.
class CoefficientSet {
 public:
  CoefficientSet(std::size_t d, std::size_t m, double r0, std::vector<CoeffExpr> b,
                 std::vector<CoeffExpr> h, std::vector<CoeffExpr> sigma,
                 AffineBound lip_bound = {}, AffineBound growth_bound = {});

  /// Parses the texts (empty strings mean 0).
  static CoefficientSet parse(std::size_t d, std::size_t m, double r0,
                              const CoefficientTexts& texts, AffineBound lip_bound = {},
                              AffineBound growth_bound = {});

  std::size_t d() const noexcept { return d_; }
  std::size_t m() const noexcept { return m_; }
  double r0() const noexcept { return r0_; }
  const AffineBound& lip_bound() const noexcept { return lip_bound_; }
  const AffineBound& growth_bound() const noexcept { return growth_bound_; }

  // Component indices below are 0-based.
  const CoeffExpr& b_expr(std::size_t i) const { return b_[i]; }
  const CoeffExpr& h_expr(std::size_t i, std::size_t k, std::size_t l) const {
    return h_[(i * m_ + k) * m_ + l];
  }
  const CoeffExpr& sigma_expr(std::size_t i, std::size_t j) const { return sigma_[i * m_ + j]; }

  double drift(std::size_t i, double t, const SegmentView& seg) const { return b_[i].eval(t, seg); }
  SymMatrix h(std::size_t i, double t, const SegmentView& seg) const;
  double sigma(std::size_t i, std::size_t j, double t, const SegmentView& seg) const {
    return sigma_[i * m_ + j].eval(t, seg);
  }

  /// <h^i(t, seg), q> for a symmetric q (evaluates each distinct entry once).
  double h_pair(std::size_t i, double t, const SegmentView& seg, const Eigen::MatrixXd& q) const;

  bool h_is_zero(std::size_t i) const noexcept { return h_zero_[i]; }

  /// Sum over all coefficients of the squared values at (t, 0): the (H2) quantity.
  double growth_at_zero(double t, double spacing) const;

 private:
  std::size_t d_;
  std::size_t m_;
  double r0_;
  std::vector<CoeffExpr> b_;
  std::vector<CoeffExpr> h_;
  std::vector<CoeffExpr> sigma_;
  std::vector<bool> h_zero_;
  AffineBound lip_bound_;
  AffineBound growth_bound_;
};

struct LipschitzEstimate {
  double estimate = 0.0;   // max probed discrepancy / ||xi - eta||^2
  double declared = 0.0;   // lip_bound(t)
  bool violation = false;  // estimate > declared
};

/// Empirical (H1) probe: random pairs with ||xi - eta|| <= radius on segments
/// sampled at `spacing`.
LipschitzEstimate estimate_lipschitz(const CoefficientSet& set, double t, std::size_t n_probes,
                                     double radius, std::uint64_t seed, double spacing);

}  // namespace gsde
