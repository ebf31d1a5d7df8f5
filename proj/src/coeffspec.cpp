#include "gsde/coeffspec.hpp"

#include "gsde/errors.hpp"
#include "gsde/random.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace gsde {

namespace {

ExprPtr make_node(ExprOp op, ExprPtr lhs = nullptr, ExprPtr rhs = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

ExprPtr make_constant(double c) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::constant;
  n->value = c;
  return n;
}

bool is_binary(ExprOp op) {
  switch (op) {
    case ExprOp::add:
    case ExprOp::sub:
    case ExprOp::mul:
    case ExprOp::min:
    case ExprOp::max:
      return true;
    default:
      return false;
  }
}

bool is_unary(ExprOp op) {
  switch (op) {
    case ExprOp::sin:
    case ExprOp::cos:
    case ExprOp::tanh:
    case ExprOp::abs:
    case ExprOp::neg:
    case ExprOp::clip:
      return true;
    default:
      return false;
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void print(const ExprNode& n, std::string& out) {
  switch (n.op) {
    case ExprOp::constant:
      out += format_number(n.value);
      return;
    case ExprOp::time:
      out += "t";
      return;
    case ExprOp::probe:
      out += "x[" + std::to_string(n.index) + "](";
      out += n.value == 0.0 ? std::string("0") : "-" + format_number(n.value);
      out += ")";
      return;
    case ExprOp::seg_avg:
    case ExprOp::seg_min:
    case ExprOp::seg_max: {
      const char* name = n.op == ExprOp::seg_avg ? "avg" : n.op == ExprOp::seg_min ? "min" : "max";
      out += std::string(name) + "(x[" + std::to_string(n.index) + "])";
      return;
    }
    case ExprOp::add:
    case ExprOp::sub:
    case ExprOp::mul: {
      const char* sym = n.op == ExprOp::add ? " + " : n.op == ExprOp::sub ? " - " : " * ";
      out += "(";
      print(*n.lhs, out);
      out += sym;
      print(*n.rhs, out);
      out += ")";
      return;
    }
    case ExprOp::min:
    case ExprOp::max:
      out += n.op == ExprOp::min ? "min(" : "max(";
      print(*n.lhs, out);
      out += ", ";
      print(*n.rhs, out);
      out += ")";
      return;
    case ExprOp::sin:
    case ExprOp::cos:
    case ExprOp::tanh:
    case ExprOp::abs: {
      const char* name = n.op == ExprOp::sin    ? "sin"
                         : n.op == ExprOp::cos  ? "cos"
                         : n.op == ExprOp::tanh ? "tanh"
                                                : "abs";
      out += std::string(name) + "(";
      print(*n.lhs, out);
      out += ")";
      return;
    }
    case ExprOp::neg:
      out += "-";
      print(*n.lhs, out);
      return;
    case ExprOp::clip:
      out += "clip(";
      print(*n.lhs, out);
      out += ", " + format_number(n.lo) + ", " + format_number(n.hi) + ")";
      return;
  }
}

// ---------------------------------------------------------------------------
// Recursive-descent parser

class Parser {
 public:
  Parser(std::string_view text, const ParseContext& ctx) : text_(text), ctx_(ctx) {}

  ExprPtr parse() {
    skip_ws();
    if (at_end()) fail("empty expression");
    ExprPtr e = expr();
    skip_ws();
    if (!at_end()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }

  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k < at && k < text_.size(); ++k) {
      if (text_[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg, line, col);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (at_end()) fail(std::string("expected '") + c + "' but reached end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    for (;;) {
      skip_ws();
      if (peek() == '+') {
        ++pos_;
        lhs = make_node(ExprOp::add, lhs, term());
      } else if (peek() == '-') {
        ++pos_;
        lhs = make_node(ExprOp::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr term() {
    ExprPtr lhs = factor();
    while (accept('*')) lhs = make_node(ExprOp::mul, lhs, factor());
    return lhs;
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (peek() == '.') {
      ++pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (pos_ == start || (pos_ == start + 1 && text_[start] == '.')) fail_at("expected a number", start);
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        pos_ = save;
      } else {
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_ || !std::isfinite(v))
      fail_at("malformed number", start);
    return v;
  }

  double signed_number() {
    skip_ws();
    const bool negative = accept('-');
    const double v = number();
    return negative ? -v : v;
  }

  std::size_t component_index() {
    skip_ws();
    const std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (pos_ == start) fail("expected a component index");
    std::size_t v = 0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc()) fail_at("malformed component index", start);
    if (ctx_.d == 0) fail_at("segment probes are not allowed here", start);
    if (v < 1 || v > ctx_.d)
      fail_at("component index " + std::to_string(v) + " outside 1.." + std::to_string(ctx_.d),
              start);
    return v;
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (!at_end() && std::isalpha(static_cast<unsigned char>(peek()))) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  // 'x' '[' int ']' already positioned after "x"
  std::size_t bracket_index() {
    expect('[');
    const std::size_t i = component_index();
    expect(']');
    return i;
  }

  ExprPtr probe() {
    const std::size_t i = bracket_index();
    expect('(');
    skip_ws();
    const std::size_t lag_pos = pos_;
    const bool past = accept('-');
    const double v = number();
    expect(')');
    const double lag = past ? v : -v;
    if (lag < 0.0 || lag > ctx_.r0 + 1e-12)
      fail_at("lag " + format_number(lag) + " outside [0, " + format_number(ctx_.r0) + "]",
              lag_pos);
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::probe;
    n->index = i;
    n->value = lag == 0.0 ? 0.0 : lag;
    return n;
  }

  ExprPtr reduction(ExprOp op) {
    skip_ws();
    const std::size_t at = pos_;
    if (identifier() != "x") fail_at("expected x[i] in segment reduction", at);
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->index = bracket_index();
    expect(')');
    return n;
  }

  // After "min(" or "max(": either a segment reduction or a binary call.
  bool looks_like_reduction() {
    const std::size_t save = pos_;
    bool ok = false;
    skip_ws();
    if (peek() == 'x') {
      ++pos_;
      skip_ws();
      if (peek() == '[') {
        ++pos_;
        skip_ws();
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        skip_ws();
        if (peek() == ']') {
          ++pos_;
          skip_ws();
          ok = peek() == ')';
        }
      }
    }
    pos_ = save;
    return ok;
  }

  ExprPtr factor() {
    skip_ws();
    if (at_end()) fail("unexpected end of input");
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return make_constant(number());
    if (c == '-') {
      ++pos_;
      return make_node(ExprOp::neg, factor());
    }
    if (c == '(') {
      ++pos_;
      ExprPtr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t at = pos_;
      const std::string id = identifier();
      if (id == "t") return make_node(ExprOp::time);
      if (id == "x") return probe();
      if (id == "sin" || id == "cos" || id == "tanh" || id == "abs") {
        const ExprOp op = id == "sin"    ? ExprOp::sin
                          : id == "cos"  ? ExprOp::cos
                          : id == "tanh" ? ExprOp::tanh
                                         : ExprOp::abs;
        expect('(');
        ExprPtr arg = expr();
        expect(')');
        return make_node(op, arg);
      }
      if (id == "min" || id == "max") {
        expect('(');
        if (looks_like_reduction()) return reduction(id == "min" ? ExprOp::seg_min : ExprOp::seg_max);
        ExprPtr a = expr();
        expect(',');
        ExprPtr b = expr();
        expect(')');
        return make_node(id == "min" ? ExprOp::min : ExprOp::max, a, b);
      }
      if (id == "avg") {
        expect('(');
        return reduction(ExprOp::seg_avg);
      }
      if (id == "clip") {
        expect('(');
        ExprPtr a = expr();
        expect(',');
        const std::size_t lo_pos = pos_;
        const double lo = signed_number();
        expect(',');
        const double hi = signed_number();
        expect(')');
        if (lo > hi) fail_at("clip lower bound exceeds upper bound", lo_pos);
        auto n = std::make_shared<ExprNode>();
        n->op = ExprOp::clip;
        n->lhs = a;
        n->lo = lo;
        n->hi = hi;
        return n;
      }
      fail_at("unknown identifier '" + id + "'", at);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view text_;
  ParseContext ctx_;
  std::size_t pos_ = 0;
};

ExprBound bound_of(const ExprNode& n, double radius, double t_max) {
  switch (n.op) {
    case ExprOp::constant:
      return {0.0, std::abs(n.value), true};
    case ExprOp::time:
      return {0.0, t_max, true};
    case ExprOp::probe:
    case ExprOp::seg_avg:
    case ExprOp::seg_min:
    case ExprOp::seg_max:
      return {1.0, radius, true};
    default:
      break;
  }
  const ExprBound a = bound_of(*n.lhs, radius, t_max);
  if (is_binary(n.op)) {
    const ExprBound b = bound_of(*n.rhs, radius, t_max);
    switch (n.op) {
      case ExprOp::add:
      case ExprOp::sub:
        return {a.lipschitz + b.lipschitz, a.magnitude + b.magnitude, a.global && b.global};
      case ExprOp::mul:
        return {a.lipschitz * b.magnitude + a.magnitude * b.lipschitz, a.magnitude * b.magnitude,
                a.global && b.global && !(a.lipschitz > 0.0 && b.lipschitz > 0.0)};
      default:  // min, max
        return {std::max(a.lipschitz, b.lipschitz), std::max(a.magnitude, b.magnitude),
                a.global && b.global};
    }
  }
  switch (n.op) {
    case ExprOp::sin:
    case ExprOp::tanh:
      return {a.lipschitz, std::min(1.0, a.magnitude), a.global};
    case ExprOp::cos:
      return {a.lipschitz, 1.0, a.global};
    case ExprOp::clip:
      return {a.lipschitz, std::min(a.magnitude, std::max(std::abs(n.lo), std::abs(n.hi))),
              a.global};
    default:  // abs, neg
      return a;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// CoeffExpr

CoeffExpr::CoeffExpr() : CoeffExpr(make_constant(0.0)) {}

CoeffExpr::CoeffExpr(ExprPtr root) : root_(std::move(root)) {
  if (!root_) throw std::invalid_argument("CoeffExpr: null expression");
  compile();
}

CoeffExpr CoeffExpr::constant(double c) { return CoeffExpr(make_constant(c)); }

void CoeffExpr::compile() {
  program_.clear();
  std::size_t depth = 0;
  stack_depth_ = 0;
  max_index_ = 0;
  max_lag_ = 0.0;
  auto emit = [&](auto&& self, const ExprNode& n) -> void {
    if (n.lhs) self(self, *n.lhs);
    if (n.rhs) self(self, *n.rhs);
    program_.push_back(Instr{n.op, n.value, n.index, n.lo, n.hi});
    if (is_binary(n.op)) {
      --depth;
    } else if (!is_unary(n.op)) {
      ++depth;
    }
    stack_depth_ = std::max(stack_depth_, depth);
    if (n.op == ExprOp::probe || n.op == ExprOp::seg_avg || n.op == ExprOp::seg_min ||
        n.op == ExprOp::seg_max)
      max_index_ = std::max(max_index_, n.index);
    if (n.op == ExprOp::probe) max_lag_ = std::max(max_lag_, n.value);
  };
  emit(emit, *root_);
}

bool CoeffExpr::is_constant_zero() const noexcept {
  return root_->op == ExprOp::constant && root_->value == 0.0;
}

double CoeffExpr::eval(double t, const SegmentView& seg) const {
  if (max_index_ > seg.dim())
    throw std::invalid_argument("coefficient probes component " + std::to_string(max_index_) +
                                " of a " + std::to_string(seg.dim()) + "-dimensional segment");
  if (max_lag_ > seg.r0() + 1e-12)
    throw std::invalid_argument("coefficient lag exceeds the segment length");
  constexpr std::size_t kInline = 32;
  std::array<double, kInline> inline_stack{};
  std::vector<double> heap_stack;
  double* stack = inline_stack.data();
  if (stack_depth_ > kInline) {
    heap_stack.resize(stack_depth_);
    stack = heap_stack.data();
  }
  std::size_t top = 0;
  for (const Instr& in : program_) {
    switch (in.op) {
      case ExprOp::constant:
        stack[top++] = in.value;
        break;
      case ExprOp::time:
        stack[top++] = t;
        break;
      case ExprOp::probe:
        stack[top++] = seg.eval(-in.value, in.index - 1);
        break;
      case ExprOp::seg_avg: {
        const std::size_t n = seg.size();
        const std::size_t i = in.index - 1;
        if (n == 1) {
          stack[top++] = seg.sample(0, i);
        } else {
          double s = 0.5 * (seg.sample(0, i) + seg.sample(n - 1, i));
          for (std::size_t k = 1; k + 1 < n; ++k) s += seg.sample(k, i);
          stack[top++] = s / static_cast<double>(n - 1);
        }
        break;
      }
      case ExprOp::seg_min:
      case ExprOp::seg_max: {
        const std::size_t i = in.index - 1;
        double v = seg.sample(0, i);
        for (std::size_t k = 1; k < seg.size(); ++k)
          v = in.op == ExprOp::seg_min ? std::min(v, seg.sample(k, i)) : std::max(v, seg.sample(k, i));
        stack[top++] = v;
        break;
      }
      case ExprOp::add:
        --top;
        stack[top - 1] += stack[top];
        break;
      case ExprOp::sub:
        --top;
        stack[top - 1] -= stack[top];
        break;
      case ExprOp::mul:
        --top;
        stack[top - 1] *= stack[top];
        break;
      case ExprOp::min:
        --top;
        stack[top - 1] = std::min(stack[top - 1], stack[top]);
        break;
      case ExprOp::max:
        --top;
        stack[top - 1] = std::max(stack[top - 1], stack[top]);
        break;
      case ExprOp::sin:
        stack[top - 1] = std::sin(stack[top - 1]);
        break;
      case ExprOp::cos:
        stack[top - 1] = std::cos(stack[top - 1]);
        break;
      case ExprOp::tanh:
        stack[top - 1] = std::tanh(stack[top - 1]);
        break;
      case ExprOp::abs:
        stack[top - 1] = std::abs(stack[top - 1]);
        break;
      case ExprOp::neg:
        stack[top - 1] = -stack[top - 1];
        break;
      case ExprOp::clip:
        stack[top - 1] = std::clamp(stack[top - 1], in.lo, in.hi);
        break;
    }
  }
  return stack[0];
}

std::string CoeffExpr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

ExprBound CoeffExpr::bound(double radius, double t_max) const {
  return bound_of(*root_, radius, t_max);
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op) return false;
  switch (a->op) {
    case ExprOp::constant:
    case ExprOp::probe:
      if (a->value != b->value) return false;
      break;
    case ExprOp::clip:
      if (a->lo != b->lo || a->hi != b->hi) return false;
      break;
    default:
      break;
  }
  if (a->index != b->index) return false;
  return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
}

bool operator==(const CoeffExpr& a, const CoeffExpr& b) {
  return structurally_equal(a.root_, b.root_);
}

CoeffExpr parse_coeff(std::string_view text, const ParseContext& ctx) {
  return CoeffExpr(Parser(text, ctx).parse());
}

// ---------------------------------------------------------------------------
// CoefficientSet

CoefficientSet::CoefficientSet(std::size_t d, std::size_t m, double r0, std::vector<CoeffExpr> b,
                               std::vector<CoeffExpr> h, std::vector<CoeffExpr> sigma,
                               AffineBound lip_bound, AffineBound growth_bound)
    : d_(d),
      m_(m),
      r0_(r0),
      b_(std::move(b)),
      h_(std::move(h)),
      sigma_(std::move(sigma)),
      lip_bound_(lip_bound),
      growth_bound_(growth_bound) {
  if (d_ < 1 || m_ < 1) throw std::invalid_argument("coefficient set requires d, m >= 1");
  if (r0_ < 0.0) throw std::invalid_argument("coefficient set requires r0 >= 0");
  if (b_.size() != d_) throw std::invalid_argument("drift b must have d entries");
  if (h_.size() != d_ * m_ * m_) throw std::invalid_argument("h must have d*m*m entries");
  if (sigma_.size() != d_ * m_) throw std::invalid_argument("sigma must have d*m entries");
  if (lip_bound_.c0 < 0.0 || lip_bound_.c1 < 0.0 || growth_bound_.c0 < 0.0 ||
      growth_bound_.c1 < 0.0)
    throw std::invalid_argument("declared bounds must be non-negative and non-decreasing");
  auto check = [&](const CoeffExpr& e, const char* what) {
    if (e.max_index() > d_)
      throw std::invalid_argument(std::string(what) + " probes a component beyond d");
    if (e.max_lag() > r0_ + 1e-12)
      throw std::invalid_argument(std::string(what) + " uses a lag beyond r0");
  };
  for (const auto& e : b_) check(e, "b");
  for (const auto& e : h_) check(e, "h");
  for (const auto& e : sigma_) check(e, "sigma");

  h_zero_.assign(d_, true);
  for (std::size_t i = 0; i < d_; ++i) {
    for (std::size_t k = 0; k < m_; ++k) {
      for (std::size_t l = k + 1; l < m_; ++l) {
        CoeffExpr& upper = h_[(i * m_ + k) * m_ + l];
        CoeffExpr& lower = h_[(i * m_ + l) * m_ + k];
        if (!(upper == lower)) {
          upper = CoeffExpr(make_node(ExprOp::mul, make_constant(0.5),
                                      make_node(ExprOp::add, upper.root(), lower.root())));
        }
        lower = upper;
      }
    }
    for (std::size_t e = 0; e < m_ * m_; ++e)
      if (!h_[i * m_ * m_ + e].is_constant_zero()) h_zero_[i] = false;
  }
}

CoefficientSet CoefficientSet::parse(std::size_t d, std::size_t m, double r0,
                                     const CoefficientTexts& texts, AffineBound lip_bound,
                                     AffineBound growth_bound) {
  const ParseContext ctx{d, r0};
  auto parse_all = [&](const std::vector<std::string>& src, std::size_t n, const char* what) {
    if (src.size() != n)
      throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) +
                                  " entries, got " + std::to_string(src.size()));
    std::vector<CoeffExpr> out;
    out.reserve(n);
    for (const auto& s : src) {
      const bool blank = s.find_first_not_of(" \t\r\n") == std::string::npos;
      out.push_back(blank ? CoeffExpr() : parse_coeff(s, ctx));
    }
    return out;
  };
  return CoefficientSet(d, m, r0, parse_all(texts.b, d, "b"), parse_all(texts.h, d * m * m, "h"),
                        parse_all(texts.sigma, d * m, "sigma"), lip_bound, growth_bound);
}

SymMatrix CoefficientSet::h(std::size_t i, double t, const SegmentView& seg) const {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
  for (std::size_t k = 0; k < m_; ++k) {
    for (std::size_t l = k; l < m_; ++l) {
      const double x = h_expr(i, k, l).eval(t, seg);
      v(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = x;
      v(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = x;
    }
  }
  return SymMatrix(v);
}

double CoefficientSet::h_pair(std::size_t i, double t, const SegmentView& seg,
                              const Eigen::MatrixXd& q) const {
  if (h_zero_[i]) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < m_; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const CoeffExpr& diag = h_expr(i, k, k);
    if (!diag.is_constant_zero()) s += diag.eval(t, seg) * q(kk, kk);
    for (std::size_t l = k + 1; l < m_; ++l) {
      const CoeffExpr& e = h_expr(i, k, l);
      if (e.is_constant_zero()) continue;
      const auto ll = static_cast<Eigen::Index>(l);
      s += e.eval(t, seg) * (q(kk, ll) + q(ll, kk));
    }
  }
  return s;
}

double CoefficientSet::growth_at_zero(double t, double spacing) const {
  const std::vector<double> zeros(d_, 0.0);
  const SegmentPath zero = SegmentPath::constant(r0_, d_, spacing, zeros);
  const SegmentView v = zero.view();
  double s = 0.0;
  for (const auto& e : b_) s += std::pow(e.eval(t, v), 2);
  for (const auto& e : h_) s += std::pow(e.eval(t, v), 2);
  for (const auto& e : sigma_) s += std::pow(e.eval(t, v), 2);
  return s;
}

LipschitzEstimate estimate_lipschitz(const CoefficientSet& set, double t, std::size_t n_probes,
                                     double radius, std::uint64_t seed, double spacing) {
  if (n_probes < 1) throw std::invalid_argument("estimate_lipschitz: n_probes must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("estimate_lipschitz: radius must be > 0");
  const std::size_t d = set.d();
  const std::size_t n = segment_sample_count(set.r0(), spacing);

  LipschitzEstimate est;
  est.declared = set.lip_bound()(t);
  std::vector<double> xi(n * d);
  std::vector<double> eta(n * d);
  for (std::size_t p = 0; p < n_probes; ++p) {
    CounterRng rng(seed, p);
    for (double& v : xi) v = rng.uniform(-radius, radius);
    const double rho = radius * rng.uniform();
    switch (p % 3) {
      case 0:  // samplewise perturbation
        for (std::size_t k = 0; k < xi.size(); ++k) eta[k] = xi[k] + rng.uniform(-rho, rho);
        break;
      case 1: {  // constant shift
        std::vector<double> shift(d);
        for (double& s : shift) s = rng.uniform(-rho, rho);
        for (std::size_t k = 0; k < xi.size(); ++k) eta[k] = xi[k] + shift[k % d];
        break;
      }
      default: {  // single-sample spike
        eta = xi;
        eta[rng.index(eta.size())] += rng.uniform() < 0.5 ? -rho : rho;
        break;
      }
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) norm = std::max(norm, std::abs(xi[k] - eta[k]));
    if (norm == 0.0) continue;
    const SegmentView a(xi, d, set.r0(), spacing);
    const SegmentView b(eta, d, set.r0(), spacing);
    double lhs = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      lhs += std::pow(set.drift(i, t, a) - set.drift(i, t, b), 2);
      for (std::size_t k = 0; k < set.m(); ++k) {
        for (std::size_t l = 0; l < set.m(); ++l)
          lhs += std::pow(set.h_expr(i, k, l).eval(t, a) - set.h_expr(i, k, l).eval(t, b), 2);
        lhs += std::pow(set.sigma(i, k, t, a) - set.sigma(i, k, t, b), 2);
      }
    }
    est.estimate = std::max(est.estimate, lhs / (norm * norm));
  }
  est.violation = est.estimate > est.declared;
  return est;
}

}  // namespace gsde
