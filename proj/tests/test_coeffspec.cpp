#include "gsde/coeffspec.hpp"
#include "gsde/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gsde;

namespace {

const ParseContext kCtx{2, 0.25};

SegmentPath constant_segment(double c, std::size_t d = 1, double r0 = 0.25) {
  const std::vector<double> v(d, c);
  return SegmentPath::constant(r0, d, 0.0625, v);
}

// Random AST generator over the full grammar (non-negative literals only,
// since a negative literal is printed as a negation).
class ExprGen {
 public:
  explicit ExprGen(std::uint64_t seed) : rng_(seed) {}

  ExprPtr gen(int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 3 : 13);
    switch (pick(rng_)) {
      case 0:
        return leaf(ExprOp::constant);
      case 1:
        return leaf(ExprOp::time);
      case 2:
        return leaf(ExprOp::probe);
      case 3: {
        const ExprOp ops[] = {ExprOp::seg_avg, ExprOp::seg_min, ExprOp::seg_max};
        return leaf(ops[rng_() % 3]);
      }
      case 4:
      case 5:
      case 6:
      case 7:
      case 8: {
        const ExprOp ops[] = {ExprOp::add, ExprOp::sub, ExprOp::mul, ExprOp::min, ExprOp::max};
        return node(ops[rng_() % 5], gen(depth - 1), gen(depth - 1));
      }
      case 13: {
        auto n = std::make_shared<ExprNode>();
        n->op = ExprOp::clip;
        n->lhs = gen(depth - 1);
        const double a = small(), b = small();
        n->lo = -std::max(a, b);
        n->hi = std::min(a, b);
        return n;
      }
      default: {
        const ExprOp ops[] = {ExprOp::sin, ExprOp::cos, ExprOp::tanh, ExprOp::abs, ExprOp::neg};
        return node(ops[rng_() % 5], gen(depth - 1), nullptr);
      }
    }
  }

 private:
  double small() { return std::uniform_int_distribution<int>(0, 400)(rng_) / 100.0; }

  ExprPtr leaf(ExprOp op) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    if (op == ExprOp::constant) n->value = small();
    if (op == ExprOp::probe) {
      const double lags[] = {0.0, 0.0625, 0.125, 0.25, 0.1};
      n->value = lags[rng_() % 5];
    }
    if (op != ExprOp::constant && op != ExprOp::time) n->index = 1 + rng_() % 2;
    return n;
  }

  static ExprPtr node(ExprOp op, ExprPtr a, ExprPtr b) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  std::mt19937_64 rng_;
};

// Independent tree-walking evaluator for the scalarized expression.
double scalar_eval(const ExprNode& n, double t, double c) {
  switch (n.op) {
    case ExprOp::constant: return n.value;
    case ExprOp::time: return t;
    case ExprOp::probe:
    case ExprOp::seg_avg:
    case ExprOp::seg_min:
    case ExprOp::seg_max: return c;
    case ExprOp::add: return scalar_eval(*n.lhs, t, c) + scalar_eval(*n.rhs, t, c);
    case ExprOp::sub: return scalar_eval(*n.lhs, t, c) - scalar_eval(*n.rhs, t, c);
    case ExprOp::mul: return scalar_eval(*n.lhs, t, c) * scalar_eval(*n.rhs, t, c);
    case ExprOp::min: return std::min(scalar_eval(*n.lhs, t, c), scalar_eval(*n.rhs, t, c));
    case ExprOp::max: return std::max(scalar_eval(*n.lhs, t, c), scalar_eval(*n.rhs, t, c));
    case ExprOp::sin: return std::sin(scalar_eval(*n.lhs, t, c));
    case ExprOp::cos: return std::cos(scalar_eval(*n.lhs, t, c));
    case ExprOp::tanh: return std::tanh(scalar_eval(*n.lhs, t, c));
    case ExprOp::abs: return std::abs(scalar_eval(*n.lhs, t, c));
    case ExprOp::neg: return -scalar_eval(*n.lhs, t, c);
    case ExprOp::clip: return std::clamp(scalar_eval(*n.lhs, t, c), n.lo, n.hi);
  }
  return 0.0;
}

}  // namespace

TEST(Parse, DocumentedExamples) {
  EXPECT_TRUE(parse_coeff("0", kCtx).is_constant_zero());
  const CoeffExpr e = parse_coeff("-x[1](0) + 0.5*x[1](-0.25)", kCtx);
  for (double c : {-2.0, 0.0, 1.5, 3.0})
    EXPECT_DOUBLE_EQ(e.eval(0.0, constant_segment(c, 2)), -0.5 * c);
  EXPECT_THROW(parse_coeff("x[3](0)", kCtx), ParseError);
}

TEST(Parse, PrecedenceAndAssociativity) {
  const SegmentPath seg = constant_segment(0.0);
  EXPECT_EQ(parse_coeff("1 + 2*3", kCtx).eval(0.0, seg), 7.0);
  EXPECT_EQ(parse_coeff("8 - 3 - 2", kCtx).eval(0.0, seg), 3.0);
  EXPECT_EQ(parse_coeff("(8 - 3) * 2", kCtx).eval(0.0, seg), 10.0);
  EXPECT_EQ(parse_coeff("-2*3", kCtx).eval(0.0, seg), -6.0);
  EXPECT_EQ(parse_coeff("2*t + 1", kCtx).eval(1.5, seg), 4.0);
  EXPECT_EQ(parse_coeff("1.5e2", kCtx).eval(0.0, seg), 150.0);
}

TEST(Parse, ErrorsCarryPosition) {
  try {
    parse_coeff("1 +\n  foo(2)", kCtx);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 3u);
  }
  EXPECT_THROW(parse_coeff("", kCtx), ParseError);
  EXPECT_THROW(parse_coeff("x[1](-0.5)", kCtx), ParseError);   // lag beyond r0
  EXPECT_THROW(parse_coeff("x[1](0.1)", kCtx), ParseError);    // future value
  EXPECT_THROW(parse_coeff("x[0](0)", kCtx), ParseError);
  EXPECT_THROW(parse_coeff("1 / 2", kCtx), ParseError);        // no division
  EXPECT_THROW(parse_coeff("clip(x[1](0), 2, 1)", kCtx), ParseError);
  EXPECT_THROW(parse_coeff("(1 + 2", kCtx), ParseError);
  EXPECT_THROW(parse_coeff("x[1](0)", ParseContext{0, 0.0}), ParseError);
}

TEST(Eval, Reductions) {
  const SegmentPath seg(0.25, 1, 0.125, {-1.0, 0.0, 2.0});
  EXPECT_EQ(parse_coeff("max(x[1])", kCtx).eval(0.0, seg), 2.0);
  EXPECT_EQ(parse_coeff("min(x[1])", kCtx).eval(0.0, seg), -1.0);
  // Trapezoid: (0.5*(-1) + 0 + 0.5*2) / 2
  EXPECT_DOUBLE_EQ(parse_coeff("avg(x[1])", kCtx).eval(0.0, seg), 0.25);
  EXPECT_EQ(parse_coeff("max(x[1](0), 5)", kCtx).eval(0.0, seg), 5.0);
  EXPECT_NEAR(parse_coeff("tanh(x[1](-0.25))", kCtx).eval(0.0, constant_segment(0.5)), 0.462117, 1e-6);
  EXPECT_EQ(parse_coeff("clip(x[1](0), -1, 1.5)", kCtx).eval(0.0, seg), 1.5);
  EXPECT_DOUBLE_EQ(parse_coeff("x[1](-0.0625)", kCtx).eval(0.0, seg), 1.0);  // interpolated
}

TEST(Eval, ShapeMismatchRejected) {
  const CoeffExpr e = parse_coeff("x[2](0)", kCtx);
  EXPECT_THROW(e.eval(0.0, constant_segment(1.0, 1)), std::invalid_argument);
  const CoeffExpr lag = parse_coeff("x[1](-0.25)", kCtx);
  EXPECT_THROW(lag.eval(0.0, constant_segment(1.0, 1, 0.125)), std::invalid_argument);
}

TEST(Property, PrintParseRoundTrip) {
  ExprGen gen(41);
  for (int trial = 0; trial < 3000; ++trial) {
    const CoeffExpr e(gen.gen(5));
    const std::string text = e.to_string();
    const CoeffExpr back = parse_coeff(text, kCtx);
    ASSERT_TRUE(back == e) << text;
    ASSERT_EQ(back.to_string(), text);
  }
}

TEST(Property, ConstantSegmentMatchesScalarized) {
  ExprGen gen(42);
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 3000; ++trial) {
    const CoeffExpr e(gen.gen(5));
    const double c = u(rng), t = u(rng) + 2.0;
    ASSERT_DOUBLE_EQ(e.eval(t, constant_segment(c, 2)), scalar_eval(*e.root(), t, c)) << e.to_string();
  }
}

TEST(Property, SyntacticLipschitzBoundHolds) {
  ExprGen gen(44);
  std::mt19937_64 rng(45);
  const double radius = 2.0, t_max = 3.0;
  std::uniform_real_distribution<double> u(-radius, radius);
  std::uniform_real_distribution<double> ut(0.0, t_max);
  for (int trial = 0; trial < 3000; ++trial) {
    const CoeffExpr e(gen.gen(4));
    const ExprBound b = e.bound(radius, t_max);
    std::vector<double> xa(10), xb(10);
    for (auto& v : xa) v = u(rng);
    for (auto& v : xb) v = u(rng);
    const SegmentPath a(0.25, 2, 0.0625, xa), bb(0.25, 2, 0.0625, xb);
    const double t = ut(rng);
    const double va = e.eval(t, a), vb = e.eval(t, bb);
    const double dist = segment_distance(a, bb);
    ASSERT_LE(std::abs(va - vb), b.lipschitz * dist * (1 + 1e-12) + 1e-12) << e.to_string();
    ASSERT_LE(std::abs(va), b.magnitude * (1 + 1e-12) + 1e-12) << e.to_string();
  }
}

TEST(Bound, GlobalFlag) {
  EXPECT_TRUE(parse_coeff("2*x[1](0) + sin(x[2](0))", kCtx).bound(1.0, 1.0).global);
  EXPECT_FALSE(parse_coeff("x[1](0)*x[2](0)", kCtx).bound(1.0, 1.0).global);
  EXPECT_TRUE(parse_coeff("t*x[1](0)", kCtx).bound(1.0, 1.0).global);
}

TEST(CoefficientSet, HIsSymmetrized) {
  const CoefficientTexts texts{{"0"}, {"x[1](0)", "1", "3", "2"}, {"0", "0"}};
  const CoefficientSet set = CoefficientSet::parse(1, 2, 0.0, texts);
  const SegmentPath seg = constant_segment(5.0, 1, 0.0);
  const SymMatrix h = set.h(0, 0.0, seg.view());
  EXPECT_EQ(h(0, 1), 2.0);
  EXPECT_EQ(h(1, 0), 2.0);
  EXPECT_EQ(h(0, 0), 5.0);
  Eigen::MatrixXd q(2, 2);
  q << 1.0, 0.5, 0.5, 2.0;
  EXPECT_DOUBLE_EQ(set.h_pair(0, 0.0, seg.view(), q), 5.0 + 2.0 * 0.5 * 2.0 + 2.0 * 2.0);
  EXPECT_FALSE(set.h_is_zero(0));
}

TEST(CoefficientSet, ValidatesShapes) {
  const CoefficientTexts bad{{"0", "0"}, {"0"}, {"0"}};
  EXPECT_THROW(CoefficientSet::parse(1, 1, 0.0, bad), std::invalid_argument);
  const CoefficientTexts blank{{""}, {""}, {""}};
  const CoefficientSet z = CoefficientSet::parse(1, 1, 0.0, blank);
  EXPECT_TRUE(z.h_is_zero(0));
  EXPECT_EQ(z.growth_at_zero(0.0, 0.0), 0.0);
}

TEST(Lipschitz, DocumentedExamples) {
  const CoefficientSet constant = CoefficientSet::parse(1, 1, 0.25, {{"1"}, {"2"}, {"3"}}, {1.0, 0.0});
  EXPECT_EQ(estimate_lipschitz(constant, 0.0, 300, 1.0, 1, 0.0625).estimate, 0.0);

  const CoefficientSet id = CoefficientSet::parse(1, 1, 0.25, {{"x[1](0)"}, {"0"}, {"0"}}, {1.0, 0.0});
  const auto e1 = estimate_lipschitz(id, 0.0, 3000, 1.0, 2, 0.0625);
  EXPECT_LE(e1.estimate, 1.0 + 1e-6);
  EXPECT_GT(e1.estimate, 0.99);
  EXPECT_FALSE(e1.violation);

  const CoefficientSet two = CoefficientSet::parse(1, 1, 0.25, {{"2*x[1](-0.25)"}, {"0"}, {"0"}}, {1.0, 0.0});
  EXPECT_TRUE(estimate_lipschitz(two, 0.0, 300, 1.0, 3, 0.0625).violation);
}
