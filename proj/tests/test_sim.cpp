#include "gsde/errors.hpp"
#include "gsde/sim.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace gsde;

namespace {

CoefficientSet scalar_set(const std::string& b, const std::string& h, const std::string& sigma, double r0) {
  return CoefficientSet::parse(1, 1, r0, CoefficientTexts{{b}, {h}, {sigma}});
}

const VolBounds kB1(1.0, 2.0, 1);

}  // namespace

TEST(Euler, SerialAndParallelAreBitIdentical) {
  const double dt = 1.0 / 128;
  const CoefficientSet x = scalar_set("-x[1](0) + 0.5*x[1](-0.25)", "0.1*tanh(x[1](-0.25))",
                                      "0.5 + 0.2*sin(x[1](0))", 0.25);
  const CoupledSystem sys{x, x, SegmentPath::constant(0.25, 1, dt, std::vector<double>{0.0}),
                          SegmentPath::constant(0.25, 1, dt, std::vector<double>{0.5})};
  const auto pol = VolatilityPolicy::feedback(1, 0.0, SymMatrix::identity(1, 1.0),
                                              SymMatrix::identity(1, 4.0), kB1);
  const DriverBatch batch = drive(pol, TimeGrid(0.0, 1.0, dt), 64, 3);
  const TrajectoryPair a = simulate_pair(sys, batch, Exec::serial);
  const TrajectoryPair b = simulate_pair(sys, batch, Exec::parallel);
  for (std::size_t p = 0; p < 64; ++p) {
    const auto ha = a.history(Which::x, p), hb = b.history(Which::x, p);
    ASSERT_TRUE(std::equal(ha.begin(), ha.end(), hb.begin()));
    const auto ga = a.history(Which::xbar, p), gb = b.history(Which::xbar, p);
    ASSERT_TRUE(std::equal(ga.begin(), ga.end(), gb.begin()));
  }
}

// Hand-computed recursion with lagged drift and h term.
TEST(Euler, MatchesHandRecursion) {
  const double dt = 0.125, r0 = 0.25;
  const CoefficientSet x = scalar_set("-x[1](0) + 2*x[1](-0.25)", "0.5*x[1](0)", "1 + x[1](-0.125)", r0);
  const SegmentPath init(r0, 1, dt, {1.0, 2.0, 3.0});
  const auto pol = VolatilityPolicy::constant(SymMatrix::identity(1, 3.0), kB1);
  const DriverBatch batch = drive(pol, TimeGrid(0.0, 0.5, dt), 1, 11);
  const TrajectoryPair tr = simulate_pair(CoupledSystem{x, x, init, init}, batch, Exec::serial);
  const DriverPath drv = batch.path(0);

  std::vector<double> h = {1.0, 2.0, 3.0};
  for (std::size_t k = 0; k < 4; ++k) {
    const double now = h[k + 2], lag1 = h[k + 1], lag2 = h[k];
    const double next = now + (-now + 2 * lag2) * dt + 0.5 * now * 3.0 * dt + (1 + lag1) * drv.dB[k];
    h.push_back(next);
  }
  ASSERT_EQ(tr.n_times(), h.size());
  for (std::size_t idx = 0; idx < h.size(); ++idx)
    EXPECT_NEAR(tr.state(Which::x, 0, idx, 0), h[idx], 1e-13 * (1 + std::abs(h[idx])));
  EXPECT_EQ(tr.time_at(0), -0.25);
  EXPECT_EQ(tr.time_at(2), 0.0);
  const SegmentPath seg = tr.segment_at(Which::x, 0, 0.25);
  EXPECT_EQ(seg.samples(), (std::vector<double>{h[2], h[3], h[4]}));
}

// b(x) = -x[1](0) with a shared additive noise: the difference decays
// deterministically, so the order is preserved on every path.
TEST(Euler, CoupledMonotonicityOnEveryPath) {
  const double dt = 1.0 / 256;
  const CoefficientSet x = scalar_set("-x[1](0)", "", "0.7", 0.0);
  const CoupledSystem sys{x, x, SegmentPath::constant(0.0, 1, dt, std::vector<double>{-0.3}),
                          SegmentPath::constant(0.0, 1, dt, std::vector<double>{0.2})};
  const auto pol = VolatilityPolicy::piecewise({0.5}, {SymMatrix::identity(1, 1.0), SymMatrix::identity(1, 4.0)}, kB1);
  const TrajectoryPair tr = simulate_pair(sys, drive(pol, TimeGrid(0.0, 1.0, dt), 200, 5));
  for (std::size_t p = 0; p < 200; ++p)
    for (std::size_t idx = 0; idx < tr.n_times(); ++idx)
      ASSERT_LE(tr.state(Which::x, p, idx, 0), tr.state(Which::xbar, p, idx, 0));
}

TEST(Euler, IdenticalSystemsCoincide) {
  const double dt = 1.0 / 64;
  const CoefficientSet x = CoefficientSet::parse(
      2, 2, 0.125,
      CoefficientTexts{{"x[2](-0.125)", "-x[1](0)"}, {"0.1", "", "", "0", "", "", "", "0.2*x[1](0)"},
                       {"1", "0", "0.3*x[2](0)", "1"}});
  const SegmentPath init = SegmentPath::from_function(0.125, 2, dt, [](double s, std::size_t i) { return s + i; });
  const auto pol = VolatilityPolicy::constant(SymMatrix::identity(2, 2.0), VolBounds(1.0, 2.0, 2));
  const TrajectoryPair tr = simulate_pair(CoupledSystem{x, x, init, init}, drive(pol, TimeGrid(0.0, 1.0, dt), 16, 2));
  for (std::size_t p = 0; p < 16; ++p) {
    const auto a = tr.history(Which::x, p), b = tr.history(Which::xbar, p);
    ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(Euler, DivergenceReportsPathAndStep) {
  const double dt = 1.0 / 64;
  const CoefficientSet x = scalar_set("x[1](0)*x[1](0)*1000", "", "0", 0.0);
  const SegmentPath init = SegmentPath::constant(0.0, 1, dt, std::vector<double>{10.0});
  const auto pol = VolatilityPolicy::constant(SymMatrix::identity(1, 1.0), kB1);
  try {
    simulate_pair(CoupledSystem{x, x, init, init}, drive(pol, TimeGrid(0.0, 1.0, dt), 4, 1), Exec::parallel);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.path(), 0u);
    EXPECT_GE(e.step(), 1u);
    EXPECT_NE(std::string(e.what()).find("path 0"), std::string::npos);
  }
}

TEST(Euler, ValidationErrors) {
  const double dt = 1.0 / 64;
  const CoefficientSet x = scalar_set("0", "", "1", 0.25);
  const SegmentPath good = SegmentPath::constant(0.25, 1, dt, std::vector<double>{0.0});
  const SegmentPath coarse = SegmentPath::constant(0.25, 1, 2 * dt, std::vector<double>{0.0});
  const auto pol = VolatilityPolicy::constant(SymMatrix::identity(1, 1.0), kB1);
  const TimeGrid grid(0.0, 1.0, dt);
  EXPECT_NO_THROW(CoupledSystem({x, x, good, good}).validate(grid, 1));
  EXPECT_THROW(CoupledSystem({x, x, coarse, good}).validate(grid, 1), std::invalid_argument);
  EXPECT_THROW(CoupledSystem({x, x, good, good}).validate(grid, 2), std::invalid_argument);
  EXPECT_THROW(CoupledSystem({x, x, good, good}).validate(TimeGrid(0.0, 1.0, 0.1), 1), std::invalid_argument);
  (void)pol;
}

TEST(Euler, TrajectoryCsvHeader) {
  const double dt = 0.25;
  const CoefficientSet x = scalar_set("0", "", "0", 0.0);
  const SegmentPath init = SegmentPath::constant(0.0, 1, dt, std::vector<double>{1.0});
  const auto pol = VolatilityPolicy::constant(SymMatrix::identity(1, 1.0), kB1);
  const TrajectoryPair tr = simulate_pair(CoupledSystem{x, x, init, init}, drive(pol, TimeGrid(0.0, 0.5, dt), 1, 1));
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  EXPECT_EQ(os.str(), "path,t,X_1,Xbar_1\n0,0,1,1\n0,0.25,1,1\n0,0.5,1,1\n");
}
