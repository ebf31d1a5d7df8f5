#include "gsde/gexpect.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace gsde;

namespace {

const VolBounds kB1(1.0, 2.0, 1);

MonteCarloSetup setup_1d(std::size_t n_paths, std::uint64_t seed) {
  return MonteCarloSetup{TimeGrid(0.0, 1.0, 1.0 / 64), n_paths, seed, std::nullopt, Exec::parallel};
}

double terminal_b(const PathSample& s) { return s.B(s.driver.n_steps, 0); }

}  // namespace

TEST(Summarize, MatchesTwoPassOracle) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd(1e3, 2.0);
  std::vector<double> v(5001);
  for (auto& x : v) x = nd(rng);
  const PolicyEstimate e = summarize("a", "", v);
  const auto [mean, se] = oracle::mean_se(v);
  EXPECT_NEAR(e.mean, mean, 1e-12 * std::abs(mean));
  EXPECT_NEAR(e.se, se, 1e-9 * se);
  EXPECT_EQ(e.n_paths, v.size());
  EXPECT_THROW(summarize("a", "", std::vector<double>{}), std::invalid_argument);
}

TEST(Summarize, ConstantsAreExact) {
  const std::vector<double> v(777, 0.1);
  const PolicyEstimate e = summarize("c", "", v);
  EXPECT_EQ(e.mean, 0.1);
  EXPECT_EQ(e.se, 0.0);
}

TEST(Summarize, FrequencyHasBinomialError) {
  std::vector<double> v(400, 0.0);
  for (std::size_t k = 0; k < 100; ++k) v[k] = 1.0;
  const PolicyEstimate e = summarize_frequency("f", "", v);
  EXPECT_EQ(e.mean, 0.25);
  EXPECT_DOUBLE_EQ(e.se, std::sqrt(0.25 * 0.75 / 400));
  EXPECT_TRUE(significantly_positive(e));
  const PolicyEstimate z = summarize_frequency("z", "", std::vector<double>(50, 0.0));
  EXPECT_FALSE(significantly_positive(z));
}

TEST(Combine, ArgmaxIsFirstMaximum) {
  const GEstimate g = combine({{"a", "", 1.0, 0.1, 10}, {"b", "", 3.0, 0.1, 10}, {"c", "", 3.0, 0.1, 10}}, false);
  EXPECT_EQ(g.argmax, 1u);
  EXPECT_EQ(g.value, 3.0);
  EXPECT_EQ(g.best().id, "b");
}

TEST(GExpectation, ConstantIsPreserved) {
  const auto pols = constant_policy_grid(kB1, 5);
  const GEstimate g = estimate_gexp([](const PathSample&) { return -2.5; }, pols, setup_1d(300, 1));
  EXPECT_EQ(g.value, -2.5);
}

TEST(GExpectation, ConstantGridIsEquallySpaced) {
  const auto pols = constant_policy_grid(kB1, 4);
  ASSERT_EQ(pols.size(), 4u);
  EXPECT_EQ(pols.front().policy.regimes()[0].gamma(0, 0), 1.0);
  EXPECT_EQ(pols[1].policy.regimes()[0].gamma(0, 0), 2.0);
  EXPECT_EQ(pols.back().policy.regimes()[0].gamma(0, 0), 4.0);
  EXPECT_EQ(standard_policies(VolBounds(1.0, 2.0, 2), TimeGrid(0.0, 1.0, 0.125)).size(), 8u);
}

// Sublinear-expectation algebra on common samples.
TEST(GExpectation, AlgebraOnSharedSamples) {
  const auto pols = standard_policies(kB1, TimeGrid(0.0, 1.0, 1.0 / 64));
  const MonteCarloSetup s = setup_1d(2000, 17);
  const std::vector<PathFunctional> fs = {
      [](const PathSample& p) { const double b = terminal_b(p); return b * b; },
      [](const PathSample& p) { return std::sin(3 * terminal_b(p)); },
      [](const PathSample& p) { const double b = terminal_b(p); return b * b + 1.0; },
  };
  const PathValues v = evaluate_paths(fs, pols, s);
  auto gexp = [&](auto&& combine_values) {
    std::vector<PolicyEstimate> per;
    for (std::size_t k = 0; k < pols.size(); ++k) {
      std::vector<double> w(s.n_paths);
      for (std::size_t p = 0; p < s.n_paths; ++p) w[p] = combine_values(k, p);
      per.push_back(summarize(pols[k].id, "", w));
    }
    return combine(std::move(per), false).value;
  };
  const double f = gexp([&](std::size_t k, std::size_t p) { return v[k][0][p]; });
  const double g = gexp([&](std::size_t k, std::size_t p) { return v[k][1][p]; });
  const double f_plus = gexp([&](std::size_t k, std::size_t p) { return v[k][2][p]; });
  const double sum = gexp([&](std::size_t k, std::size_t p) { return v[k][0][p] + v[k][1][p]; });
  const double scaled = gexp([&](std::size_t k, std::size_t p) { return 2.5 * v[k][0][p]; });
  const double neg = gexp([&](std::size_t k, std::size_t p) { return -v[k][0][p]; });

  EXPECT_LE(f, f_plus);                          // monotone
  EXPECT_NEAR(f_plus, f + 1.0, 1e-12);           // constant translation
  EXPECT_NEAR(scaled, 2.5 * f, 1e-12 * f);       // positive homogeneity
  EXPECT_LE(sum, f + g + 1e-12);                 // sub-additivity
  EXPECT_LE(-neg, f + 1e-12);                    // -E[-F] <= E[F]

  const GEstimate direct = estimate_gexp(fs[0], pols, s);
  EXPECT_EQ(direct.value, f);
}

TEST(GExpectation, SerialAndParallelAgree) {
  const auto pols = standard_policies(kB1, TimeGrid(0.0, 1.0, 1.0 / 64));
  MonteCarloSetup a = setup_1d(500, 3), b = setup_1d(500, 3);
  a.exec = Exec::serial;
  const PathFunctional f = [](const PathSample& p) { return std::abs(terminal_b(p)); };
  const GEstimate ga = estimate_gexp(f, pols, a), gb = estimate_gexp(f, pols, b);
  for (std::size_t k = 0; k < pols.size(); ++k) {
    EXPECT_EQ(ga.per_policy[k].mean, gb.per_policy[k].mean);
    EXPECT_EQ(ga.per_policy[k].se, gb.per_policy[k].se);
  }
}

TEST(Capacity, EventFrequency) {
  const auto pols = constant_policy_grid(kB1, 3);
  const GEstimate c = estimate_capacity([](const PathSample& p) { return terminal_b(p) > 1.0; }, pols,
                                        setup_1d(4000, 5));
  EXPECT_TRUE(c.capacity_mode);
  EXPECT_EQ(c.argmax, 2u);  // the widest spread maximizes P(B > 1)
  // P(N(0,4) > 1) = 0.3085
  EXPECT_NEAR(c.value, 0.3085, 4 * c.best().se);
}

TEST(PolicySearch, FindsHighestVarianceForSquare) {
  const PolicyFamily fam{PolicyFamily::Kind::constant_diagonal, kB1};
  const SearchResult r = policy_search(
      [](const PathSample& p) { const double b = terminal_b(p); return b * b; }, fam, 16, setup_1d(500, 9));
  EXPECT_EQ(r.trace.per_policy.size(), 16u);
  ASSERT_EQ(r.best_params.size(), 1u);
  EXPECT_EQ(r.best_params[0], 4.0);
  EXPECT_EQ(r.trace.value, r.trace.best().mean);
}

TEST(PolicyEstimate, CsvLayout) {
  std::ostringstream os;
  write_policy_csv(os, combine({{"a", "x", 1.5, 0.25, 10}}, false));
  EXPECT_EQ(os.str(), "id,parameters,mean,se,n\na,x,1.5,0.25,10\n");
}
