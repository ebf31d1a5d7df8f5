#include "gsde/compare.hpp"

#include "gsde/csv.hpp"
#include "gsde/gfunc.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace gsde {

namespace {

constexpr std::size_t kMaxKnots = 6;

double probe_spacing(double r0, double spacing) {
  if (r0 == 0.0) return 0.0;
  return spacing > 0.0 ? spacing : r0 / 32.0;
}

// Piecewise-linear interpolation of knot values onto n samples.
void interpolate_knots(std::span<const double> knots, std::size_t n, std::size_t d, std::size_t i,
                       std::vector<double>& samples) {
  const std::size_t k = knots.size();
  if (n == 1 || k == 1) {
    for (std::size_t s = 0; s < n; ++s) samples[s * d + i] = knots[k - 1];
    return;
  }
  for (std::size_t s = 0; s < n; ++s) {
    const double u = static_cast<double>(s) * static_cast<double>(k - 1) / static_cast<double>(n - 1);
    const std::size_t a = std::min(static_cast<std::size_t>(u), k - 2);
    const double w = u - static_cast<double>(a);
    samples[s * d + i] = (1.0 - w) * knots[a] + w * knots[a + 1];
  }
}

std::size_t knot_count(std::size_t n) { return std::min(n, kMaxKnots); }

std::runtime_error trial_error(std::size_t trial, const std::exception& e) {
  return std::runtime_error("trial " + std::to_string(trial) + ": " + e.what());
}

const char* probe_name(Probe p) {
  switch (p) {
    case Probe::drift:
      return "drift";
    case Probe::equality:
      return "equality";
    case Probe::locality:
      return "locality";
  }
  return "?";
}

void check_dims(const CoefficientSet& a, const CoefficientSet& b) {
  if (a.d() != b.d() || a.m() != b.m() || a.r0() != b.r0())
    throw std::invalid_argument("coefficient sets have incompatible dimensions");
}

struct Draw {
  std::size_t i;
  std::size_t j;
  double t;
};

Draw draw_indices(CounterRng& rng, std::size_t d, std::size_t m, std::span<const double> t_grid,
                  bool with_j) {
  Draw out{rng.index(d), 0, 0.0};
  if (with_j) out.j = rng.index(m);
  out.t = t_grid[rng.index(t_grid.size())];
  return out;
}

// Lowest trial index wins ties.
std::size_t argmax_record(const std::vector<MarginRecord>& rec) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < rec.size(); ++k)
    if (rec[k].margin > rec[best].margin) best = k;
  return best;
}

// Lagrange weights at x for the given nodes.
std::vector<double> lagrange_weights(std::span<const double> nodes, double x) {
  std::vector<double> w(nodes.size(), 1.0);
  for (std::size_t k = 0; k < nodes.size(); ++k)
    for (std::size_t j = 0; j < nodes.size(); ++j)
      if (j != k) w[k] *= (x - nodes[j]) / (nodes[k] - nodes[j]);
  return w;
}

}  // namespace

SegmentPath sample_smooth_segment(std::size_t d, double r0, double spacing, double scale,
                                  CounterRng& rng) {
  if (d < 1) throw std::invalid_argument("segment dimension must be >= 1");
  spacing = probe_spacing(r0, spacing);
  const std::size_t n = segment_sample_count(r0, spacing);
  const std::size_t k = knot_count(n);
  std::vector<double> samples(n * d);
  std::vector<double> knots(k);
  for (std::size_t i = 0; i < d; ++i) {
    for (double& v : knots) v = rng.uniform(-scale, scale);
    interpolate_knots(knots, n, d, i, samples);
  }
  return SegmentPath(r0, d, spacing, std::move(samples));
}

OrderedPair sample_ordered_pair(std::size_t d, double r0, double spacing, std::size_t component,
                                double scale, CounterRng& rng) {
  if (component < 1 || component > d) throw std::invalid_argument("component must be in 1..d");
  spacing = probe_spacing(r0, spacing);
  SegmentPath eta = sample_smooth_segment(d, r0, spacing, scale, rng);
  const std::size_t n = eta.size();
  const std::size_t k = knot_count(n);
  std::vector<double> delta(n * d, 0.0);
  if (rng.uniform() >= 0.05) {
    std::vector<double> knots(k);
    for (std::size_t i = 0; i < d; ++i) {
      if (rng.uniform() < 0.1) continue;
      const double amp = scale * rng.uniform();
      for (double& v : knots) v = amp * rng.uniform();
      interpolate_knots(knots, n, d, i, delta);
    }
  }
  delta[(n - 1) * d + (component - 1)] = 0.0;
  std::vector<double> xs(eta.samples());
  for (std::size_t s = 0; s < xs.size(); ++s) xs[s] -= delta[s];
  return OrderedPair{SegmentPath(r0, d, spacing, std::move(xs)), std::move(eta)};
}

OrderedPair sample_ordered_pair(std::size_t d, double r0, double spacing, std::size_t component,
                                double scale, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  return sample_ordered_pair(d, r0, spacing, component, scale, rng);
}

double condition1_margin(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                         const VolBounds& bounds, std::size_t i, double t, const SegmentPath& xi,
                         const SegmentPath& eta) {
  const SegmentView a = xi.view();
  const SegmentView b = eta.view();
  const double drift = set_x.drift(i, t, a) - set_xbar.drift(i, t, b);
  if (set_x.h_is_zero(i) && set_xbar.h_is_zero(i)) return drift;
  return drift + 2.0 * g_eval(set_x.h(i, t, a) - set_xbar.h(i, t, b), bounds);
}

double condition2_equality(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                           std::size_t i, std::size_t j, double t, const SegmentPath& xi) {
  const SegmentView a = xi.view();
  return std::abs(set_x.sigma(i, j, t, a) - set_xbar.sigma(i, j, t, a));
}

double condition2_locality(const CoefficientSet& set_x, std::size_t i, std::size_t j, double t,
                           const SegmentPath& xi, const SegmentPath& eta) {
  return std::abs(set_x.sigma(i, j, t, xi.view()) - set_x.sigma(i, j, t, eta.view()));
}

ConditionReport check_condition1(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                                 const VolBounds& bounds, std::span<const double> t_grid,
                                 const ProbeOptions& opts) {
  check_dims(set_x, set_xbar);
  if (bounds.m != set_x.m()) throw std::invalid_argument("volatility bounds do not match m");
  if (t_grid.empty()) throw std::invalid_argument("t_grid must not be empty");
  if (opts.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  const std::size_t d = set_x.d();
  const double r0 = set_x.r0();

  auto trial_pair = [&](std::size_t trial, Draw& draw) {
    CounterRng rng(opts.seed, trial);
    draw = draw_indices(rng, d, set_x.m(), t_grid, false);
    return sample_ordered_pair(d, r0, opts.spacing, draw.i + 1, opts.scale, rng);
  };

  ConditionReport rep;
  rep.condition = 1;
  rep.n_trials = opts.n_trials;
  rep.tol = opts.tol;
  rep.margins.resize(opts.n_trials);
  for_each_index(opts.exec, opts.n_trials, [&](std::size_t trial) {
    try {
      Draw draw{};
      const OrderedPair pair = trial_pair(trial, draw);
      const double margin = condition1_margin(set_x, set_xbar, bounds, draw.i, draw.t, pair.xi, pair.eta);
      rep.margins[trial] = MarginRecord{trial, draw.t, draw.i + 1, 0, Probe::drift, margin};
    } catch (const std::exception& e) {
      throw trial_error(trial, e);
    }
  });

  const MarginRecord& best = rep.margins[argmax_record(rep.margins)];
  rep.max_margin = best.margin;
  rep.pass = rep.max_margin <= opts.tol;
  Draw draw{};
  OrderedPair pair = trial_pair(best.trial, draw);
  rep.witness = Witness{best.t, best.i, 0, Probe::drift, std::move(pair.xi), std::move(pair.eta)};
  return rep;
}

ConditionReport check_condition2(const CoefficientSet& set_x, const CoefficientSet& set_xbar,
                                 std::span<const double> t_grid, const ProbeOptions& opts) {
  check_dims(set_x, set_xbar);
  if (t_grid.empty()) throw std::invalid_argument("t_grid must not be empty");
  if (opts.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  const std::size_t d = set_x.d();
  const double r0 = set_x.r0();

  // eta shares only its i-th value at 0 with xi.
  auto trial_pair = [&](std::size_t trial, Draw& draw) {
    CounterRng rng(opts.seed, trial);
    draw = draw_indices(rng, d, set_x.m(), t_grid, true);
    SegmentPath xi = sample_smooth_segment(d, r0, opts.spacing, opts.scale, rng);
    SegmentPath eta = sample_smooth_segment(d, r0, opts.spacing, opts.scale, rng);
    std::vector<double> es(eta.samples());
    es[(eta.size() - 1) * d + draw.i] = xi.at_zero(draw.i);
    return OrderedPair{std::move(xi), SegmentPath(eta.r0(), d, eta.spacing(), std::move(es))};
  };

  ConditionReport rep;
  rep.condition = 2;
  rep.n_trials = opts.n_trials;
  rep.tol = opts.tol;
  rep.margins.resize(2 * opts.n_trials);
  for_each_index(opts.exec, opts.n_trials, [&](std::size_t trial) {
    try {
      Draw draw{};
      const OrderedPair pair = trial_pair(trial, draw);
      const double eq = condition2_equality(set_x, set_xbar, draw.i, draw.j, draw.t, pair.xi);
      const double loc = condition2_locality(set_x, draw.i, draw.j, draw.t, pair.xi, pair.eta);
      rep.margins[2 * trial] =
          MarginRecord{trial, draw.t, draw.i + 1, draw.j + 1, Probe::equality, eq};
      rep.margins[2 * trial + 1] =
          MarginRecord{trial, draw.t, draw.i + 1, draw.j + 1, Probe::locality, loc};
    } catch (const std::exception& e) {
      throw trial_error(trial, e);
    }
  });

  const MarginRecord& best = rep.margins[argmax_record(rep.margins)];
  rep.max_margin = best.margin;
  rep.pass = rep.max_margin <= opts.tol;
  Draw draw{};
  OrderedPair pair = trial_pair(best.trial, draw);
  rep.witness = Witness{best.t, best.i, best.j, best.probe, std::move(pair.xi), std::move(pair.eta)};
  return rep;
}

double replay_witness(const ConditionReport& report, const CoefficientSet& set_x,
                      const CoefficientSet& set_xbar, const VolBounds& bounds) {
  if (!report.witness) throw std::invalid_argument("report has no witness");
  const Witness& w = *report.witness;
  switch (w.probe) {
    case Probe::drift:
      return condition1_margin(set_x, set_xbar, bounds, w.i - 1, w.t, w.xi, w.eta);
    case Probe::equality:
      return condition2_equality(set_x, set_xbar, w.i - 1, w.j - 1, w.t, w.xi);
    case Probe::locality:
      return condition2_locality(set_x, w.i - 1, w.j - 1, w.t, w.xi, w.eta);
  }
  throw std::invalid_argument("unknown probe");
}

void write_margins_csv(std::ostream& os, const ConditionReport& report) {
  CsvWriter csv(os);
  if (report.condition == 1) {
    csv.header({"trial", "t", "i", "margin"});
    for (const auto& r : report.margins) {
      csv.field(r.trial).field(r.t).field(r.i).field(r.margin);
      csv.end_row();
    }
  } else {
    csv.header({"trial", "t", "i", "j", "probe", "margin"});
    for (const auto& r : report.margins) {
      csv.field(r.trial).field(r.t).field(r.i).field(r.j).field(probe_name(r.probe)).field(r.margin);
      csv.end_row();
    }
  }
}

// ---------------------------------------------------------------------------

double violation_functional(const PathSample& s) {
  double v = 0.0;
  for (std::size_t idx = s.n_lag; idx < s.n_history(); ++idx)
    for (std::size_t i = 0; i < s.d; ++i) v = std::max(v, s.X(idx, i) - s.Xbar(idx, i));
  return v;
}

bool crossing_event(const PathSample& s, double band) {
  for (std::size_t idx = s.n_lag; idx < s.n_history(); ++idx)
    for (std::size_t i = 0; i < s.d; ++i)
      if (s.X(idx, i) > s.Xbar(idx, i) + band) return true;
  return false;
}

OrderVerdict verify_order_preservation(const CoupledSystem& system,
                                       std::span<const NamedPolicy> policies,
                                       const TimeGrid& grid, const VerifyOptions& opts) {
  if (!segment_order_leq(system.xi, system.xibar))
    throw std::invalid_argument("initial segments are not ordered (xi <= xibar required)");
  if (!(opts.band >= 0.0)) throw std::invalid_argument("band must be nonnegative");
  const MonteCarloSetup setup{grid, opts.n_paths, opts.seed, system, opts.exec};
  const double band = opts.band;
  const PathFunctional fs[] = {
      violation_functional,
      [band](const PathSample& s) { return crossing_event(s, band) ? 1.0 : 0.0; }};
  const PathValues v = evaluate_paths(fs, policies, setup);

  std::vector<PolicyEstimate> viol;
  std::vector<PolicyEstimate> cross;
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const std::string params = policies[k].policy.describe();
    viol.push_back(summarize(policies[k].id, params, v[k][0]));
    cross.push_back(summarize_frequency(policies[k].id, params, v[k][1]));
  }
  OrderVerdict out;
  out.gexp_of_violation = combine(std::move(viol), false);
  out.capacity_of_crossing = combine(std::move(cross), true);
  out.band = band;
  out.accept_threshold = opts.accept_threshold;
  out.crossing_detected =
      std::any_of(out.capacity_of_crossing.per_policy.begin(),
                  out.capacity_of_crossing.per_policy.end(),
                  [](const PolicyEstimate& e) { return significantly_positive(e); });
  out.preserved = out.gexp_of_violation.value <= opts.accept_threshold && !out.crossing_detected;
  return out;
}

// ---------------------------------------------------------------------------

bool NecessityProbeReport::consistent(double k) const noexcept {
  const double floor = 1e-9 * (1.0 + std::abs(direct));
  return std::abs(slope - direct) <= k * combined_se + floor;
}

NecessityProbeReport necessity_probe_drift(const CoupledSystem& system, const SymMatrix& gamma,
                                           const VolBounds& bounds, std::size_t component,
                                           double t0, std::span<const double> s_list, double dt,
                                           std::size_t n_paths, std::uint64_t seed, Exec exec) {
  const std::size_t d = system.d();
  if (component < 1 || component > d) throw std::invalid_argument("component must be in 1..d");
  const std::size_t i = component - 1;
  if (s_list.size() < 2) throw std::invalid_argument("s_list needs at least two entries");
  if (!segment_order_leq(system.xi, system.xibar))
    throw std::invalid_argument("initial segments are not ordered (xi <= eta required)");
  if (system.xi.at_zero(i) != system.xibar.at_zero(i))
    throw std::invalid_argument("initial segments must agree in the probed component at 0");

  std::vector<double> s_sorted(s_list.begin(), s_list.end());
  std::sort(s_sorted.begin(), s_sorted.end());
  std::vector<std::size_t> steps;
  for (std::size_t k = 0; k < s_sorted.size(); ++k) {
    const double s = s_sorted[k];
    if (!(s > 0.0)) throw std::invalid_argument("s_list entries must be positive");
    if (k > 0 && s == s_sorted[k - 1]) throw std::invalid_argument("s_list entries must be distinct");
    const double q = std::round(s / dt);
    if (q < 1.0 || std::abs(q * dt - s) > 1e-9 * s)
      throw std::invalid_argument("s_list entries must be positive multiples of dt");
    steps.push_back(static_cast<std::size_t>(q));
  }

  const TimeGrid grid(t0, t0 + s_sorted.back(), dt);
  const NamedPolicy policy{"constant", VolatilityPolicy::constant(gamma, bounds)};
  const MonteCarloSetup setup{grid, n_paths, seed, system, exec};

  // The Euler quotient over one step equals the drift evaluated at t0, so the
  // scheme's limit point is s = dt; extrapolate there.
  const std::vector<double> w_full = lagrange_weights(s_sorted, dt);
  const std::vector<double> w_reduced =
      lagrange_weights(std::span<const double>(s_sorted).first(s_sorted.size() - 1), dt);

  auto quotient = [i](const PathSample& p, std::size_t step, double s) {
    const std::size_t idx = p.n_lag + step;
    return (p.X(idx, i) - p.Xbar(idx, i)) / s;
  };
  std::vector<PathFunctional> fs;
  for (std::size_t k = 0; k < s_sorted.size(); ++k)
    fs.push_back([=](const PathSample& p) { return quotient(p, steps[k], s_sorted[k]); });
  auto combination = [=](const std::vector<double>& w) {
    return [=](const PathSample& p) {
      double v = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) v += w[k] * quotient(p, steps[k], s_sorted[k]);
      return v;
    };
  };
  fs.push_back(combination(w_full));
  fs.push_back(combination(w_reduced));

  const PathValues v = evaluate_paths(fs, std::span(&policy, 1), setup);

  NecessityProbeReport rep;
  rep.component = component;
  rep.gamma = gamma;
  rep.s_list = s_sorted;
  for (std::size_t k = 0; k < s_sorted.size(); ++k)
    rep.quotients.push_back(summarize("s=" + format_double(s_sorted[k]), policy.policy.describe(), v[0][k]));
  const PolicyEstimate full = summarize("extrapolated", "", v[0][s_sorted.size()]);
  const PolicyEstimate reduced = summarize("reduced", "", v[0][s_sorted.size() + 1]);
  rep.slope = full.mean;
  rep.slope_se = full.se;
  rep.extrapolation_error = std::abs(full.mean - reduced.mean);
  rep.combined_se = std::hypot(rep.slope_se, rep.extrapolation_error);

  const SegmentView a = system.xi.view();
  const SegmentView b = system.xibar.view();
  rep.direct = system.x.drift(i, t0, a) - system.xbar.drift(i, t0, b) +
               system.x.h_pair(i, t0, a, gamma.matrix()) - system.xbar.h_pair(i, t0, b, gamma.matrix());
  return rep;
}

}  // namespace gsde
