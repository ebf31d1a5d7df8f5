#include "gsde/gexpect.hpp"

#include "gsde/csv.hpp"
#include "gsde/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace gsde {

namespace {
constexpr std::size_t kChunk = 256;
}

PathValues evaluate_paths(std::span<const PathFunctional> functionals,
                          std::span<const NamedPolicy> policies, const MonteCarloSetup& setup) {
  if (policies.empty()) throw std::invalid_argument("policy set must not be empty");
  if (setup.n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  const std::size_t n_paths = setup.n_paths;
  PathValues values(policies.size(),
                    std::vector<std::vector<double>>(functionals.size(),
                                                     std::vector<double>(n_paths, 0.0)));
  for (std::size_t pi = 0; pi < policies.size(); ++pi) {
    const DriverBatch batch = drive(policies[pi].policy, setup.grid, n_paths, setup.seed);
    std::size_t n_lag = 0;
    std::size_t d = 0;
    double r0 = 0.0;
    if (setup.system) {
      n_lag = setup.system->validate(setup.grid, batch.m());
      d = setup.system->d();
      r0 = setup.system->r0();
    }
    const auto qv = qv_increments(batch);
    const std::size_t per_path = (n_lag + setup.grid.n_steps() + 1) * d;
    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    auto& out = values[pi];
    for_each_index(setup.exec, n_chunks, [&](std::size_t c) {
      DriverPath drv;
      std::vector<double> x(per_path);
      std::vector<double> xbar(per_path);
      const std::size_t end = std::min(n_paths, (c + 1) * kChunk);
      for (std::size_t p = c * kChunk; p < end; ++p) {
        batch.fill(p, drv);
        if (setup.system) {
          euler_path(setup.system->x, setup.system->xi, setup.grid, n_lag, drv, qv, x, p);
          euler_path(setup.system->xbar, setup.system->xibar, setup.grid, n_lag, drv, qv, xbar, p);
        }
        const PathSample sample{setup.grid, p, drv, x, xbar, d, n_lag, r0};
        for (std::size_t f = 0; f < functionals.size(); ++f) {
          const double v = functionals[f](sample);
          if (!std::isfinite(v))
            throw std::runtime_error("functional is not finite on path " + std::to_string(p));
          out[f][p] = v;
        }
      }
    });
  }
  return values;
}

PolicyEstimate summarize(std::string id, std::string params, std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  const std::size_t n = values.size();
  const double shift = values[0];
  std::vector<double> dev(n);
  for (std::size_t k = 0; k < n; ++k) dev[k] = values[k] - shift;
  const double mean_dev = pairwise_sum(dev) / static_cast<double>(n);
  double se = 0.0;
  if (n > 1) {
    for (std::size_t k = 0; k < n; ++k) {
      const double c = dev[k] - mean_dev;
      dev[k] = c * c;
    }
    const double var = pairwise_sum(dev) / static_cast<double>(n - 1);
    se = std::sqrt(var / static_cast<double>(n));
  }
  return PolicyEstimate{std::move(id), std::move(params), shift + mean_dev, se, n};
}

PolicyEstimate summarize_frequency(std::string id, std::string params,
                                   std::span<const double> indicators) {
  if (indicators.empty()) throw std::invalid_argument("summarize_frequency: no values");
  std::size_t hits = 0;
  for (double v : indicators) hits += v != 0.0 ? 1 : 0;
  const double n = static_cast<double>(indicators.size());
  const double p = static_cast<double>(hits) / n;
  return PolicyEstimate{std::move(id), std::move(params), p, std::sqrt(p * (1.0 - p) / n),
                        indicators.size()};
}

GEstimate combine(std::vector<PolicyEstimate> per_policy, bool capacity_mode) {
  if (per_policy.empty()) throw std::invalid_argument("combine: empty policy set");
  GEstimate g;
  g.per_policy = std::move(per_policy);
  g.capacity_mode = capacity_mode;
  g.argmax = 0;
  for (std::size_t k = 1; k < g.per_policy.size(); ++k)
    if (g.per_policy[k].mean > g.per_policy[g.argmax].mean) g.argmax = k;
  g.value = g.per_policy[g.argmax].mean;
  return g;
}

GEstimate estimate_gexp(const PathFunctional& functional, std::span<const NamedPolicy> policies,
                        const MonteCarloSetup& setup) {
  const PathFunctional fs[] = {functional};
  const PathValues v = evaluate_paths(fs, policies, setup);
  std::vector<PolicyEstimate> per;
  for (std::size_t k = 0; k < policies.size(); ++k)
    per.push_back(summarize(policies[k].id, policies[k].policy.describe(), v[k][0]));
  return combine(std::move(per), false);
}

GEstimate estimate_capacity(const PathPredicate& event, std::span<const NamedPolicy> policies,
                            const MonteCarloSetup& setup) {
  const PathFunctional fs[] = {
      [&event](const PathSample& s) { return event(s) ? 1.0 : 0.0; }};
  const PathValues v = evaluate_paths(fs, policies, setup);
  std::vector<PolicyEstimate> per;
  for (std::size_t k = 0; k < policies.size(); ++k)
    per.push_back(summarize_frequency(policies[k].id, policies[k].policy.describe(), v[k][0]));
  return combine(std::move(per), true);
}

bool significantly_positive(const PolicyEstimate& e, double k) {
  return e.mean > 0.0 && e.mean >= k * e.se;
}

void write_policy_csv(std::ostream& os, const GEstimate& est) {
  CsvWriter csv(os);
  csv.header({"id", "parameters", "mean", "se", "n"});
  for (const auto& p : est.per_policy) {
    csv.field(p.id).field(p.params).field(p.mean).field(p.se).field(p.n_paths);
    csv.end_row();
  }
}

std::vector<NamedPolicy> constant_policy_grid(const VolBounds& bounds, std::size_t n) {
  if (n < 1) throw std::invalid_argument("constant policy grid needs n >= 1");
  std::vector<NamedPolicy> out;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = n == 1 ? bounds.var_hi()
                            : bounds.var_lo() + (bounds.var_hi() - bounds.var_lo()) *
                                                    static_cast<double>(k) / static_cast<double>(n - 1);
    out.push_back({"const-" + std::to_string(k),
                   VolatilityPolicy::constant(SymMatrix::identity(bounds.m, v), bounds)});
  }
  return out;
}

std::vector<NamedPolicy> standard_policies(const VolBounds& bounds, const TimeGrid& grid) {
  const std::size_t m = bounds.m;
  const SymMatrix lo = SymMatrix::identity(m, bounds.var_lo());
  const SymMatrix hi = SymMatrix::identity(m, bounds.var_hi());
  const SymMatrix mid = SymMatrix::identity(m, 0.5 * (bounds.var_lo() + bounds.var_hi()));
  const double t0 = grid.t0();
  const double len = grid.horizon() - t0;
  std::vector<NamedPolicy> out;
  out.push_back({"const-lo", VolatilityPolicy::constant(lo, bounds)});
  out.push_back({"const-mid", VolatilityPolicy::constant(mid, bounds)});
  out.push_back({"const-hi", VolatilityPolicy::constant(hi, bounds)});
  out.push_back({"switch-lo-hi", VolatilityPolicy::piecewise({t0 + 0.5 * len}, {lo, hi}, bounds)});
  out.push_back({"switch-hi-lo", VolatilityPolicy::piecewise({t0 + 0.5 * len}, {hi, lo}, bounds)});
  out.push_back({"feedback-up", VolatilityPolicy::feedback(1, 0.0, lo, hi, bounds)});
  out.push_back({"feedback-down", VolatilityPolicy::feedback(1, 0.0, hi, lo, bounds)});
  out.push_back({"alternate-4",
                 VolatilityPolicy::piecewise({t0 + 0.25 * len, t0 + 0.5 * len, t0 + 0.75 * len},
                                             {lo, hi, lo, hi}, bounds)});
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::pair<double, double>> PolicyFamily::ranges(const TimeGrid& grid) const {
  const std::size_t m = bounds.m;
  const std::pair<double, double> var{bounds.var_lo(), bounds.var_hi()};
  std::vector<std::pair<double, double>> r;
  switch (kind) {
    case Kind::constant_diagonal:
      r.assign(m, var);
      break;
    case Kind::piecewise_diagonal:
      if (pieces < 1) throw std::invalid_argument("piecewise family needs at least one piece");
      r.assign(pieces - 1, {grid.t0(), grid.horizon()});
      r.insert(r.end(), pieces * m, var);
      break;
    case Kind::feedback_diagonal:
      if (component < 1 || component > m)
        throw std::invalid_argument("feedback family component must be in 1..m");
      r.push_back({-threshold_range, threshold_range});
      r.insert(r.end(), 2 * m, var);
      break;
  }
  return r;
}

VolatilityPolicy PolicyFamily::make(std::span<const double> params, const TimeGrid& grid) const {
  const std::size_t m = bounds.m;
  if (params.size() != ranges(grid).size())
    throw std::invalid_argument("policy family: wrong number of parameters");
  auto diag = [&](std::size_t offset) { return SymMatrix::diagonal(params.subspan(offset, m)); };
  switch (kind) {
    case Kind::constant_diagonal:
      return VolatilityPolicy::constant(diag(0), bounds);
    case Kind::piecewise_diagonal: {
      // Piece k starts at the k-th smallest switch time; coincident times
      // leave an empty piece, which is dropped.
      std::vector<double> times(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(pieces - 1));
      std::sort(times.begin(), times.end());
      std::vector<double> kept_times;
      std::vector<SymMatrix> gammas{diag(pieces - 1)};
      for (std::size_t k = 0; k + 1 < pieces; ++k) {
        const SymMatrix g = diag(pieces - 1 + (k + 1) * m);
        if (!kept_times.empty() && times[k] == kept_times.back()) {
          gammas.back() = g;
          continue;
        }
        kept_times.push_back(times[k]);
        gammas.push_back(g);
      }
      return VolatilityPolicy::piecewise(std::move(kept_times), gammas, bounds);
    }
    case Kind::feedback_diagonal:
      return VolatilityPolicy::feedback(component, params[0], diag(1), diag(1 + m), bounds);
  }
  throw std::invalid_argument("unknown policy family");
}

SearchResult policy_search(const PathFunctional& functional, const PolicyFamily& family,
                           std::size_t budget, const MonteCarloSetup& setup) {
  if (budget < 1) throw std::invalid_argument("policy_search: budget must be >= 1");
  const auto box = family.ranges(setup.grid);
  const std::size_t dim = box.size();

  std::vector<PolicyEstimate> trace;
  std::vector<double> best;
  double best_value = -std::numeric_limits<double>::infinity();

  auto evaluate = [&](const std::vector<double>& params) {
    const NamedPolicy candidate{"candidate-" + std::to_string(trace.size()),
                                family.make(params, setup.grid)};
    const GEstimate e = estimate_gexp(functional, std::span(&candidate, 1), setup);
    trace.push_back(e.per_policy[0]);
    if (e.value > best_value) {
      best_value = e.value;
      best = params;
    }
  };

  CounterRng rng(setup.seed, 0x5ea4c4u);
  const std::size_t n_random = std::max<std::size_t>(1, budget / 2);
  for (std::size_t k = 0; k < n_random; ++k) {
    std::vector<double> p(dim);
    for (std::size_t j = 0; j < dim; ++j) p[j] = rng.uniform(box[j].first, box[j].second);
    evaluate(p);
  }

  std::vector<double> step(dim);
  for (std::size_t j = 0; j < dim; ++j) step[j] = 0.25 * (box[j].second - box[j].first);
  while (trace.size() < budget && dim > 0) {
    bool improved = false;
    for (std::size_t j = 0; j < dim && trace.size() < budget; ++j) {
      for (double dir : {1.0, -1.0}) {
        if (trace.size() >= budget) break;
        std::vector<double> cand = best;
        cand[j] = std::clamp(cand[j] + dir * step[j], box[j].first, box[j].second);
        if (cand[j] == best[j]) continue;
        const double before = best_value;
        evaluate(cand);
        if (best_value > before) improved = true;
      }
    }
    if (!improved) {
      bool all_small = true;
      for (std::size_t j = 0; j < dim; ++j) {
        step[j] *= 0.5;
        if (step[j] > 1e-9 * (box[j].second - box[j].first)) all_small = false;
      }
      if (all_small) break;
    }
  }

  return SearchResult{best, family.make(best, setup.grid), combine(std::move(trace), false)};
}

}  // namespace gsde
