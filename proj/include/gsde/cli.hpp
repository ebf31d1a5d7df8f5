#pragma once

// Experiment configuration (INI) and the subcommand runner behind tools/gsde.

#include "gsde/coeffspec.hpp"
#include "gsde/compare.hpp"
#include "gsde/core.hpp"
#include "gsde/exec.hpp"
#include "gsde/gexpect.hpp"
#include "gsde/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gsde {

struct ExperimentConfig {
  // [model]
  std::size_t d = 1;
  std::size_t m = 1;
  double r0 = 0.0;
  double sigma_lo = 1.0;
  double sigma_hi = 2.0;

  // [grid]
  double t0 = 0.0;
  double T = 1.0;
  double dt = 1.0 / 1024.0;

  // [coefficients]; texts are stored in printed (normalized) form.
  CoefficientTexts x;
  CoefficientTexts xbar;
  AffineBound lip_bound;
  AffineBound growth_bound;

  // [initial]; each entry is an expression in t (t = s in [-r0, 0]) or a
  // bracketed sample list "[v0 v1 ...]" at spacing dt.
  std::vector<std::string> xi;
  std::vector<std::string> xibar;

  // [policies]
  std::string policy_set = "standard";  // standard | constant_grid | list
  std::size_t constant_grid_n = 9;
  std::vector<std::pair<std::string, std::string>> policy_list;  // id -> spec

  // [functional]
  std::string functional_source = "B";  // B | X | Xbar
  std::string functional_expr = "x[1](0)";
  std::string functional_reduce = "terminal";  // terminal | sup | inf

  // [event]
  std::string event_kind = "crossing";  // crossing | exceed
  std::string event_source = "B";
  std::string event_expr = "x[1](0)";
  std::string event_reduce = "terminal";
  double event_threshold = 0.0;

  // [search]
  std::string search_family = "constant";  // constant | piecewise | feedback
  std::size_t search_pieces = 2;
  std::size_t search_component = 1;
  double search_threshold_range = 1.0;
  std::size_t search_budget = 16;

  // [probe]
  std::size_t probe_component = 1;
  double probe_t0 = 0.0;
  std::vector<double> probe_s;
  std::vector<std::string> probe_gammas;

  // [matrix]
  std::string matrix = "[0]";
  std::size_t matrix_samples = 10000;

  // [psi]
  std::vector<int> psi_n{1};
  double psi_s_min = -1.0;
  double psi_s_max = 2.0;
  std::size_t psi_points = 3001;

  // [run]
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  std::size_t n_trials = 10000;
  double tol = 1e-8;
  std::optional<double> band;  // default 5 sqrt(dt) band_scale
  double band_scale = 1.0;
  double accept_threshold = 0.02;
  double probe_spacing = 0.0;
  double probe_scale = 1.0;
  std::string out_dir = ".";
  std::string exec = "parallel";  // parallel | serial

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses INI text; unknown sections/keys and malformed values raise
/// ConfigError naming the field path (section.key).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Writes every field in canonical form; parse_config of the output yields an
/// identical configuration.
void write_config(std::ostream& os, const ExperimentConfig& cfg);

/// "[a b; c d]" -> symmetric matrix of the given dimension.
SymMatrix parse_matrix(const std::string& text, std::size_t dim);

VolBounds config_bounds(const ExperimentConfig& cfg);
TimeGrid config_grid(const ExperimentConfig& cfg);
double config_band(const ExperimentConfig& cfg);
Exec config_exec(const ExperimentConfig& cfg);
CoupledSystem build_system(const ExperimentConfig& cfg);
std::vector<NamedPolicy> build_policies(const ExperimentConfig& cfg);
PathFunctional build_functional(const ExperimentConfig& cfg);
PathPredicate build_event(const ExperimentConfig& cfg);

/// Runs the command line (args exclude the program name). Returns 0 on
/// success, 2 on a condition or verification failure, 1 on errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gsde
