#pragma once

// Run configuration: line-oriented `key = value` text with `#` comments.

#include <optional>
#include <string>
#include <string_view>

#include "csb/approx_solution.hpp"
#include "csb/cutoff.hpp"

namespace csb {

enum class T0Policy { Runtime, Fixed };
enum class Direction { Forward, Backward };

struct RunConfig {
  int order = 3;
  double energy = 0.0;           // target for the q2 tuning
  std::optional<double> q2;      // set: use as is, skip tuning
  std::optional<double> epsilon; // unset: epsilon_fraction * t0
  double epsilon_fraction = 0.1;

  T0Policy t0_policy = T0Policy::Runtime;
  double t0 = 0.0;  // Fixed policy only
  double t0_correction_bound = 0.2;
  Direction direction = Direction::Forward;

  double half_width = 20.0;
  int profile_points = 4097;
  CutoffWindow profile_window{0.4, 0.7};
  CutoffWindow localization_window{0.75, 0.9};
  double solvability_tolerance = 1e-6;
  double solver_tolerance = 1e-8;

  ProbeTimes energy_probes{1e-6, 1e-7, 1e-8};
  double tune_tolerance = 1e-4;
  double residual_fit_min = 1e-7;
  double residual_fit_max = 1e-6;

  // Radial grid: R = radius_factor * (outer edge of the layer support at
  // the latest run time) unless `radius` is given; the node count gives
  // points_per_width nodes across 1 / max|psi_N| at the run endpoints unless
  // `radial_points` is given.
  std::optional<double> radius;
  double radius_factor = 3.0;
  std::optional<int> radial_points;
  double points_per_width = 18.0;

  double dt_factor = 0.1;
  int check_interval = 32;
  double min_points_per_width = 16.0;
  int samples = 25;

  std::string output_dir = "out";
};

// Throws ConfigError with "line N: ..." for syntax errors, unknown or
// repeated keys and out-of-range values; cross-key checks report the line of
// the later key.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

// Canonical text form; parse_config(config_text(c)) reproduces c.
std::string config_text(const RunConfig& c);

}  // namespace csb
