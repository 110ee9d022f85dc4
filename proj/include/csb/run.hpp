#pragma once

// Orchestration behind the command-line tool: construct, evolve, compare and
// report, each reading and writing files in an output directory.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csb/approx_solution.hpp"
#include "csb/config.hpp"
#include "csb/diagnostics.hpp"
#include "csb/errors.hpp"
#include "csb/evolver.hpp"

namespace csb {

// A prerequisite output of an earlier subcommand is missing or stale.
class MissingInput : public Error {
 public:
  using Error::Error;
};

struct RunSetup {
  RunConfig config;
  double q2 = 0.0;
  std::shared_ptr<const ApproxSolution> approx;
  double t0 = 0.0;
  double epsilon = 0.0;
  double t_start = 0.0, t_end = 0.0;
  std::vector<double> sample_times;  // t_start first, t_end last
  RadialGridPtr grid;
};

ConstructionOptions construction_options(const RunConfig& c, double q2);
ApproxOptions approx_options(const RunConfig& c);

// Resolves t0, epsilon, the sample schedule and the radial grid for a given
// q2. Throws ConfigError when epsilon is not below t0.
RunSetup setup_run(const RunConfig& c, double q2);

// One row of the comparison time series.
struct SampleDiagnostics {
  double t = 0.0;
  NormReport norms;
  double x1_scaled = 0.0;  // ||h||_{X^1} / t^{2N/3}
  double h_hessian = 0.0;
  double q = 0.0, lambda = 0.0, v = 0.0, theta = 0.0;
  double peak_radius = 0.0;
  double quartic = 0.0;
  double pseudoconformal = 0.0;
  double w_functional = 0.0;
  double g_lyapunov = 0.0;
  bool kappa_valid = false;
  ModulationReport kappa;
  double approx_gradient = 0.0, approx_peak_radius = 0.0, approx_variance = 0.0;
};

// Key construction-relevant settings; evolve refuses a construction made
// under different settings.
std::string construction_fingerprint(const RunConfig& c);

void cmd_construct(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);
void cmd_evolve(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);
std::vector<SampleDiagnostics> cmd_compare(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);

struct ReportOutcome {
  bool all_gated_pass = true;
  std::vector<std::string> failures;
};
ReportOutcome cmd_report(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);

}  // namespace csb
