#pragma once

// Stage-by-stage construction of the profile expansion
//   U = phi + sum_{k=1}^{2N+2} s^k chi_k,  q = sum q_k s^{2k+1},  omega = sum omega_k s^{2k},
// and the closed-form parameter laws built on top of it.

#include <string>
#include <vector>

#include "csb/profiles.hpp"
#include "csb/series.hpp"

namespace csb {

struct ConstructionOptions {
  int order = 3;  // N >= 2
  double half_width = 20.0;
  int point_count = 4097;
  double q2 = 0.0;  // free coefficient left open by the k = 5 stage
  SolveTolerances tolerances;
  // Relative mismatch allowed between the assembled linear part of an odd
  // stage and the closed-form templates.
  double template_tolerance = 1e-8;
};

struct StageRecord {
  int k = 0;
  // |(G+, phi_rho)| / (||G+|| ||phi_rho||) and |(G-, phi)| / (||G-|| ||phi||).
  double kernel_pairing_plus = 0.0;
  double kernel_pairing_minus = 0.0;
  // Solver residuals ||L v - G|| / ||G||.
  double solve_residual_plus = 0.0;
  double solve_residual_minus = 0.0;
  // Degree-k coefficient of the profile equation after all stages, relative
  // to ||D_k||.
  double equation_residual = 0.0;
  double chi_norm = 0.0;
  double parity_defect_re = 0.0;
  double parity_defect_im = 0.0;
  // |(Re chi, phi_rho)| / ||chi||, |(Im chi, phi)| / ||chi||.
  double orthogonality_re = 0.0;
  double orthogonality_im = 0.0;
  // Odd stages k >= 3 only.
  double template_mismatch = 0.0;
  double formula_mismatch = 0.0;
  // Fitted mu in |G(rho)| ~ |rho|^m exp(-mu |rho|) on the outer grid.
  double decay_rate_plus = 0.0;
  double decay_rate_minus = 0.0;
};

// The k = 5 compatibility relation q0^3 (G5+~, phi_rho) = 2 (G5-~, phi).
struct StageFiveIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_defect = 0.0;
};

struct ExpansionResult {
  int order = 0;
  GridPtr grid;
  std::vector<double> q;      // q_0 .. q_N
  std::vector<double> omega;  // omega_0 .. omega_N
  std::vector<ComplexField> chi;  // chi_1 .. chi_{2N+2}, chi[k-1] = chi_k
  std::vector<StageRecord> stages;
  StageFiveIdentity identity5;
  double a_coefficient = 0.0;  // ||phi||^2 / (36 ||phi_rho||^2)

  StageData stage_data() const;
  const ComplexField& chi_k(int k) const { return chi.at(k - 1); }
};

// Kernel-constrained solvers shared by all stages.
struct StageSolvers {
  explicit StageSolvers(const GridPtr& grid, SolveTolerances tol = {});
  LinOp plus;
  LinOp minus;
  SolveTolerances tolerances;
};

// q0 from the stage-one solvability condition (G1+(q0), phi_rho) = 0, by
// Newton iteration from 1.5 on the assembled pairing.
double solve_q0(const GridPtr& grid);

// chi_k for even k from the lower-stage data.
ComplexField stage_even(int k, const StageData& state, const StageSolvers& solvers,
                        StageRecord* record = nullptr);

struct OddStage {
  double q = 0.0;
  double omega = 0.0;
  ComplexField chi;
  StageFiveIdentity identity;  // filled for l = 2
};

// Stage k = 2l + 1, l >= 1: fixes (q_l, omega_l) from the two solvability
// conditions, then solves for chi_k. For l = 2 the q-equation is degenerate
// and q2 is taken from `q2_input`.
OddStage stage_odd(int l, const StageData& state, const StageSolvers& solvers, double q2_input,
                   double template_tolerance = 1e-8, StageRecord* record = nullptr);

ExpansionResult construct_expansion(const ConstructionOptions& options);

// Linear-part templates of the odd stage k = 2l + 1 in (q_l, omega_l).
struct OddTemplates {
  ComplexField q_plus, omega_plus, q_minus, omega_minus;
};
OddTemplates odd_templates(int l, double q0, const GridPtr& grid);

// Evaluators for the modulation parameters. q and omega are finite sums;
// lambda = 1 / (omega q^2); theta comes from the term-wise antiderivative of
// theta' = lambda^2 - v^2/4 - v' q / 2 truncated at `theta_degree`, plus the
// integral of the (tiny) truncation error so that theta' is exact.
class ParameterFunctions {
 public:
  ParameterFunctions(std::vector<double> q, std::vector<double> omega, int theta_degree);

  double q(double t) const;
  double dq(double t) const;
  double d2q(double t) const;
  double omega(double t) const;
  double domega(double t) const;
  double lambda(double t) const;
  double dlambda(double t) const;
  double v(double t) const { return dq(t); }
  double dv(double t) const { return d2q(t); }
  // Truncated theta series closed by quadrature of the truncation error.
  double theta(double t) const;
  double dtheta(double t) const;
  // lambda^2 - v^2/4 - v' q / 2 evaluated in closed form.
  double theta_prime_exact(double t) const;

  const ParameterSeries& series() const noexcept { return series_; }
  const std::vector<double>& q_coefficients() const noexcept { return q_; }
  const std::vector<double>& omega_coefficients() const noexcept { return omega_; }

 private:
  std::vector<double> q_, omega_;
  ParameterSeries series_;
};

// theta_degree <= 0 selects 6N + 12.
ParameterFunctions close_parameters(const ExpansionResult& expansion, int theta_degree = 0);

// Structured text snapshot: order, coefficient table, per-stage records.
std::string snapshot_text(const ExpansionResult& expansion);
// Just the coefficient table (k, q_k, omega_k), fixed formatting.
std::string coefficient_table(const ExpansionResult& expansion);
// rho, Re, Im per node.
std::string field_csv(const ComplexField& f);

}  // namespace csb
