#pragma once

// The approximate blow-up solution
//   psi_N(r, t) = exp(i theta + i v r / 2) lambda U_N(lambda (r - q), t),
//   U_N = c((r - q) / q) (phi + sum_k s^k chi_k),
// its NLS residual, and the integral quantities built on it.

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "csb/construction.hpp"
#include "csb/cutoff.hpp"

namespace csb {

struct ApproxOptions {
  CutoffWindow profile_window{0.4, 0.7};
  int theta_degree = 0;  // <= 0: 6N + 12
};

// Fields on the rho-image grid r_i = q + rho_i / lambda. Nodes outside the
// cutoff support carry zeros.
struct LayerState {
  double t = 0.0;
  double q = 0.0, lambda = 0.0;
  GridPtr grid;
  std::vector<double> r;
  ComplexField psi, psi_r;
  // H with i psi_t + Lap psi + 2|psi|^2 psi = i H, from the rescaled profile
  // equation: H = i exp(i theta + i v r / 2) lambda^3 E[U_N].
  ComplexField residual;
  // The same defect evaluated directly from the chain-rule derivatives of
  // psi_N; loses digits to cancellation once lambda is large.
  ComplexField direct_residual;
  // 4 pi r^2 dr quadrature weights on the image nodes.
  std::vector<double> volume;
};

class ApproxSolution {
 public:
  explicit ApproxSolution(ExpansionResult expansion, ApproxOptions options = {});

  const ExpansionResult& expansion() const noexcept { return ex_; }
  const ParameterFunctions& params() const noexcept { return params_; }
  const ApproxOptions& options() const noexcept { return opt_; }
  int order() const noexcept { return ex_.order; }

  // sum_k s^k chi_k on the rho grid (no cutoff).
  ComplexField correction(double t) const;
  // U_N on the rho grid.
  ComplexField profile(double t) const;

  LayerState layer(double t) const;

  // Profile-equation residual E[U_N] on the rho grid.
  ComplexField profile_equation_residual(double t) const;

  // psi_N at arbitrary radii (sixth-order interpolation of the profile).
  std::vector<cplx> psi_at(std::span<const double> r, double t) const;

  // Radial extent [r_min, r_max] of the support at time t.
  std::pair<double, double> support(double t) const;

  double mass(double t) const;
  double energy(double t) const;
  double gradient_norm(double t) const;
  // || |x| psi ||
  double variance(double t) const;
  double peak_radius(double t) const;
  // t^{2k/3} || d_r^k H || in L2(R^3), k = 0, 1, 2.
  double residual_norm(double t, int k) const;

 private:
  ExpansionResult ex_;
  ApproxOptions opt_;
  ParameterFunctions params_;
  std::vector<ComplexField> chi_r_, chi_rr_;
};

// Sixth-order Lagrange interpolation of a grid field at rho; zero outside the
// grid.
cplx interpolate(const ComplexField& f, double rho);

// Largest t <= t_max (scanned geometrically) at which the correction stays
// below `fraction` of max phi on the cutoff support, q and omega are positive,
// and the profile support sits inside the localization plateau.
double runtime_t0(const ApproxSolution& approx, const CutoffWindow& localization,
                  double t_max = 0.5, double fraction = 0.2);

using ProbeTimes = std::array<double, 3>;

// Limit of E(psi_N)(t) as t -> 0 from three probe times, fitting
// E = E0 + a s^{2N-2} + b s^{2N} (the energy expands in even powers of s).
double extrapolated_energy(const ApproxSolution& approx, const ProbeTimes& probes);

struct TuneResult {
  double q2 = 0.0;
  double limit = 0.0;  // extrapolated energy of the final construction
  double slope = 0.0;  // d(limit) / d q2 from the two trials
  double limit_a = 0.0, limit_b = 0.0;  // extrapolated energies at the trial q2 values
  double trial_a = 0.0, trial_b = 0.0;
  int iterations = 0;  // secant refinements after the affine step
};

// q2 such that the extrapolated energy equals `target`: an affine step from
// two trial constructions, then secant refinement until the limit is within
// `tolerance` of the target.
TuneResult tune_q2(double target, ConstructionOptions base, const ApproxOptions& approx,
                   const ProbeTimes& probes, std::pair<double, double> trials = {0.0, 1.0},
                   double tolerance = 1e-4, int max_iterations = 6);

}  // namespace csb
