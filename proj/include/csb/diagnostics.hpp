#pragma once

// Integral quantities of radial fields, the Lyapunov functional, modulation
// projections of a remainder, power-law fits and the comparison report.

#include <span>
#include <vector>

#include "csb/approx_solution.hpp"
#include "csb/cutoff.hpp"
#include "csb/evolver.hpp"

namespace csb {

// Default localization window theta_1 in zeta = (r - q) / q. It has to contain
// the profile cutoff's support in its plateau.
inline constexpr CutoffWindow kDefaultLocalizationWindow{0.75, 0.9};

// Modulation parameters at one time.
struct Modulation {
  double t = 0.0;
  double q = 0.0, lambda = 0.0, v = 0.0, theta = 0.0;
};
Modulation modulation_at(const ApproxSolution& approx, double t);

// psi_N sampled on a radial grid.
WaveState sample_approx(const ApproxSolution& approx, const RadialGridPtr& grid, double t);

// Real 3D pairing Re int f conj(g) dx of fields given at the radial nodes.
double pairing(std::span<const cplx> f, std::span<const cplx> g, const RadialGrid& grid);

double mass(const WaveState& s);
double energy(const WaveState& s);
// Im int theta_1((r - q)/q)^2 conj(psi) psi_r dx.
double momentum_localized(const WaveState& s, double q, const CutoffWindow& loc = kDefaultLocalizationWindow);
double gradient_norm(const WaveState& s);
// || |x| psi ||
double variance(const WaveState& s);
// Radius of max |psi| with parabolic refinement.
double peak_radius(const WaveState& s);

// sum_{j <= k} t^{2j/3} ||grad^j h||, k in {1, 2}.
double x_norm(const WaveState& h, int k, double t);
// ||grad^2 h||, computed as ||Lap h|| = ||w_rr / r|| (equal for decaying h).
double hessian_norm(const WaveState& h);

// (1/2)||(x + 2it grad) psi||^2 - 2 t^2 ||psi||_4^4, with t = s.t; its time
// derivative equals 2 t ||psi||_4^4 along NLS solutions.
double pseudoconformal_quantity(const WaveState& s);
// Im int r conj(psi) psi_r dx
double radial_virial(const WaveState& s);

// W = (1 + v^2/(4 lambda^2)) M - (v / lambda^2) P_q + E / lambda^2.
double w_functional(const WaveState& s, const Modulation& p, const CutoffWindow& loc = kDefaultLocalizationWindow);
// Gradient of the discrete W in the real 3D pairing, at the nodes.
std::vector<cplx> w_gradient(const WaveState& s, const Modulation& p,
                             const CutoffWindow& loc = kDefaultLocalizationWindow);
// G = W(psi) - W(psi_N) - <W'(psi_N), psi - psi_N>.
double g_lyapunov(const WaveState& psi, const WaveState& psi_n, const Modulation& p,
                  const CutoffWindow& loc = kDefaultLocalizationWindow);

struct ModulationReport {
  double t = 0.0;
  double kappa[4] = {0.0, 0.0, 0.0, 0.0};
  double f1_norm = 0.0;
};

// Pull-back f(rho) = lambda^{-1} e^{-i theta - i v r / 2} h(q + rho / lambda),
// f1 = theta_1(rho / (lambda q)) lambda^{1/2} (rho / lambda + q) f, and
// kappa_j = <f1, i xi_j> with xi = (i phi, -phi_rho, phi + rho phi_rho, i rho phi).
ModulationReport kappa_projections(const WaveState& h, const Modulation& p,
                                   const CutoffWindow& loc = kDefaultLocalizationWindow);
// The rho grid used by the projections at given parameters.
GridPtr projection_grid(const Modulation& p, const CutoffWindow& loc = kDefaultLocalizationWindow);
// Push-forward of a rho-grid field: h(r) = e^{i theta + i v r/2} lambda f(lambda (r - q)).
WaveState push_forward(const ComplexField& f, const Modulation& p, const RadialGridPtr& grid);

// G(psi_N + a h) / a^2 for a fixed smooth perturbation h whose kappa
// projections are removed. A numerical witness of coercivity, not a proof.
struct CoercivityProbe {
  double g_scaled = 0.0;
  double f1_norm = 0.0;
  double max_kappa = 0.0;  // of the perturbation after removal
};
CoercivityProbe coercivity_probe(const WaveState& psi_n, const Modulation& p, double amplitude = 1e-3,
                                 const CutoffWindow& loc = kDefaultLocalizationWindow);

struct RateFit {
  double exponent = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;  // RMS of the log-log residuals
  int samples = 0;
};
// Least squares log y = log A + p log t over >= 8 samples spanning >= a decade.
RateFit fit_power_law(std::span<const double> t, std::span<const double> y);

struct NormReport {
  double t = 0.0;
  double mass = 0.0, energy = 0.0, momentum = 0.0;
  double gradient = 0.0, variance = 0.0;
  double h_x1 = 0.0, h_x2 = 0.0;
  double h_l2 = 0.0, h_h1 = 0.0, h_variance = 0.0;
};
NormReport compare(const WaveState& psi, const WaveState& psi_n, double q,
                   const CutoffWindow& loc = kDefaultLocalizationWindow);

}  // namespace csb
