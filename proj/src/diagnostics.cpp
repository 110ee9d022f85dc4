#include "csb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "csb/errors.hpp"
#include "csb/profiles.hpp"

namespace csb {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cplx kI(0.0, 1.0);

// Spacing and reach of the projection grid.
constexpr double kProjectionSpacing = 0.01;
constexpr double kProjectionReach = 40.0;

cplx at(const std::vector<cplx>& w, int i) {
  return i < 0 || i >= static_cast<int>(w.size()) ? cplx(0.0) : w[i];
}

void require_same(const WaveState& a, const WaveState& b) {
  if (a.grid->size() != b.grid->size() || a.grid->outer_radius() != b.grid->outer_radius())
    throw GridMismatch("fields live on different radial grids");
}

std::vector<double> localization_weights(const RadialGrid& g, double q, const CutoffWindow& loc) {
  if (!(q > 0.0)) throw InvalidArgument("localized momentum needs q > 0");
  validate_window(loc);
  std::vector<double> a(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double c = cutoff(loc, (g.node(i) - q) / q).value;
    a[i] = c * c;
  }
  return a;
}

// Cubic Lagrange interpolation of w at radius r, using the odd extension
// w(-r) = -w(r) near the origin; zero beyond R.
cplx interpolate_w(const WaveState& s, double r) {
  const auto& g = *s.grid;
  if (r <= 0.0 || r >= g.outer_radius()) return 0.0;
  const double x = r / g.spacing() - 1.0;  // fractional node index
  int i0 = static_cast<int>(std::floor(x)) - 1;
  i0 = std::min(i0, g.size() - 4);
  const auto sample = [&](int i) -> cplx {
    if (i >= 0) return s.w[i];
    if (i == -1) return 0.0;  // r = 0
    return -s.w[-i - 2];      // r = -(i + 1) dr mirrors node -i - 2
  };
  cplx acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    double l = 1.0;
    for (int k = 0; k < 4; ++k)
      if (k != j) l *= (x - (i0 + k)) / static_cast<double>(j - k);
    acc += l * sample(i0 + j);
  }
  return acc;
}

}  // namespace

Modulation modulation_at(const ApproxSolution& approx, double t) {
  const auto& p = approx.params();
  return {t, p.q(t), p.lambda(t), p.v(t), p.theta(t)};
}

WaveState sample_approx(const ApproxSolution& approx, const RadialGridPtr& grid, double t) {
  const auto psi = approx.psi_at(grid->nodes(), t);
  return reduce(grid, psi, t);
}

double pairing(std::span<const cplx> f, std::span<const cplx> g, const RadialGrid& grid) {
  if (static_cast<int>(f.size()) != grid.size() || static_cast<int>(g.size()) != grid.size())
    throw GridMismatch("pairing: sample count differs from grid size");
  double acc = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const double r = grid.node(i);
    acc += (f[i] * std::conj(g[i])).real() * r * r;
  }
  return kFourPi * acc * grid.spacing();
}

double mass(const WaveState& s) { return discrete_mass(s); }
double energy(const WaveState& s) { return discrete_energy(s); }
double gradient_norm(const WaveState& s) { return std::sqrt(discrete_kinetic(s)); }

double momentum_localized(const WaveState& s, double q, const CutoffWindow& loc) {
  const auto a = localization_weights(*s.grid, q, loc);
  double acc = 0.0;
  for (int i = 0; i < s.grid->size(); ++i)
    if (a[i] != 0.0) acc += a[i] * (std::conj(s.w[i]) * (at(s.w, i + 1) - at(s.w, i - 1))).imag();
  return kTwoPi * acc;
}

double variance(const WaveState& s) {
  const auto& g = *s.grid;
  double acc = 0.0;
  for (int i = 0; i < g.size(); ++i) acc += g.node(i) * g.node(i) * std::norm(s.w[i]);
  return std::sqrt(kFourPi * acc * g.spacing());
}

double peak_radius(const WaveState& s) {
  const auto& g = *s.grid;
  int best = 0;
  double bv = -1.0;
  for (int i = 0; i < g.size(); ++i) {
    const double v = std::abs(s.w[i]) / g.node(i);
    if (v > bv) bv = v, best = i;
  }
  if (best == 0 || best == g.size() - 1) return g.node(best);
  const auto y = [&](int i) { return std::norm(s.w[i]) / (g.node(i) * g.node(i)); };
  const double ym = y(best - 1), y0 = y(best), yp = y(best + 1);
  const double denom = ym - 2.0 * y0 + yp;
  const double off = denom != 0.0 ? 0.5 * (ym - yp) / denom : 0.0;
  return g.node(best) + off * g.spacing();
}

double hessian_norm(const WaveState& h) {
  const double dr = h.grid->spacing();
  double acc = 0.0;
  for (int i = 0; i + 1 < h.grid->size(); ++i) acc += std::norm(at(h.w, i + 1) - 2.0 * h.w[i] + at(h.w, i - 1));
  return std::sqrt(kFourPi * acc / (dr * dr * dr));
}

double x_norm(const WaveState& h, int k, double t) {
  if (k != 1 && k != 2) throw InvalidArgument("x_norm: k must be 1 or 2");
  if (!(t > 0.0)) throw InvalidArgument("x_norm: t must be positive");
  const double c = std::cbrt(t * t);
  double out = std::sqrt(discrete_mass(h)) + c * gradient_norm(h);
  if (k == 2) out += c * c * hessian_norm(h);
  return out;
}

double radial_virial(const WaveState& s) {
  const auto& g = *s.grid;
  double acc = 0.0;
  for (int i = 0; i < g.size(); ++i)
    acc += g.node(i) * (std::conj(s.w[i]) * (at(s.w, i + 1) - at(s.w, i - 1))).imag();
  return kTwoPi * acc;
}

double pseudoconformal_quantity(const WaveState& s) {
  const double V = std::pow(variance(s), 2);
  const double t = s.t;
  return 0.5 * V - 2.0 * t * radial_virial(s) + 2.0 * t * t * discrete_energy(s);
}

double w_functional(const WaveState& s, const Modulation& p, const CutoffWindow& loc) {
  const double l2 = p.lambda * p.lambda;
  return (1.0 + p.v * p.v / (4.0 * l2)) * discrete_mass(s) - p.v / l2 * momentum_localized(s, p.q, loc) +
         discrete_energy(s) / l2;
}

std::vector<cplx> w_gradient(const WaveState& s, const Modulation& p, const CutoffWindow& loc) {
  const auto& g = *s.grid;
  const double dr = g.spacing();
  const double l2 = p.lambda * p.lambda;
  const double cm = 1.0 + p.v * p.v / (4.0 * l2);
  const auto a = localization_weights(g, p.q, loc);
  const auto aw = [&](int i) { return i < 0 || i >= g.size() ? cplx(0.0) : a[i] * s.w[i]; };
  std::vector<cplx> out(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double r = g.node(i);
    const cplx psi = s.w[i] / r;
    // Derivative of the centered localized momentum after summation by parts.
    const cplx G = a[i] * (at(s.w, i + 1) - at(s.w, i - 1)) + aw(i + 1) - aw(i - 1);
    const cplx dP = -kI * G / (2.0 * dr * r);
    const cplx lap = (at(s.w, i + 1) - 2.0 * s.w[i] + at(s.w, i - 1)) / (dr * dr * r);
    const cplx dE = -2.0 * lap - 4.0 * std::norm(psi) * psi;
    out[i] = cm * 2.0 * psi - p.v / l2 * dP + dE / l2;
  }
  return out;
}

double g_lyapunov(const WaveState& psi, const WaveState& psi_n, const Modulation& p, const CutoffWindow& loc) {
  require_same(psi, psi_n);
  const auto& g = *psi.grid;
  const auto grad = w_gradient(psi_n, p, loc);
  std::vector<cplx> h(g.size());
  for (int i = 0; i < g.size(); ++i) h[i] = (psi.w[i] - psi_n.w[i]) / g.node(i);
  return w_functional(psi, p, loc) - w_functional(psi_n, p, loc) - pairing(grad, h, g);
}

GridPtr projection_grid(const Modulation& p, const CutoffWindow& loc) {
  if (!(p.q > 0.0) || !(p.lambda > 0.0)) throw InvalidArgument("projection grid needs q > 0 and lambda > 0");
  const double reach = std::min(loc.support * p.lambda * p.q, kProjectionReach);
  const int half = static_cast<int>(std::ceil(reach / kProjectionSpacing));
  return make_rho_grid(half * kProjectionSpacing, 2 * half + 1);
}

ModulationReport kappa_projections(const WaveState& h, const Modulation& p, const CutoffWindow& loc) {
  validate_window(loc);
  const GridPtr grid = projection_grid(p, loc);
  const double L = grid->half_width();
  if (p.q + L / p.lambda > h.grid->outer_radius())
    throw GridMismatch("kappa projections: radial grid ends inside the layer window");

  // lambda^{1/2} r f = lambda^{-1/2} e^{-i theta - i v r / 2} w(r).
  ComplexField f1(grid);
  for (int i = 0; i < grid->size(); ++i) {
    const double rho = grid->node(i);
    const double r = p.q + rho / p.lambda;
    const double c = cutoff(loc, rho / (p.lambda * p.q)).value;
    if (c == 0.0) continue;
    f1[i] = c / std::sqrt(p.lambda) * std::polar(1.0, -p.theta - p.v * r / 2.0) * interpolate_w(h, r);
  }

  const ComplexField phi = ground_state(grid);
  const ComplexField phi_r = ground_state_d1(grid);
  const ComplexField xi[4] = {kI * phi, -phi_r, phi + phi_r.times_rho(), kI * phi.times_rho()};
  ModulationReport out;
  out.t = p.t;
  for (int j = 0; j < 4; ++j) out.kappa[j] = inner(f1, kI * xi[j]);
  out.f1_norm = l2_norm(f1);
  return out;
}

WaveState push_forward(const ComplexField& f, const Modulation& p, const RadialGridPtr& grid) {
  WaveState s;
  s.t = p.t;
  s.grid = grid;
  s.w.assign(grid->size(), 0.0);
  for (int i = 0; i + 1 < grid->size(); ++i) {
    const double r = grid->node(i);
    s.w[i] = r * p.lambda * std::polar(1.0, p.theta + p.v * r / 2.0) * interpolate(f, p.lambda * (r - p.q));
  }
  return s;
}

CoercivityProbe coercivity_probe(const WaveState& psi_n, const Modulation& p, double amplitude,
                                 const CutoffWindow& loc) {
  const GridPtr grid = projection_grid(p, loc);
  const auto phi = ground_state(grid), phi_r = ground_state_d1(grid);
  const ComplexField xi[4] = {kI * phi, -phi_r, phi + phi_r.times_rho(), kI * phi.times_rho()};
  // f = f1 / (lambda^{1/2} r) on the plateau of theta_1.
  const auto weight = ComplexField::from_function(
      grid, [&](double rho) { return cplx(1.0 / (std::sqrt(p.lambda) * (rho / p.lambda + p.q))); });
  ComplexField f1 = ComplexField::from_function(grid, [](double rho) {
    return (1.0 + 0.5 * rho + kI * (0.3 - 0.2 * rho * rho)) * std::exp(-rho * rho / 3.0);
  });

  // kappa(f1 + sum c_k xi_k) = kappa(f1) + J^T c with J_kj = <xi_k, i xi_j>.
  Eigen::Matrix4d J;
  Eigen::Vector4d k0;
  const auto k_seed = kappa_projections(push_forward(f1 * weight, p, psi_n.grid), p, loc);
  for (int j = 0; j < 4; ++j) {
    k0(j) = k_seed.kappa[j];
    for (int k = 0; k < 4; ++k) J(k, j) = inner(xi[k], kI * xi[j]);
  }
  const Eigen::Vector4d c = J.transpose().fullPivLu().solve(-k0);
  for (int k = 0; k < 4; ++k) f1 += cplx(c(k)) * xi[k];

  const WaveState h = push_forward(f1 * weight, p, psi_n.grid);
  const auto kr = kappa_projections(h, p, loc);
  WaveState psi = psi_n;
  for (std::size_t i = 0; i < psi.w.size(); ++i) psi.w[i] += amplitude * h.w[i];
  CoercivityProbe out;
  out.g_scaled = g_lyapunov(psi, psi_n, p, loc) / (amplitude * amplitude);
  out.f1_norm = kr.f1_norm;
  for (double k : kr.kappa) out.max_kappa = std::max(out.max_kappa, std::abs(k));
  return out;
}

RateFit fit_power_law(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw InvalidArgument("fit_power_law: sample counts differ");
  if (t.size() < 8) throw InvalidArgument("fit_power_law: need at least 8 samples");
  double tmin = INFINITY, tmax = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(t[i]) || !std::isfinite(y[i]))
      throw InvalidArgument("fit_power_law: samples must be positive and finite");
    tmin = std::min(tmin, t[i]);
    tmax = std::max(tmax, t[i]);
  }
  if (tmax < 10.0 * tmin * (1.0 - 1e-12)) throw InvalidArgument("fit_power_law: samples must span a decade");
  const double n = static_cast<double>(t.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = std::log(t[i]), z = std::log(y[i]);
    sx += x, sy += z, sxx += x * x, sxy += x * z;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e = std::log(y[i]) - icpt - slope * std::log(t[i]);
    ss += e * e;
  }
  return {slope, std::exp(icpt), std::sqrt(ss / n), static_cast<int>(t.size())};
}

NormReport compare(const WaveState& psi, const WaveState& psi_n, double q, const CutoffWindow& loc) {
  require_same(psi, psi_n);
  WaveState h = psi;
  for (std::size_t i = 0; i < h.w.size(); ++i) h.w[i] -= psi_n.w[i];
  NormReport r;
  r.t = psi.t;
  r.mass = discrete_mass(psi);
  r.energy = discrete_energy(psi);
  r.momentum = q > 0.0 ? momentum_localized(psi, q, loc) : NAN;
  r.gradient = gradient_norm(psi);
  r.variance = variance(psi);
  r.h_l2 = std::sqrt(discrete_mass(h));
  r.h_h1 = std::sqrt(discrete_mass(h) + discrete_kinetic(h));
  r.h_variance = variance(h);
  if (psi.t > 0.0) {
    r.h_x1 = x_norm(h, 1, psi.t);
    r.h_x2 = x_norm(h, 2, psi.t);
  } else {
    r.h_x1 = r.h_x2 = NAN;
  }
  return r;
}

}  // namespace csb
