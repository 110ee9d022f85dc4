#include "csb/approx_solution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "csb/errors.hpp"

namespace csb {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
const cplx kI(0.0, 1.0);

struct Params {
  double s, q, dq, d2q, w, dw, lambda, dlambda, v, dv, theta, dtheta;
};

Params params_at(const ParameterFunctions& p, double t) {
  if (!(t > 0.0)) throw InvalidArgument("approximate solution needs t > 0");
  Params a{};
  a.s = std::cbrt(t);
  a.q = p.q(t);
  a.w = p.omega(t);
  if (!(a.q > 0.0) || !(a.w > 0.0))
    throw InvalidArgument("q(t) or omega(t) is not positive at this time; t is outside the expansion's range");
  a.dq = p.dq(t);
  a.d2q = p.d2q(t);
  a.dw = p.domega(t);
  a.lambda = p.lambda(t);
  a.dlambda = p.dlambda(t);
  a.v = a.dq;
  a.dv = a.d2q;
  a.theta = p.theta(t);
  a.dtheta = p.dtheta(t);
  return a;
}

}  // namespace

ApproxSolution::ApproxSolution(ExpansionResult expansion, ApproxOptions options)
    : ex_(std::move(expansion)), opt_(options), params_(close_parameters(ex_, options.theta_degree)) {
  validate_window(opt_.profile_window);
  chi_r_.reserve(ex_.chi.size());
  chi_rr_.reserve(ex_.chi.size());
  for (const auto& c : ex_.chi) {
    chi_r_.push_back(d_rho(c));
    chi_rr_.push_back(d_rho2(c));
  }
}

ComplexField ApproxSolution::correction(double t) const {
  const double s = std::cbrt(t);
  ComplexField out(ex_.grid);
  double sk = 1.0;
  for (const auto& c : ex_.chi) {
    sk *= s;
    out += cplx(sk) * c;
  }
  return out;
}

ComplexField ApproxSolution::profile(double t) const {
  const Params p = params_at(params_, t);
  ComplexField u = ground_state(ex_.grid) + correction(t);
  for (int i = 0; i < u.size(); ++i) u[i] *= cutoff(opt_.profile_window, ex_.grid->node(i) * p.w * p.q).value;
  return u;
}

LayerState ApproxSolution::layer(double t) const {
  const Params p = params_at(params_, t);
  const GridPtr& g = ex_.grid;
  const int n = g->size();

  ComplexField V = ground_state(g), Vr = ground_state_d1(g), Vrr = ground_state_d2(g);
  ComplexField Vt(g);
  double sk = 1.0;
  for (std::size_t j = 0; j < ex_.chi.size(); ++j) {
    const int k = static_cast<int>(j) + 1;
    sk *= p.s;
    V += cplx(sk) * ex_.chi[j];
    Vr += cplx(sk) * chi_r_[j];
    Vrr += cplx(sk) * chi_rr_[j];
    Vt += cplx(k / 3.0 * std::pow(p.s, k - 3)) * ex_.chi[j];
  }

  LayerState st;
  st.t = t;
  st.q = p.q;
  st.lambda = p.lambda;
  st.grid = g;
  st.r.resize(n);
  st.volume.resize(n);
  st.psi = ComplexField(g);
  st.psi_r = ComplexField(g);
  st.residual = ComplexField(g);
  st.direct_residual = ComplexField(g);
  const ComplexField E = profile_equation_residual(t);

  const double L = p.lambda, q = p.q;
  for (int i = 0; i < n; ++i) {
    const double rho = g->node(i);
    const double r = q + rho / L;
    st.r[i] = r;
    st.volume[i] = kFourPi * g->weights()[i] * r * r / L;
    const double zeta = rho / (L * q);
    const CutoffValue c = cutoff(opt_.profile_window, zeta);
    if (c.value == 0.0 && c.d1 == 0.0 && c.d2 == 0.0) continue;

    const cplx P = c.value * V[i];
    const cplx Pr = c.d1 * V[i] / q + c.value * L * Vr[i];
    const cplx Prr = c.d2 * V[i] / (q * q) + 2.0 * c.d1 * L * Vr[i] / q + c.value * L * L * Vrr[i];
    const double phase = p.theta + p.v * r / 2.0;
    const cplx e = std::polar(1.0, phase);

    const cplx psi = e * L * P;
    const cplx psi_r = e * L * (kI * (p.v / 2.0) * P + Pr);
    const cplx psi_rr = e * L * (-(p.v * p.v / 4.0) * P + kI * p.v * Pr + Prr);

    const double phase_t = p.dtheta + p.dv * r / 2.0;
    const double zeta_t = -r * p.dq / (q * q);
    const double rho_t = (p.dlambda / L) * rho - L * p.v;
    const cplx Pt = c.d1 * zeta_t * V[i] + c.value * (Vt[i] + Vr[i] * rho_t);
    const cplx psi_t = e * (kI * phase_t * L * P + p.dlambda * P + L * Pt);

    const cplx lap = psi_rr + 2.0 / r * psi_r;
    const cplx nls = kI * psi_t + lap + 2.0 * std::norm(psi) * psi;
    st.psi[i] = psi;
    st.psi_r[i] = psi_r;
    st.direct_residual[i] = -kI * nls;
    st.residual[i] = kI * e * (L * L * L) * E[i];
  }
  return st;
}

ComplexField ApproxSolution::profile_equation_residual(double t) const {
  const Params p = params_at(params_, t);
  const GridPtr& g = ex_.grid;
  ComplexField V = ground_state(g), Vr = ground_state_d1(g), Vrr = ground_state_d2(g);
  ComplexField Vt(g);
  double sk = 1.0;
  for (std::size_t j = 0; j < ex_.chi.size(); ++j) {
    const int k = static_cast<int>(j) + 1;
    sk *= p.s;
    V += cplx(sk) * ex_.chi[j];
    Vr += cplx(sk) * chi_r_[j];
    Vrr += cplx(sk) * chi_rr_[j];
    Vt += cplx(k / 3.0 * std::pow(p.s, k - 3)) * ex_.chi[j];
  }
  const double q = p.q, w = p.w, qw = q * w;
  const double dqw = p.dw * q + w * p.dq;
  const double q3 = q * q * q, q4 = q3 * q;
  const double time_coeff = q4 * w * w;
  const double drift = p.dq * q3 * w * w;
  const double dilation = 2.0 * drift + p.dw * w * q4;
  const double curvature = 0.5 * p.d2q * q4 * q * q * w * w * w;

  ComplexField out(g);
  for (int i = 0; i < out.size(); ++i) {
    const double rho = g->node(i);
    const CutoffValue c = cutoff(opt_.profile_window, rho * qw);
    const cplx U = c.value * V[i];
    const cplx Ur = c.d1 * qw * V[i] + c.value * Vr[i];
    const cplx Urr = c.d2 * qw * qw * V[i] + 2.0 * c.d1 * qw * Vr[i] + c.value * Vrr[i];
    const cplx Ut = c.d1 * rho * dqw * V[i] + c.value * Vt[i];
    const double geo = 1.0 / (1.0 + rho * qw);
    out[i] = -kI * time_coeff * Ut - Urr + U - 2.0 * std::norm(U) * U - 2.0 * qw * geo * Ur +
             curvature * rho * U + kI * dilation * (U + rho * Ur) - kI * drift * geo * U;
  }
  return out;
}

cplx interpolate(const ComplexField& f, double rho) {
  const auto& g = *f.grid();
  const double h = g.spacing();
  const double x = (rho - g.node(0)) / h;
  const int n = g.size();
  if (x < 0.0 || x > n - 1) return 0.0;
  int i0 = static_cast<int>(std::floor(x)) - 2;
  i0 = std::clamp(i0, 0, n - 6);
  cplx acc = 0.0;
  for (int a = 0; a < 6; ++a) {
    double wgt = 1.0;
    for (int b = 0; b < 6; ++b)
      if (b != a) wgt *= (x - (i0 + b)) / static_cast<double>(a - b);
    acc += wgt * f[i0 + a];
  }
  return acc;
}

std::vector<cplx> ApproxSolution::psi_at(std::span<const double> r, double t) const {
  const Params p = params_at(params_, t);
  const ComplexField V = ground_state(ex_.grid) + correction(t);
  std::vector<cplx> out(r.size(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double zeta = (r[i] - p.q) / p.q;
    const double c = cutoff(opt_.profile_window, zeta).value;
    if (c == 0.0) continue;
    const double rho = p.lambda * (r[i] - p.q);
    out[i] = std::polar(p.lambda * c, p.theta + p.v * r[i] / 2.0) * interpolate(V, rho);
  }
  return out;
}

std::pair<double, double> ApproxSolution::support(double t) const {
  const double q = params_.q(t);
  return {q * (1.0 - opt_.profile_window.support), q * (1.0 + opt_.profile_window.support)};
}

double ApproxSolution::mass(double t) const {
  const LayerState st = layer(t);
  double acc = 0.0;
  for (int i = 0; i < st.psi.size(); ++i) acc += st.volume[i] * std::norm(st.psi[i]);
  return acc;
}

double ApproxSolution::energy(double t) const {
  const LayerState st = layer(t);
  double acc = 0.0;
  for (int i = 0; i < st.psi.size(); ++i) {
    const double a2 = std::norm(st.psi[i]);
    acc += st.volume[i] * (std::norm(st.psi_r[i]) - a2 * a2);
  }
  return acc;
}

double ApproxSolution::gradient_norm(double t) const {
  const LayerState st = layer(t);
  double acc = 0.0;
  for (int i = 0; i < st.psi.size(); ++i) acc += st.volume[i] * std::norm(st.psi_r[i]);
  return std::sqrt(acc);
}

double ApproxSolution::variance(double t) const {
  const LayerState st = layer(t);
  double acc = 0.0;
  for (int i = 0; i < st.psi.size(); ++i) acc += st.volume[i] * st.r[i] * st.r[i] * std::norm(st.psi[i]);
  return std::sqrt(acc);
}

double ApproxSolution::peak_radius(double t) const {
  const LayerState st = layer(t);
  int best = 0;
  for (int i = 1; i < st.psi.size(); ++i)
    if (std::abs(st.psi[i]) > std::abs(st.psi[best])) best = i;
  if (best == 0 || best == st.psi.size() - 1) return st.r[best];
  // Parabolic refinement on |psi|^2 over the uniform image grid.
  const double ym = std::norm(st.psi[best - 1]), y0 = std::norm(st.psi[best]),
               yp = std::norm(st.psi[best + 1]);
  const double denom = ym - 2.0 * y0 + yp;
  const double off = denom != 0.0 ? 0.5 * (ym - yp) / denom : 0.0;
  const double dr = st.r[best + 1] - st.r[best];
  return st.r[best] + off * dr;
}

double ApproxSolution::residual_norm(double t, int k) const {
  if (k < 0 || k > 2) throw InvalidArgument("residual_norm: k must be 0, 1 or 2");
  const LayerState st = layer(t);
  ComplexField f = st.residual;
  for (int j = 0; j < k; ++j) f = cplx(st.lambda) * d_rho(f);
  double acc = 0.0;
  for (int i = 0; i < f.size(); ++i) acc += st.volume[i] * std::norm(f[i]);
  return std::pow(t, 2.0 * k / 3.0) * std::sqrt(acc);
}

double runtime_t0(const ApproxSolution& approx, const CutoffWindow& localization, double t_max,
                  double fraction) {
  const CutoffWindow& w = approx.options().profile_window;
  if (w.support > localization.plateau)
    throw InvalidArgument("profile cutoff support is not inside the localization plateau");
  const auto& g = *approx.expansion().grid;
  const auto& P = approx.params();
  for (double t = t_max; t > 1e-8; t *= 0.95) {
    const double q = P.q(t), om = P.omega(t);
    if (!(q > 0.0) || !(om > 0.0)) continue;
    const ComplexField c = approx.correction(t);
    double m = 0.0;
    for (int i = 0; i < c.size(); ++i)
      if (std::abs(g.node(i) * q * om) <= w.support) m = std::max(m, std::abs(c[i]));
    if (m <= fraction) return t;
  }
  throw NumericalFailure("no admissible t0 found");
}

double extrapolated_energy(const ApproxSolution& approx, const ProbeTimes& probes) {
  const int p = 2 * approx.order() - 2;
  Eigen::Matrix3d m;
  Eigen::Vector3d rhs;
  for (double t : probes)
    if (!(t > 0.0)) throw InvalidArgument("energy probes must be positive times");
  // Powers of s / s_max keep the columns comparable in size.
  const double s_max = std::cbrt(*std::max_element(probes.begin(), probes.end()));
  for (int i = 0; i < 3; ++i) {
    const double s = std::cbrt(probes[i]) / s_max;
    m.row(i) << 1.0, std::pow(s, p), std::pow(s, p + 2);
    rhs(i) = approx.energy(probes[i]);
  }
  const auto lu = m.fullPivLu();
  if (!lu.isInvertible()) throw InvalidArgument("energy probes must be distinct");
  return lu.solve(rhs)(0);
}

TuneResult tune_q2(double target, ConstructionOptions base, const ApproxOptions& approx,
                   const ProbeTimes& probes, std::pair<double, double> trials, double tolerance,
                   int max_iterations) {
  auto limit_at = [&](double q2) {
    base.q2 = q2;
    return extrapolated_energy(ApproxSolution(construct_expansion(base), approx), probes);
  };
  TuneResult r;
  r.trial_a = trials.first;
  r.trial_b = trials.second;
  r.limit_a = limit_at(trials.first);
  r.limit_b = limit_at(trials.second);
  const double dq = trials.second - trials.first;
  const double de = r.limit_b - r.limit_a;
  if (dq == 0.0 || de == 0.0 || std::abs(de) <= 1e-12 * (std::abs(r.limit_a) + std::abs(r.limit_b)))
    throw AffineDegenerate("energy limit does not depend on q2 between the two probes");
  r.slope = de / dq;
  r.q2 = trials.first + (target - r.limit_a) / r.slope;
  // Secant refinement: the slope from nearby trials carries round-off of the
  // extrapolated limits, which a long extrapolation in q2 amplifies.
  double q_prev = std::abs(r.q2 - trials.first) < std::abs(r.q2 - trials.second) ? trials.first : trials.second;
  double e_prev = q_prev == trials.first ? r.limit_a : r.limit_b;
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    r.limit = limit_at(r.q2);
    if (std::abs(r.limit - target) <= tolerance) return r;
    if (r.limit == e_prev) break;
    const double next = r.q2 + (target - r.limit) * (r.q2 - q_prev) / (r.limit - e_prev);
    q_prev = r.q2;
    e_prev = r.limit;
    r.q2 = next;
  }
  throw NumericalFailure("energy tuning did not reach the target within the iteration budget");
}

}  // namespace csb
