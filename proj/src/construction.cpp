#include "csb/construction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Dense>

#include "csb/errors.hpp"

namespace csb {

namespace {

double relative_pairing(const ComplexField& g, const ComplexField& k) {
  const double gn = l2_norm(g);
  if (gn == 0.0) return 0.0;
  return std::abs(inner(g, k)) / (gn * l2_norm(k));
}

double rel_diff(const ComplexField& a, const ComplexField& b) {
  const double bn = l2_norm(b);
  return l2_norm(a - b) / (bn > 0.0 ? bn : 1.0);
}

// Exponential decay rate mu from the least-squares fit
//   log max(|g(rho)|, |g(-rho)|) = a + m log|rho| - mu |rho|
// over the outer half of the grid, so polynomial prefactors do not
// masquerade as slow decay.
double decay_rate(const ComplexField& g) {
  const auto& grid = *g.grid();
  const int n = grid.size(), c = grid.center();
  const double L = grid.half_width();
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  int m = 0;
  for (int i = c + 1; i < n; ++i) {
    const double x = grid.node(i);
    if (x < 0.5 * L || x > 0.95 * L) continue;
    const double a = std::max(std::abs(g[i]), std::abs(g[n - 1 - i]));
    if (!(a > 0.0)) continue;
    const Eigen::Vector3d row(1.0, std::log(x), -x);
    ata += row * row.transpose();
    aty += row * std::log(a);
    ++m;
  }
  if (m < 3) return INFINITY;
  return ata.ldlt().solve(aty)(2);
}

ComplexField solve_stage(const StageRhs& rhs, const StageSolvers& solvers, StageRecord* record) {
  LinOp::SolveReport rp, rm;
  const ComplexField v = solvers.plus.solve_constrained(rhs.plus, solvers.tolerances, rp);
  const ComplexField u = solvers.minus.solve_constrained(rhs.minus, solvers.tolerances, rm);
  const ComplexField chi = v.real_part() + cplx(0.0, 1.0) * u.real_part();
  if (record) {
    record->kernel_pairing_plus = relative_pairing(rhs.plus, solvers.plus.kernel());
    record->kernel_pairing_minus = relative_pairing(rhs.minus, solvers.minus.kernel());
    record->solve_residual_plus = rp.residual_re;
    record->solve_residual_minus = rm.residual_re;
    record->decay_rate_plus = decay_rate(rhs.plus);
    record->decay_rate_minus = decay_rate(rhs.minus);
  }
  return chi;
}

void fill_field_checks(int k, const ComplexField& chi, const StageSolvers& solvers,
                       StageRecord& record) {
  const int sign = k % 2 == 0 ? 1 : -1;
  record.k = k;
  record.chi_norm = l2_norm(chi);
  record.parity_defect_re = parity_defect(chi.real_part(), sign);
  record.parity_defect_im = parity_defect(chi.imag_part(), -sign);
  const double n = record.chi_norm > 0.0 ? record.chi_norm : 1.0;
  record.orthogonality_re = std::abs(inner(chi.real_part(), solvers.plus.kernel())) / n;
  record.orthogonality_im = std::abs(inner(chi.imag_part(), solvers.minus.kernel())) / n;
}

}  // namespace

StageData ExpansionResult::stage_data() const {
  return StageData{grid, q, omega, chi};
}

StageSolvers::StageSolvers(const GridPtr& grid, SolveTolerances tol)
    : plus(LinOpKind::Lplus, grid), minus(LinOpKind::Lminus, grid), tolerances(tol) {}

double solve_q0(const GridPtr& grid) {
  const ComplexField phi_r = ground_state_d1(grid);
  auto pairing = [&](double q0) {
    StageData d;
    d.grid = grid;
    d.q = {q0};
    return inner(assemble_rhs(1, d).plus, phi_r);
  };
  double q = 1.5;
  for (int it = 0; it < 60; ++it) {
    const double h = 1e-5;
    const double f = pairing(q);
    const double df = (pairing(q + h) - pairing(q - h)) / (2.0 * h);
    if (df == 0.0 || !std::isfinite(df)) throw NumericalFailure("q0 Newton iteration: zero derivative");
    const double step = f / df;
    q -= step;
    if (std::abs(step) <= 1e-15 * std::abs(q)) return q;
  }
  throw NumericalFailure("q0 Newton iteration did not converge");
}

OddTemplates odd_templates(int l, double q0, const GridPtr& grid) {
  const ComplexField phi = ground_state(grid);
  const ComplexField phi_r = ground_state_d1(grid);
  const ComplexField rphi = phi.times_rho();
  const ComplexField rphi_r = phi_r.times_rho();
  const double L = l;
  const double q03 = q0 * q0 * q0, q04 = q03 * q0;
  OddTemplates t;
  t.q_plus = cplx(2.0) * phi_r - cplx(4.0 / 3.0 * (2 * L * L - L - 7)) * rphi;
  t.omega_plus = cplx(2.0 * q0) * phi_r + cplx(4.0 * q0) * rphi;
  t.q_minus = cplx(-2.0 * q03 / 3.0 * (L + 2)) * (phi + cplx(2.0) * rphi_r);
  t.omega_minus = cplx(-2.0 * q04 / 3.0) * (phi + cplx(2.0) * rphi_r) -
                  cplx(2.0 * L * q04 / 3.0) * (phi + rphi_r);
  return t;
}

ComplexField stage_even(int k, const StageData& state, const StageSolvers& solvers,
                        StageRecord* record) {
  if (k < 2 || k % 2 != 0) throw InvalidArgument("stage_even: k must be even and >= 2");
  const StageRhs rhs = assemble_rhs(k, state);
  ComplexField chi = solve_stage(rhs, solvers, record);
  if (record) fill_field_checks(k, chi, solvers, *record);
  return chi;
}

OddStage stage_odd(int l, const StageData& state, const StageSolvers& solvers, double q2_input,
                   double template_tolerance, StageRecord* record) {
  if (l < 1) throw InvalidArgument("stage_odd: l must be >= 1 (stage one is solve_q0)");
  const int k = 2 * l + 1;
  const GridPtr& grid = state.grid;
  if (state.q.size() < static_cast<std::size_t>(l) || state.omega.size() < static_cast<std::size_t>(l) ||
      state.chi.size() < static_cast<std::size_t>(k - 1))
    throw InvalidArgument("stage_odd: missing lower-stage data for stage " + std::to_string(k));

  StageData trial = state;
  trial.q.resize(l + 1);
  trial.omega.resize(l + 1);
  trial.chi.resize(k - 1);
  auto rhs_at = [&](double ql, double wl) {
    trial.q[l] = ql;
    trial.omega[l] = wl;
    return assemble_rhs(k, trial);
  };
  const StageRhs base = rhs_at(0.0, 0.0);
  const StageRhs with_q = rhs_at(1.0, 0.0);
  const StageRhs with_w = rhs_at(0.0, 1.0);

  const double q0 = state.q[0];
  const OddTemplates tpl = odd_templates(l, q0, grid);
  const double mismatch = std::max({rel_diff(with_q.plus - base.plus, tpl.q_plus),
                                    rel_diff(with_q.minus - base.minus, tpl.q_minus),
                                    rel_diff(with_w.plus - base.plus, tpl.omega_plus),
                                    rel_diff(with_w.minus - base.minus, tpl.omega_minus)});
  if (!(mismatch <= template_tolerance)) {
    std::ostringstream os;
    os << "stage " << k << ": assembled linear part differs from the templates by " << mismatch;
    throw TemplateMismatch(os.str());
  }

  const ComplexField phi = ground_state(grid);
  const ComplexField phi_r = ground_state_d1(grid);
  const double nphi2 = inner(phi, phi), nphir2 = inner(phi_r, phi_r);
  const double gm = inner(base.minus, phi);   // (G~-, phi)
  const double gp = inner(base.plus, phi_r);  // (G~+, phi_rho)
  const double q03 = q0 * q0 * q0, q04 = q03 * q0;
  const double degeneracy = 2.0 * l * l - l - 6.0;

  OddStage out;
  out.omega = 3.0 * gm / (l * q04 * nphi2);
  if (l == 1) {
    out.q = -0.4 * q0 * out.omega + gp / (10.0 * nphir2);
  } else if (l == 2) {
    out.q = q2_input;
    out.identity.lhs = q03 * gp;
    out.identity.rhs = 2.0 * gm;
    const double scale = std::abs(out.identity.lhs) + std::abs(out.identity.rhs);
    out.identity.relative_defect =
        scale > 0.0 ? std::abs(out.identity.lhs - out.identity.rhs) / scale : 0.0;
  } else {
    if (degeneracy == 0.0) throw DegenerateStage("stage " + std::to_string(k) + ": 2l^2 - l - 6 = 0");
    out.q = (4.0 * gm / (l * q03 * nphir2) - gp / nphir2) / (2.0 * degeneracy);
  }

  // Independent 2x2 solve of the two solvability conditions from numerically
  // paired probe differences; must agree with the closed forms.
  double formula_mismatch = 0.0;
  {
    const double a11 = inner(with_q.plus - base.plus, phi_r);
    const double a12 = inner(with_w.plus - base.plus, phi_r);
    const double a21 = inner(with_q.minus - base.minus, phi);
    const double a22 = inner(with_w.minus - base.minus, phi);
    if (l == 2) {
      const double w = -gm / a22;
      formula_mismatch = std::abs(w - out.omega) / std::max(1.0, std::abs(w));
    } else {
      const double det = a11 * a22 - a12 * a21;
      const double ql = (-gp * a22 + gm * a12) / det;
      const double wl = (-gm * a11 + gp * a21) / det;
      formula_mismatch = std::max(std::abs(ql - out.q) / std::max(1.0, std::abs(ql)),
                                  std::abs(wl - out.omega) / std::max(1.0, std::abs(wl)));
    }
  }

  const StageRhs rhs = rhs_at(out.q, out.omega);
  out.chi = solve_stage(rhs, solvers, record);
  if (record) {
    fill_field_checks(k, out.chi, solvers, *record);
    record->template_mismatch = mismatch;
    record->formula_mismatch = formula_mismatch;
  }
  return out;
}

ExpansionResult construct_expansion(const ConstructionOptions& options) {
  if (options.order < 2) throw InvalidArgument("construction order N must be >= 2");
  const int N = options.order;
  ExpansionResult res;
  res.order = N;
  res.grid = make_rho_grid(options.half_width, options.point_count);
  const StageSolvers solvers(res.grid, options.tolerances);

  const ComplexField phi = ground_state(res.grid);
  const ComplexField phi_r = ground_state_d1(res.grid);
  res.a_coefficient = inner(phi, phi) / (36.0 * inner(phi_r, phi_r));

  StageData state;
  state.grid = res.grid;
  state.q = {solve_q0(res.grid)};
  state.omega = {1.0};

  {
    StageRecord rec;
    const StageRhs rhs = assemble_rhs(1, state);
    ComplexField chi = solve_stage(rhs, solvers, &rec);
    fill_field_checks(1, chi, solvers, rec);
    state.chi.push_back(std::move(chi));
    res.stages.push_back(rec);
  }
  for (int k = 2; k <= 2 * N + 2; ++k) {
    StageRecord rec;
    if (k % 2 == 0) {
      state.chi.push_back(stage_even(k, state, solvers, &rec));
    } else {
      const int l = (k - 1) / 2;
      OddStage st = stage_odd(l, state, solvers, options.q2, options.template_tolerance, &rec);
      state.q.push_back(st.q);
      state.omega.push_back(st.omega);
      state.chi.push_back(std::move(st.chi));
      if (l == 2) res.identity5 = st.identity;
    }
    res.stages.push_back(rec);
  }

  // Whole-expansion check: every coefficient of the profile equation up to
  // degree 2N+2 vanishes.
  const FieldSeries e = profile_residual(state, 2 * N + 2);
  for (int k = 1; k <= 2 * N + 2; ++k) {
    StageData lower = state;
    const StageRhs d = assemble_rhs(k, lower);
    const double dn = std::hypot(l2_norm(d.plus), l2_norm(d.minus));
    res.stages[k - 1].equation_residual = l2_norm(e.coeff(k)) / (dn > 0.0 ? dn : 1.0);
  }

  res.q = std::move(state.q);
  res.omega = std::move(state.omega);
  res.chi = std::move(state.chi);
  return res;
}

// ---------------------------------------------------------------- parameters

ParameterFunctions::ParameterFunctions(std::vector<double> q, std::vector<double> omega,
                                       int theta_degree)
    : q_(std::move(q)), omega_(std::move(omega)), series_(parameter_series(q_, omega_, theta_degree)) {}

double ParameterFunctions::q(double t) const {
  const double s = std::cbrt(t);
  double acc = 0.0;
  for (std::size_t k = 0; k < q_.size(); ++k) acc += q_[k] * std::pow(s, 2.0 * k + 1);
  return acc;
}

double ParameterFunctions::dq(double t) const {
  const double s = std::cbrt(t);
  double acc = 0.0;
  for (std::size_t k = 0; k < q_.size(); ++k) {
    const double d = 2.0 * k + 1;
    acc += q_[k] * d / 3.0 * std::pow(s, d - 3);
  }
  return acc;
}

double ParameterFunctions::d2q(double t) const {
  const double s = std::cbrt(t);
  double acc = 0.0;
  for (std::size_t k = 0; k < q_.size(); ++k) {
    const double d = 2.0 * k + 1;
    acc += q_[k] * d / 3.0 * (d - 3) / 3.0 * std::pow(s, d - 6);
  }
  return acc;
}

double ParameterFunctions::omega(double t) const {
  const double s = std::cbrt(t);
  double acc = 0.0;
  for (std::size_t k = 0; k < omega_.size(); ++k) acc += omega_[k] * std::pow(s, 2.0 * k);
  return acc;
}

double ParameterFunctions::domega(double t) const {
  const double s = std::cbrt(t);
  double acc = 0.0;
  for (std::size_t k = 1; k < omega_.size(); ++k) {
    const double d = 2.0 * k;
    acc += omega_[k] * d / 3.0 * std::pow(s, d - 3);
  }
  return acc;
}

double ParameterFunctions::lambda(double t) const {
  const double qt = q(t);
  return 1.0 / (omega(t) * qt * qt);
}

double ParameterFunctions::dlambda(double t) const {
  return -lambda(t) * (domega(t) / omega(t) + 2.0 * dq(t) / q(t));
}

double ParameterFunctions::theta(double t) const {
  // Series value plus the antiderivative of what the truncated series misses,
  // so that d/dt theta() equals the closed-form theta' to quadrature accuracy.
  const ScalarSeries dseries = differentiate_time(series_.theta);
  const double s_end = std::cbrt(t);
  const int m = 512;
  const double h = s_end / m;
  double acc = 0.0;
  for (int i = 1; i <= m; ++i) {
    const double s = i * h, tau = s * s * s;
    const double f = (theta_prime_exact(tau) - dseries.evaluate(tau)) * 3.0 * s * s;
    acc += (i == m ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f;
  }
  return series_.theta.evaluate(t) + acc * h / 3.0;
}

double ParameterFunctions::dtheta(double t) const { return theta_prime_exact(t); }

double ParameterFunctions::theta_prime_exact(double t) const {
  const double l = lambda(t), vv = v(t);
  return l * l - 0.25 * vv * vv - 0.5 * dv(t) * q(t);
}

ParameterFunctions close_parameters(const ExpansionResult& expansion, int theta_degree) {
  if (theta_degree <= 0) theta_degree = 6 * expansion.order + 12;
  return ParameterFunctions(expansion.q, expansion.omega, theta_degree);
}

// ---------------------------------------------------------------- output

std::string coefficient_table(const ExpansionResult& ex) {
  std::ostringstream os;
  os << "k,q_k,omega_k\n";
  char buf[128];
  for (std::size_t k = 0; k < ex.q.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.15e,%.15e\n", k, ex.q[k], ex.omega[k]);
    os << buf;
  }
  return os.str();
}

std::string snapshot_text(const ExpansionResult& ex) {
  std::ostringstream os;
  char buf[512];
  os << "# construction snapshot\n";
  os << "order " << ex.order << "\n";
  std::snprintf(buf, sizeof buf, "grid half_width %.6g points %d\n", ex.grid->half_width(),
                ex.grid->size());
  os << buf;
  std::snprintf(buf, sizeof buf, "a_coefficient %.15e\n", ex.a_coefficient);
  os << buf;
  std::snprintf(buf, sizeof buf, "identity5 lhs %.15e rhs %.15e relative_defect %.3e\n",
                ex.identity5.lhs, ex.identity5.rhs, ex.identity5.relative_defect);
  os << buf;
  os << "[coefficients]\n" << coefficient_table(ex);
  os << "[stages]\n";
  os << "k,chi_norm,kernel_pairing_plus,kernel_pairing_minus,solve_residual_plus,"
        "solve_residual_minus,equation_residual,parity_re,parity_im,orth_re,orth_im,"
        "template_mismatch,formula_mismatch,decay_plus,decay_minus\n";
  for (const auto& s : ex.stages) {
    std::snprintf(buf, sizeof buf,
                  "%d,%.9e,%.3e,%.3e,%.3e,%.3e,%.3e,%.3e,%.3e,%.3e,%.3e,%.3e,%.3e,%.4f,%.4f\n", s.k,
                  s.chi_norm, s.kernel_pairing_plus, s.kernel_pairing_minus, s.solve_residual_plus,
                  s.solve_residual_minus, s.equation_residual, s.parity_defect_re,
                  s.parity_defect_im, s.orthogonality_re, s.orthogonality_im, s.template_mismatch,
                  s.formula_mismatch, s.decay_rate_plus, s.decay_rate_minus);
    os << buf;
  }
  return os.str();
}

std::string field_csv(const ComplexField& f) {
  std::ostringstream os;
  os << "rho,re,im\n";
  char buf[128];
  for (int i = 0; i < f.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g,%.15e,%.15e\n", f.grid()->node(i), f[i].real(), f[i].imag());
    os << buf;
  }
  return os.str();
}

}  // namespace csb
