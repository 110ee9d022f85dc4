// Acceptance suite: one PASS/FAIL line per criterion, followed by indented
// notes. Exits nonzero when any criterion fails.

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "csb/approx_solution.hpp"
#include "csb/config.hpp"
#include "csb/construction.hpp"
#include "csb/diagnostics.hpp"
#include "csb/errors.hpp"
#include "csb/evolver.hpp"
#include "csb/run.hpp"
#include "json.hpp"

using namespace csb;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string summary;
  std::vector<std::string> notes;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = lo * std::pow(hi / lo, i / double(n - 1));
  t.front() = lo;
  t.back() = hi;
  return t;
}

// Order-2 construction with the free coefficient left at zero.
const ApproxSolution& untuned2() {
  static const ApproxSolution a = [] {
    ConstructionOptions o;
    o.order = 2;
    return ApproxSolution(construct_expansion(o));
  }();
  return a;
}

const RunConfig& default_config() {
  static const RunConfig c = parse_config("N = 3\ne = 0\n");
  return c;
}

// Order-N construction tuned to a zero energy limit under default settings.
struct Tuned {
  TuneResult tune;
  std::shared_ptr<const ApproxSolution> approx;
};
const Tuned& tuned(int order, double energy = 0.0) {
  static std::map<std::pair<int, double>, Tuned> cache;
  auto it = cache.find({order, energy});
  if (it == cache.end()) {
    RunConfig c = default_config();
    c.order = order;
    Tuned t;
    t.tune = tune_q2(energy, construction_options(c, 0.0), approx_options(c), c.energy_probes, {0.0, 1.0},
                     c.tune_tolerance);
    t.approx = std::make_shared<const ApproxSolution>(
        construct_expansion(construction_options(c, t.tune.q2)), approx_options(c));
    it = cache.emplace(std::pair{order, energy}, std::move(t)).first;
  }
  return it->second;
}

// ---------------------------------------------------------------- 1

Verdict leading_coefficients() {
  const auto& ex = tuned(3).approx->expansion();
  const double q0 = ex.q[0];
  const double lambda0 = 1.0 / (ex.omega[0] * q0 * q0);
  const double v0 = q0 / 3.0;
  const double eq = std::abs(q0 - std::pow(12.0, 1.0 / 6.0));
  const double el = std::max(std::abs(lambda0 - std::pow(12.0, -1.0 / 3.0)),
                             std::abs(lambda0 - std::pow(2.0, -2.0 / 3.0) * std::pow(3.0, -1.0 / 3.0)));
  const double ev = std::abs(v0 - std::pow(2.0, 1.0 / 3.0) * std::pow(3.0, -5.0 / 6.0));
  Verdict v;
  v.pass = eq <= 1e-10 && el <= 1e-10 && ev <= 1e-10;
  v.summary = fmt("q0 = %.15f, |q0 - 12^(1/6)| = %.2e, lambda0 err %.2e, v0 err %.2e (tol 1e-10)", q0, eq, el, ev);
  return v;
}

// ---------------------------------------------------------------- 2

// <rho^2 phi, phi> / <phi, phi> by a plain trapezoid on [-40, 40].
double sech_second_moment() {
  const double L = 40.0, h = 1e-4;
  double num = 0.0, den = 0.0;
  for (long i = 0;; ++i) {
    const double x = -L + i * h;
    if (x > L) break;
    const double p = 1.0 / std::cosh(x);
    num += x * x * p * p;
    den += p * p;
  }
  return num / den;
}

Verdict first_stage() {
  const auto& ex = tuned(3).approx->expansion();
  const double c0 = -sech_second_moment();
  const double q0 = ex.q[0];
  const auto u1 = ComplexField::from_function(ex.grid, [&](double x) {
    const double p = 1.0 / std::cosh(x);
    return cplx(std::pow(q0, 4) / 6.0 * (x * x * p + c0 * p), 0.0);
  });
  const double err = l2_norm(ex.chi_k(1).imag_part() - u1) / l2_norm(u1);
  Verdict v;
  v.pass = err <= 1e-6;
  v.summary = fmt("relative L2 error of Im chi1 against u1 = %.2e (tol 1e-6); oracle c0 = %.12f, -pi^2/12 = %.12f",
                  err, c0, -kPi * kPi / 12.0);
  return v;
}

// ---------------------------------------------------------------- 3

Verdict identity_k5() {
  const auto& id = tuned(3).approx->expansion().identity5;
  const double defect = std::abs(id.lhs - id.rhs);
  const double scale = std::abs(id.lhs) + std::abs(id.rhs);
  Verdict v;
  v.pass = defect <= 1e-6 * scale;
  v.summary = fmt("lhs = %.10g, rhs = %.10g, |lhs - rhs| / (|lhs| + |rhs|) = %.2e (tol 1e-6)", id.lhs, id.rhs,
                  defect / scale);
  return v;
}

// ---------------------------------------------------------------- 4

// First t at which q(t) vanishes, by scanning and bisection.
double sphere_limit(const ApproxSolution& a) {
  double lo = 1e-8, hi = lo;
  while (a.params().q(hi) > 0.0 && hi < 1.0) lo = hi, hi *= 1.1;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (a.params().q(mid) > 0.0 ? lo : hi) = mid;
  }
  return lo;
}

std::string sphere_note() {
  const auto& ex = tuned(3).approx->expansion();
  return fmt("for N=3 the coefficient q3 = %.6g makes q(t) vanish at t = %.4g, below the upper end of the window",
             ex.q[3], sphere_limit(*tuned(3).approx));
}


struct SlopeResult {
  bool evaluable = true;
  std::string reason;
  double slope[3] = {NAN, NAN, NAN};
};

SlopeResult residual_slopes(const ApproxSolution& a, double lo, double hi) {
  SlopeResult r;
  const auto ts = geometric(lo, hi, 11);
  for (double t : ts) {
    const double q = a.params().q(t), w = a.params().omega(t);
    if (!(q > 0.0) || !(w > 0.0)) {
      r.evaluable = false;
      r.reason = fmt("q(t) = %.3g, omega(t) = %.3g at t = %.3g: the expansion has no sphere there", q, w, t);
      return r;
    }
  }
  for (int k = 0; k < 3; ++k) {
    std::vector<double> y;
    for (double t : ts) y.push_back(a.residual_norm(t, k));
    try {
      r.slope[k] = fit_power_law(ts, y).exponent;
    } catch (const InvalidArgument& e) {
      r.evaluable = false;
      r.reason = e.what();
    }
  }
  return r;
}

Verdict residual_scaling() {
  Verdict v;
  v.pass = true;
  std::string parts;
  // N = 2 passes if either its untuned or its tuned construction does.
  bool n2 = false;
  const std::pair<const char*, const ApproxSolution*> variants[] = {
      {"N=2 q2=0", &untuned2()}, {"N=2 tuned", tuned(2).approx.get()}, {"N=3 tuned", tuned(3).approx.get()}};
  for (const auto& [name, ap] : variants) {
    const int N = ap->order();
    const double need = (2.0 * N - 1.0) / 3.0 - 0.1;
    const auto r = residual_slopes(*ap, 1e-3, 1e-1);
    bool ok = false;
    if (!r.evaluable) {
      parts += fmt("%s not evaluable on [1e-3, 1e-1]: %s; ", name, r.reason.c_str());
    } else {
      ok = r.slope[0] >= need && r.slope[1] >= need && r.slope[2] >= need;
      parts += fmt("%s slopes k=0,1,2 on [1e-3, 1e-1]: %.3f %.3f %.3f vs >= %.3f; ", name, r.slope[0], r.slope[1],
                   r.slope[2], need);
    }
    if (N == 2) n2 = n2 || ok;
    else v.pass = n2 && ok;
  }
  for (int N : {2, 3}) {
    const auto& a = *tuned(N).approx;
    const double need = (2.0 * N - 1.0) / 3.0 - 0.1;
    for (auto [lo, hi] : {std::pair{1e-7, 1e-6}, std::pair{1e-6, 1e-5}}) {
      const auto s = residual_slopes(a, lo, hi);
      v.notes.push_back(fmt("N=%d on [%.0e, %.0e]: k=0,1,2 slopes %.3f %.3f %.3f (bound %.3f)", N, lo, hi,
                            s.slope[0], s.slope[1], s.slope[2], need));
    }
  }
  v.summary = parts.substr(0, parts.size() - 2);
  v.notes.push_back(sphere_note());
  v.notes.push_back("the stated window lies outside the asymptotic regime of the expansion; the two-derivative "
                    "variant at small t is limited by grid-scale noise in the stage solutions");
  return v;
}

// ---------------------------------------------------------------- 5

Verdict orthogonality_parity() {
  const auto& ex = tuned(3).approx->expansion();
  double orth = 0.0, par = 0.0;
  for (const auto& st : ex.stages) {
    orth = std::max({orth, st.orthogonality_re, st.orthogonality_im});
    par = std::max({par, st.parity_defect_re, st.parity_defect_im});
  }
  // Parity recomputed from the fields themselves.
  for (int k = 1; k <= static_cast<int>(ex.chi.size()); ++k) {
    const int s_re = (k % 2 == 1) ? -1 : 1;
    par = std::max({par, parity_defect(ex.chi_k(k).real_part(), s_re), parity_defect(ex.chi_k(k).imag_part(), -s_re)});
  }
  Verdict v;
  v.pass = ex.stages.size() == 8 && orth <= 1e-8 && par <= 1e-10;
  v.summary = fmt("%zu stages; max relative kernel pairing %.2e (tol 1e-8), max parity defect %.2e (tol 1e-10)",
                  ex.stages.size(), orth, par);
  return v;
}

// ---------------------------------------------------------------- 6

WaveState gaussian(const RadialGridPtr& g, double amplitude) {
  std::vector<cplx> psi(g->size());
  for (int i = 0; i < g->size(); ++i) psi[i] = amplitude * std::exp(-g->node(i) * g->node(i));
  return reduce(g, psi);
}

double free_error(const WaveState& s) {
  const auto psi = unreduce(s);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < s.grid->size(); ++i) {
    const double r = s.grid->node(i);
    const cplx a(1.0, 4.0 * s.t);
    const cplx ex = std::pow(a, -1.5) * std::exp(-r * r / a);
    num += std::norm(psi[i] - ex) * r * r;
    den += std::norm(ex) * r * r;
  }
  return std::sqrt(num / den);
}

Verdict evolver_correctness(const nlohmann::json* scenario) {
  EvolveControls lin;
  lin.nonlinear = false;
  const double err = free_error(evolve(gaussian(make_radial_grid(8.0, 2000), 1.0), 0.1, lin).samples.back());

  EvolveControls fixed = lin;
  fixed.dt_factor = 1e6;
  fixed.dt_max = 2e-3;
  const double coarse = free_error(evolve(gaussian(make_radial_grid(8.0, 400), 1.0), 0.2, fixed).samples.back());
  fixed.dt_max = 1e-3;
  const double fine = free_error(evolve(gaussian(make_radial_grid(8.0, 800), 1.0), 0.2, fixed).samples.back());
  const double ratio = coarse / fine;

  const auto g = make_radial_grid(8.0, 1000);
  const auto s = gaussian(g, 1.0);
  const auto end = evolve(s, 0.2).samples.back();
  const double m0 = discrete_mass(s), e0 = discrete_energy(s);
  const double dm = std::abs(discrete_mass(end) - m0) / m0;
  const double de = std::abs(discrete_energy(end) - e0) / (1.0 + std::abs(e0));

  // Pseudoconformal law on a nonlinear Gaussian run, trapezoid in time.
  const auto g2 = make_radial_grid(10.0, 2000);
  EvolveControls c;
  for (int k = 0; k <= 150; ++k) c.sample_times.push_back(0.05 + k * 0.001);
  const auto tr = evolve(gaussian(g2, 1.0), 0.2, c);
  double integral = 0.0;
  const WaveState *first = nullptr, *prev = nullptr;
  for (const auto& smp : tr.samples) {
    if (smp.t < 0.05 - 1e-12) continue;
    if (!first) first = &smp;
    if (prev) integral += (smp.t - prev->t) * (prev->t * discrete_quartic(*prev) + smp.t * discrete_quartic(smp));
    prev = &smp;
  }
  const double dq = pseudoconformal_quantity(*prev) - pseudoconformal_quantity(*first);
  const double pc = std::abs(dq - integral) / std::abs(integral);

  Verdict v;
  v.pass = err <= 1e-4 && std::abs(ratio - 4.0) <= 0.4 && dm <= 1e-8 && de <= 1e-6 && pc <= 0.05;
  v.summary = fmt("free Gaussian error %.2e (tol 1e-4), halving ratio %.3f (4 +- 0.4), mass drift %.2e (tol 1e-8), "
                  "energy drift %.2e (tol 1e-6), pseudoconformal deviation %.2e (tol 0.05)",
                  err, ratio, dm, de, pc);
  if (scenario) {
    for (const auto& chk : (*scenario)["checks"]) {
      const std::string name = chk["name"];
      if (name == "mass_drift" || name == "energy_drift_kinetic_scale" || name == "energy_drift_unit_scale" ||
          name == "pseudoconformal_law")
        v.notes.push_back(fmt("default blow-up run %s = %.3e", name.c_str(),
                              chk["value"].is_null() ? NAN : chk["value"].get<double>()));
    }
    v.notes.push_back("on the blow-up run the energy is a cancellation of two terms of size ||grad psi||^2, so the "
                      "drift is reported against that scale");
  }
  return v;
}

// ---------------------------------------------------------------- 7

struct RunTrace {
  std::vector<double> t, x1, x1_scaled;
  std::vector<std::array<double, 4>> kappa;
  bool kappa_valid = true;
};

RunTrace trace_run(int N, double t0, double eps, int samples) {
  RunConfig c = default_config();
  c.order = N;
  c.t0_policy = T0Policy::Fixed;
  c.t0 = t0;
  c.epsilon = eps;
  c.samples = samples;
  const RunSetup s = setup_run(c, tuned(N).tune.q2);
  RunTrace tr;
  WaveState cur = sample_approx(*s.approx, s.grid, s.t_start);
  EvolveControls ctl;
  for (std::size_t k = 0; k < s.sample_times.size(); ++k) {
    if (k > 0) cur = evolve(cur, s.sample_times[k], ctl).samples.back();
    const WaveState pn = sample_approx(*s.approx, s.grid, cur.t);
    const Modulation p = modulation_at(*s.approx, cur.t);
    const NormReport n = compare(cur, pn, p.q, c.localization_window);
    tr.t.push_back(cur.t);
    tr.x1.push_back(n.h_x1);
    tr.x1_scaled.push_back(n.h_x1 / std::pow(cur.t, 2.0 * N / 3.0));
    WaveState h = cur;
    for (std::size_t i = 0; i < h.w.size(); ++i) h.w[i] -= pn.w[i];
    try {
      const auto m = kappa_projections(h, p, c.localization_window);
      tr.kappa.push_back({m.kappa[0], m.kappa[1], m.kappa[2], m.kappa[3]});
    } catch (const Error&) {
      tr.kappa_valid = false;
      tr.kappa.push_back({NAN, NAN, NAN, NAN});
    }
  }
  return tr;
}

// Largest |kappa_j| / (A t^p) with A fitted at the fixed exponent p.
double kappa_trend_ratio(const RunTrace& tr, double p) {
  double worst = 0.0;
  for (int j = 0; j < 4; ++j) {
    double la = 0.0;
    int n = 0;
    for (std::size_t i = 1; i < tr.t.size(); ++i)
      if (tr.kappa[i][j] != 0.0) {
        la += std::log(std::abs(tr.kappa[i][j])) - p * std::log(tr.t[i]);
        ++n;
      }
    if (n == 0) continue;
    const double amp = std::exp(la / n);
    for (std::size_t i = 1; i < tr.t.size(); ++i)
      if (tr.kappa[i][j] != 0.0) worst = std::max(worst, std::abs(tr.kappa[i][j]) / (amp * std::pow(tr.t[i], p)));
  }
  return worst;
}

Verdict comparison_bound() {
  Verdict v;
  std::string reasons;
  for (int N : {2, 3}) {
    RunConfig c = default_config();
    c.order = N;
    c.epsilon = 0.02;
    try {
      setup_run(c, tuned(N).tune.q2);
      reasons += fmt("N=%d: epsilon = 0.02 accepted; ", N);
    } catch (const Error& e) {
      reasons += fmt("N=%d: %s; ", N, e.what());
    }
  }
  v.pass = false;
  v.summary = "epsilon = 0.02 with runtime t0 is not runnable: " + reasons.substr(0, reasons.size() - 2);

  // The same measurements at a common feasible epsilon.
  RunConfig c3 = default_config();
  const double t0 = runtime_t0(*tuned(3).approx, c3.localization_window, 0.5, c3.t0_correction_bound);
  const double eps = 0.1 * t0;
  const RunTrace a = trace_run(2, t0, eps, 9), b = trace_run(3, t0, eps, 9);
  double sup2 = 0.0, sup3 = 0.0;
  int ordered = 0;
  for (std::size_t i = 0; i < a.t.size(); ++i) {
    sup2 = std::max(sup2, a.x1_scaled[i]);
    sup3 = std::max(sup3, b.x1_scaled[i]);
    if (i > 0 && b.x1[i] < a.x1[i]) ++ordered;
  }
  const bool zero2 = a.kappa[0] == std::array<double, 4>{0, 0, 0, 0};
  const bool zero3 = b.kappa[0] == std::array<double, 4>{0, 0, 0, 0};
  v.notes.push_back(fmt("common run epsilon = %.4g, t0 = %.4g, 9 samples per order", eps, t0));
  v.notes.push_back(fmt("sup ||h||_X1 / t^(2N/3): N=2 %.4g, N=3 %.4g (%s)", sup2, sup3,
                        std::isfinite(sup2) && std::isfinite(sup3) ? "finite" : "not finite"));
  v.notes.push_back(fmt("||h||_X1 smaller for N=3 than N=2 at %d of %zu matched times after epsilon; at t0: N=2 "
                        "%.4g, N=3 %.4g",
                        ordered, a.t.size() - 1, a.x1.back(), b.x1.back()));
  v.notes.push_back(fmt("kappa_j(epsilon) = 0: N=2 %s, N=3 %s", zero2 ? "yes" : "no", zero3 ? "yes" : "no"));
  v.notes.push_back(fmt("max |kappa_j| / fitted t^((2N+1)/3) trend: N=2 %.3f, N=3 %.3f (limit 3)",
                        kappa_trend_ratio(a, 5.0 / 3.0), kappa_trend_ratio(b, 7.0 / 3.0)));
  return v;
}

// ---------------------------------------------------------------- 8

struct Rates {
  bool evaluable = true;
  std::string reason;
  double radius = NAN, gradient = NAN, moment = NAN;
};

Rates layer_rates(const ApproxSolution& a, double lo, double hi) {
  Rates r;
  const auto ts = geometric(lo, hi, 11);
  std::vector<double> rad, grad, mom;
  for (double t : ts) {
    const double q = a.params().q(t), w = a.params().omega(t);
    if (!(q > 0.0) || !(w > 0.0)) {
      r.evaluable = false;
      r.reason = fmt("q(t) = %.3g, omega(t) = %.3g at t = %.3g", q, w, t);
      return r;
    }
    rad.push_back(a.peak_radius(t));
    grad.push_back(a.gradient_norm(t));
    mom.push_back(a.variance(t));
  }
  r.radius = fit_power_law(ts, rad).exponent;
  r.gradient = fit_power_law(ts, grad).exponent;
  r.moment = fit_power_law(ts, mom).exponent;
  return r;
}

bool rates_ok(const Rates& r) {
  return r.evaluable && std::abs(r.radius - 1.0 / 3.0) <= 0.03 && std::abs(r.gradient + 2.0 / 3.0) <= 0.03 &&
         std::abs(r.moment - 1.0 / 3.0) <= 0.03;
}

std::string rates_text(const Rates& r) {
  if (!r.evaluable) return "not evaluable: " + r.reason;
  return fmt("radius %.4f, gradient %.4f, ||x psi|| %.4f", r.radius, r.gradient, r.moment);
}

Verdict rate_witnesses() {
  const Rates lit = layer_rates(*tuned(3).approx, 1e-3, 1e-1);
  Verdict v;
  v.pass = rates_ok(lit);
  v.summary = "N=3 on [1e-3, 1e-1]: " + rates_text(lit) + " (targets 1/3, -2/3, 1/3 +- 0.03)";
  v.notes.push_back(sphere_note());
  for (const auto& [name, ap] : {std::pair{"N=2 q2=0", &untuned2()}, std::pair{"N=2 tuned", tuned(2).approx.get()}}) {
    const Rates r = layer_rates(*ap, 1e-3, 1e-1);
    v.notes.push_back(std::string(name) + " on [1e-3, 1e-1]: " + rates_text(r) +
                      (rates_ok(r) ? " (within tolerance)" : " (outside tolerance)"));
  }
  for (auto [lo, hi] : {std::pair{1e-9, 1e-8}, std::pair{1e-6, 1e-5}}) {
    const Rates r = layer_rates(*tuned(3).approx, lo, hi);
    v.notes.push_back(fmt("N=3 on [%.0e, %.0e]: ", lo, hi) + rates_text(r) +
                      (rates_ok(r) ? " (within tolerance)" : " (outside tolerance)"));
  }
  return v;
}

// ---------------------------------------------------------------- 9

Verdict energy_tuning() {
  Verdict v;
  v.pass = true;
  std::string parts;
  for (double e : {0.0, 1.0}) {
    const auto& t = tuned(3, e);
    const double dev = std::abs(t.tune.limit - e);
    const auto ts = geometric(1e-7, 1e-6, 11);
    bool mono = true;
    double prev = -1.0;
    for (double s : ts) {
      const double d = std::abs(t.approx->energy(s) - e);
      if (!(d > prev)) mono = false;
      prev = d;
    }
    const bool ok = dev <= 1e-3 && mono;
    v.pass = v.pass && ok;
    parts += fmt("e=%g: q2 = %.6f, limit %.3e off (tol 1e-3), |E(t) - e| %s on [1e-7, 1e-6]; ", e, t.tune.q2, dev,
                 mono ? "increases monotonically in t" : "is not monotone");
    v.notes.push_back(fmt("e=%g: |E(1e-7) - e| = %.4g, |E(1e-6) - e| = %.4g", e, std::abs(t.approx->energy(1e-7) - e),
                          std::abs(t.approx->energy(1e-6) - e)));
  }
  v.summary = parts.substr(0, parts.size() - 2);
  return v;
}

// ---------------------------------------------------------------- 10

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CSB_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& diff) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) {
      diff = rel.string();
      return false;
    }
  }
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) --files;
  if (files != 0) diff = "file sets differ";
  return files == 0;
}

Verdict cli_determinism(nlohmann::json& summary) {
  const fs::path root = fs::temp_directory_path() / "csb_acceptance";
  fs::remove_all(root);
  const std::string cfg = std::string("--config ") + CSB_DEFAULT_CONFIG;
  const int c1 = run_cli("construct " + cfg + " --out " + (root / "a").string());
  const int c2 = run_cli("construct " + cfg + " --out " + (root / "b").string());
  std::string diff;
  const bool identical = c1 == 0 && c2 == 0 && same_tree(root / "a", root / "b", diff);
  const int ev = run_cli("evolve " + cfg + " --out " + (root / "a").string());
  const int rep = run_cli("report --strict " + cfg + " --out " + (root / "a").string());
  Verdict v;
  v.pass = identical && ev == 0 && rep == 0;
  v.summary = fmt("construct outputs %s; evolve exit %d; report --strict exit %d", identical ? "byte-identical" : "differ",
                  ev, rep);
  if (!diff.empty()) v.notes.push_back("first difference: " + diff);
  if (fs::exists(root / "a" / "summary.json")) {
    summary = nlohmann::json::parse(slurp(root / "a" / "summary.json"));
    for (const auto& chk : summary["checks"])
      if (chk["gated"].get<bool>())
        v.notes.push_back(fmt("%s = %.4g: %s", chk["name"].get<std::string>().c_str(),
                              chk["value"].is_null() ? NAN : chk["value"].get<double>(),
                              chk["pass"].get<bool>() ? "pass" : "fail"));
  }
  return v;
}

}  // namespace

int main() {
  const char* titles[] = {"leading coefficients",       "closed-form first stage", "k = 5 identity",
                          "residual scaling",           "orthogonality and parity", "evolver correctness",
                          "comparison bound",           "rate witnesses",  "energy tuning",
                          "CLI determinism and strict report"};
  std::vector<Verdict> v(10);
  nlohmann::json summary;
  const auto guard = [](auto&& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      Verdict x;
      x.summary = std::string("exception: ") + e.what();
      return x;
    }
  };
  v[9] = guard([&] { return cli_determinism(summary); });
  v[0] = guard(leading_coefficients);
  v[1] = guard(first_stage);
  v[2] = guard(identity_k5);
  v[3] = guard(residual_scaling);
  v[4] = guard(orthogonality_parity);
  v[5] = guard([&] { return evolver_correctness(summary.is_null() ? nullptr : &summary); });
  v[6] = guard(comparison_bound);
  v[7] = guard(rate_witnesses);
  v[8] = guard(energy_tuning);

  int failed = 0;
  for (int i = 0; i < 10; ++i) {
    std::printf("criterion %2d [%s] %s: %s\n", i + 1, v[i].pass ? "PASS" : "FAIL", titles[i], v[i].summary.c_str());
    for (const auto& n : v[i].notes) std::printf("    note: %s\n", n.c_str());
    failed += !v[i].pass;
  }
  std::printf("%d of 10 criteria pass\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
