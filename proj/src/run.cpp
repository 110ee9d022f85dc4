#include "csb/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "csb/construction.hpp"
#include "csb/svg.hpp"
#include "json.hpp"

namespace csb {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kResidualSamples = 11;
constexpr double kGradientRange[2] = {-0.73, -0.60};
constexpr double kMassDriftTolerance = 1e-8;
constexpr double kEnergyDriftTolerance = 1e-6;
constexpr double kPseudoconformalTolerance = 0.05;
constexpr double kEnergyLimitTolerance = 1e-3;
constexpr double kKappaGrowthFactor = 3.0;
constexpr double kCoercivityAmplitude = 1e-3;

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw MissingInput("cannot write '" + p.string() + "'");
  o << text;
  if (!o) throw MissingInput("write failed for '" + p.string() + "'");
}

json read_json(const fs::path& p, const std::string& producer) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInput("missing '" + p.string() + "'; run `" + producer + "` first");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw MissingInput("cannot parse '" + p.string() + "': " + e.what());
  }
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// null for non-finite values.
json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json fit_json(const RateFit& f) {
  return {{"exponent", jnum(f.exponent)}, {"amplitude", jnum(f.amplitude)}, {"residual", jnum(f.residual)},
          {"samples", f.samples}};
}

std::optional<RateFit> try_fit(const std::vector<double>& t, const std::vector<double>& y, std::string& why) {
  try {
    return fit_power_law(t, y);
  } catch (const InvalidArgument& e) {
    why = e.what();
    return std::nullopt;
  }
}

double max_psi_on_layer(const ApproxSolution& a, double t) {
  const auto st = a.layer(t);
  return st.psi.max_abs();
}

const char* direction_name(Direction d) { return d == Direction::Backward ? "backward" : "forward"; }

std::string state_file(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "state_%03zu.csv", k);
  return buf;
}

double construction_q2(const json& cj, const RunConfig& c) {
  if (cj.value("fingerprint", std::string()) != construction_fingerprint(c))
    throw MissingInput("construction output was produced with different settings; rerun `construct`");
  return cj.at("q2").get<double>();
}

WaveState load_state(const fs::path& p, const RadialGridPtr& grid) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInput("missing trajectory file '" + p.string() + "'; rerun `evolve`");
  WaveState s = read_checkpoint(in);
  if (s.grid->size() != grid->size() ||
      std::abs(s.grid->outer_radius() - grid->outer_radius()) > 1e-12 * grid->outer_radius())
    throw MissingInput("trajectory file '" + p.string() + "' does not match the configured grid; rerun `evolve`");
  s.grid = grid;
  return s;
}

json check(const std::string& name, double value, const std::string& requirement, bool pass, bool gated,
           const std::string& note = {}) {
  json j{{"name", name}, {"value", jnum(value)}, {"requirement", requirement}, {"pass", pass}, {"gated", gated}};
  if (!note.empty()) j["note"] = note;
  return j;
}

}  // namespace

ConstructionOptions construction_options(const RunConfig& c, double q2) {
  ConstructionOptions o;
  o.order = c.order;
  o.half_width = c.half_width;
  o.point_count = c.profile_points;
  o.q2 = q2;
  o.tolerances.solvability = c.solvability_tolerance;
  o.tolerances.residual = c.solver_tolerance;
  return o;
}

ApproxOptions approx_options(const RunConfig& c) {
  ApproxOptions o;
  o.profile_window = c.profile_window;
  return o;
}

std::string construction_fingerprint(const RunConfig& c) {
  std::ostringstream o;
  o << "order=" << c.order << ";energy=" << num(c.energy) << ";q2=" << (c.q2 ? num(*c.q2) : "tuned")
    << ";half_width=" << num(c.half_width) << ";points=" << c.profile_points
    << ";profile=" << num(c.profile_window.plateau) << ',' << num(c.profile_window.support)
    << ";solvability=" << num(c.solvability_tolerance) << ";solver=" << num(c.solver_tolerance)
    << ";probes=" << num(c.energy_probes[0]) << ',' << num(c.energy_probes[1]) << ','
    << num(c.energy_probes[2]) << ";tune=" << num(c.tune_tolerance);
  return o.str();
}

RunSetup setup_run(const RunConfig& c, double q2) {
  RunSetup s;
  s.config = c;
  s.q2 = q2;
  s.approx = std::make_shared<const ApproxSolution>(construct_expansion(construction_options(c, q2)),
                                                    approx_options(c));
  const auto& a = *s.approx;
  s.t0 = c.t0_policy == T0Policy::Fixed ? c.t0
                                        : runtime_t0(a, c.localization_window, 0.5, c.t0_correction_bound);
  s.epsilon = c.epsilon.value_or(c.epsilon_fraction * s.t0);
  if (!(s.epsilon < s.t0))
    throw ConfigError("epsilon = " + num(s.epsilon) + " must be below t0 = " + num(s.t0) + " (" +
                      (c.t0_policy == T0Policy::Fixed ? "fixed" : "runtime policy") + ")");
  for (double t : {s.epsilon, s.t0})
    if (!(a.params().q(t) > 0.0) || !(a.params().omega(t) > 0.0))
      throw ConfigError("q or omega is not positive at t = " + num(t) + "; the expansion is unusable there");

  const int n = c.samples;
  s.sample_times.resize(n);
  for (int k = 0; k < n; ++k) s.sample_times[k] = s.epsilon * std::pow(s.t0 / s.epsilon, k / double(n - 1));
  s.sample_times.front() = s.epsilon;
  s.sample_times.back() = s.t0;
  if (c.direction == Direction::Backward) std::reverse(s.sample_times.begin(), s.sample_times.end());
  s.t_start = s.sample_times.front();
  s.t_end = s.sample_times.back();

  const double hi = std::max(a.support(s.t0).second, a.support(s.epsilon).second);
  const double R = c.radius.value_or(c.radius_factor * hi);
  if (!(R > hi)) throw ConfigError("radius " + num(R) + " does not contain the layer support " + num(hi));
  int m = 0;
  if (c.radial_points) {
    m = *c.radial_points;
  } else {
    const double peak = std::max(max_psi_on_layer(a, s.epsilon), max_psi_on_layer(a, s.t0));
    m = static_cast<int>(std::ceil(R * peak * c.points_per_width));
  }
  s.grid = make_radial_grid(R, m);
  return s;
}

void cmd_construct(const RunConfig& c, const fs::path& out, std::ostream& log) {
  fs::create_directories(out / "fields");
  double q2 = 0.0;
  std::optional<TuneResult> tune;
  if (c.q2) {
    q2 = *c.q2;
  } else {
    log << "tuning q2 for energy " << c.energy << '\n';
    tune = tune_q2(c.energy, construction_options(c, 0.0), approx_options(c), c.energy_probes, {0.0, 1.0},
                   c.tune_tolerance);
    q2 = tune->q2;
  }
  log << "constructing order " << c.order << " expansion, q2 = " << q2 << '\n';
  const ApproxSolution approx(construct_expansion(construction_options(c, q2)), approx_options(c));
  const auto& ex = approx.expansion();
  const auto& p = approx.params();

  write_text(out / "construction.txt", snapshot_text(ex));
  write_text(out / "coefficients.txt", coefficient_table(ex));
  for (std::size_t k = 1; k <= ex.chi.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "chi_%02zu.csv", k);
    write_text(out / "fields" / name, field_csv(ex.chi_k(static_cast<int>(k))));
  }

  std::vector<double> ts;
  std::vector<double> res[3];
  std::ostringstream csv;
  csv << "t,residual_l2,residual_d1,residual_d2\n";
  for (int i = 0; i < kResidualSamples; ++i) {
    const double t = c.residual_fit_min * std::pow(c.residual_fit_max / c.residual_fit_min, i / double(kResidualSamples - 1));
    ts.push_back(t);
    csv << num(t);
    for (int k = 0; k < 3; ++k) {
      res[k].push_back(approx.residual_norm(t, k));
      csv << ',' << num(res[k].back());
    }
    csv << '\n';
  }
  write_text(out / "residual.csv", csv.str());

  const double threshold = (2.0 * c.order - 1.0) / 3.0 - 0.1;
  json fits = json::array();
  for (int k = 0; k < 3; ++k) {
    std::string why;
    const auto f = try_fit(ts, res[k], why);
    json j{{"derivatives", k}, {"t_min", c.residual_fit_min}, {"t_max", c.residual_fit_max}};
    if (f) {
      j["fit"] = fit_json(*f);
      j["threshold"] = threshold;
      j["pass"] = f->exponent >= threshold;
    } else {
      j["fit"] = nullptr;
      j["error"] = why;
      j["pass"] = false;
    }
    fits.push_back(j);
  }

  double t0 = NAN;
  std::string t0_error;
  try {
    t0 = c.t0_policy == T0Policy::Fixed ? c.t0
                                        : runtime_t0(approx, c.localization_window, 0.5, c.t0_correction_bound);
  } catch (const InvalidArgument& e) {
    t0_error = e.what();
  }

  const double q0 = ex.q[0];
  const double tiny = 1e-12;
  json stages = json::array();
  for (const auto& s : ex.stages)
    stages.push_back({{"k", s.k},
                      {"chi_norm", s.chi_norm},
                      {"kernel_pairing_plus", s.kernel_pairing_plus},
                      {"kernel_pairing_minus", s.kernel_pairing_minus},
                      {"solve_residual_plus", s.solve_residual_plus},
                      {"solve_residual_minus", s.solve_residual_minus},
                      {"equation_residual", s.equation_residual},
                      {"orthogonality_re", s.orthogonality_re},
                      {"orthogonality_im", s.orthogonality_im},
                      {"parity_defect_re", s.parity_defect_re},
                      {"parity_defect_im", s.parity_defect_im},
                      {"template_mismatch", s.template_mismatch},
                      {"formula_mismatch", s.formula_mismatch},
                      {"decay_rate_plus", s.decay_rate_plus},
                      {"decay_rate_minus", s.decay_rate_minus}});

  json j;
  j["format"] = "csb.construct/1";
  j["order"] = c.order;
  j["q2"] = q2;
  j["q2_source"] = tune ? "tuned" : "config";
  j["energy_target"] = c.energy;
  j["energy_limit"] = extrapolated_energy(approx, c.energy_probes);
  if (tune)
    j["tuning"] = {{"slope", tune->slope},         {"trial_a", tune->trial_a}, {"trial_b", tune->trial_b},
                   {"limit_a", tune->limit_a},     {"limit_b", tune->limit_b}, {"limit", tune->limit},
                   {"iterations", tune->iterations}};
  else
    j["tuning"] = nullptr;
  j["coefficients"] = {{"q", ex.q}, {"omega", ex.omega}};
  j["leading"] = {{"q0", q0},
                  {"lambda0", 1.0 / (ex.omega[0] * q0 * q0)},
                  {"v0", q0 / 3.0},
                  {"q0_closed_form", std::pow(12.0, 1.0 / 6.0)},
                  {"lambda0_closed_form", std::pow(2.0, -2.0 / 3.0) * std::pow(3.0, -1.0 / 3.0)},
                  {"v0_closed_form", std::pow(2.0, 1.0 / 3.0) * std::pow(3.0, -5.0 / 6.0)}};
  // The stated phase law theta = theta0 t^{-1/3} and the integrated law
  // theta' = lambda^2 - v^2/4 - v' q / 2 differ in the leading coefficient.
  j["theta"] = {{"stated_coefficient", std::pow(2.0, -1.0 / 3.0) * std::pow(3.0, -2.0 / 3.0)},
                {"integrated_coefficient", p.theta(tiny) * std::cbrt(tiny)},
                {"derivative_coefficient", p.theta_prime_exact(tiny) * tiny * std::cbrt(tiny)}};
  j["mass"] = {{"computed", approx.mass(c.residual_fit_max)},
               {"at_t", c.residual_fit_max},
               {"leading_order", 8.0 * std::numbers::pi}};
  j["identity5"] = {{"lhs", ex.identity5.lhs},
                    {"rhs", ex.identity5.rhs},
                    {"relative_defect", ex.identity5.relative_defect}};
  j["stages"] = stages;
  j["residual_fits"] = fits;
  j["t0_policy"] = c.t0_policy == T0Policy::Fixed ? "fixed" : "runtime";
  j["t0"] = jnum(t0);
  if (!t0_error.empty()) j["t0_error"] = t0_error;
  j["fingerprint"] = construction_fingerprint(c);
  j["config"] = config_text(c);
  write_text(out / "construct.json", j.dump(2) + "\n");
  log << "q0 = " << num(q0) << ", residual exponent "
      << (fits[0]["fit"].is_null() ? std::string("n/a") : short_num(fits[0]["fit"]["exponent"].get<double>()))
      << '\n';
}

void cmd_evolve(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const json cj = read_json(out / "construct.json", "construct");
  const RunSetup s = setup_run(c, construction_q2(cj, c));
  fs::remove_all(out / "trajectory");
  fs::remove(out / "evolve.json");
  fs::create_directories(out / "trajectory");

  EvolveControls controls;
  controls.dt_factor = c.dt_factor;
  controls.check_interval = c.check_interval;
  controls.min_points_per_width = c.min_points_per_width;

  log << direction_name(c.direction) << " run " << s.t_start << " -> " << s.t_end << " on " << s.grid->size()
      << " nodes, R = " << s.grid->outer_radius() << '\n';

  json samples = json::array();
  WaveState cur = sample_approx(*s.approx, s.grid, s.t_start);
  long steps = 0;
  std::string status = "complete";
  std::string message;
  const auto record = [&](std::size_t k) {
    const std::string name = state_file(k);
    std::ostringstream o;
    write_checkpoint(o, cur);
    write_text(out / "trajectory" / name, o.str());
    samples.push_back({{"index", k}, {"t", cur.t}, {"file", "trajectory/" + name}});
  };
  record(0);
  double reached = cur.t;
  std::exception_ptr failure;
  try {
    for (std::size_t k = 1; k < s.sample_times.size(); ++k) {
      const auto tr = evolve(cur, s.sample_times[k], controls);
      steps += tr.steps;
      cur = tr.samples.back();
      reached = cur.t;
      record(k);
    }
  } catch (const UnderResolved& e) {
    status = "under_resolved";
    message = e.what();
    reached = e.reached_time();
    failure = std::current_exception();
  } catch (const NumericalFailure& e) {
    status = "numerical_failure";
    message = e.what();
    failure = std::current_exception();
  }

  const auto& g = *s.grid;
  double outside = 0.0, total = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    total += std::norm(cur.w[i]);
    if (g.node(i) > 0.5 * g.outer_radius()) outside += std::norm(cur.w[i]);
  }

  json j;
  j["format"] = "csb.evolve/1";
  j["status"] = status;
  if (!message.empty()) j["message"] = message;
  j["direction"] = direction_name(c.direction);
  j["q2"] = s.q2;
  j["t0"] = s.t0;
  j["epsilon"] = s.epsilon;
  j["t_start"] = s.t_start;
  j["t_end"] = s.t_end;
  j["reached"] = reached;
  j["steps"] = steps;
  j["grid"] = {{"radius", g.outer_radius()}, {"points", g.size()}, {"spacing", g.spacing()}};
  j["controls"] = {{"dt_factor", c.dt_factor},
                   {"check_interval", c.check_interval},
                   {"min_points_per_width", c.min_points_per_width}};
  j["mass_fraction_outside_half_radius"] = total > 0.0 ? outside / total : 0.0;
  j["samples"] = samples;
  j["fingerprint"] = construction_fingerprint(c);
  write_text(out / "evolve.json", j.dump(2) + "\n");
  if (failure) std::rethrow_exception(failure);
  log << "reached t = " << reached << " after " << steps << " steps\n";
}

std::vector<SampleDiagnostics> cmd_compare(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const json ej = read_json(out / "evolve.json", "evolve");
  const json cj = read_json(out / "construct.json", "construct");
  const double q2 = construction_q2(cj, c);
  if (ej.value("fingerprint", std::string()) != construction_fingerprint(c) || ej.at("q2").get<double>() != q2)
    throw MissingInput("evolve output does not match the construction; rerun `evolve`");
  const RunSetup s = setup_run(c, q2);
  const auto& a = *s.approx;
  const auto& loc = c.localization_window;

  std::vector<SampleDiagnostics> rows;
  for (const auto& smp : ej.at("samples")) {
    const WaveState psi = load_state(out / smp.at("file").get<std::string>(), s.grid);
    const WaveState pn = sample_approx(a, s.grid, psi.t);
    const Modulation p = modulation_at(a, psi.t);
    SampleDiagnostics d;
    d.t = psi.t;
    d.norms = compare(psi, pn, p.q, loc);
    d.x1_scaled = d.norms.h_x1 / std::pow(psi.t, 2.0 * c.order / 3.0);
    WaveState h = psi;
    for (std::size_t i = 0; i < h.w.size(); ++i) h.w[i] -= pn.w[i];
    d.h_hessian = hessian_norm(h);
    d.q = p.q, d.lambda = p.lambda, d.v = p.v, d.theta = p.theta;
    d.peak_radius = peak_radius(psi);
    d.quartic = discrete_quartic(psi);
    d.pseudoconformal = pseudoconformal_quantity(psi);
    d.w_functional = w_functional(psi, p, loc);
    d.g_lyapunov = g_lyapunov(psi, pn, p, loc);
    try {
      d.kappa = kappa_projections(h, p, loc);
      d.kappa_valid = true;
    } catch (const Error&) {
      d.kappa_valid = false;
    }
    d.approx_gradient = gradient_norm(pn);
    d.approx_peak_radius = peak_radius(pn);
    d.approx_variance = variance(pn);
    rows.push_back(d);
  }

  std::ostringstream csv;
  csv << "t,mass,energy,momentum_q,gradient,variance,peak_radius,quartic,pseudoconformal,w_functional,"
         "g_lyapunov,q,lambda,v,theta,h_l2,h_h1,h_variance,h_hessian,h_x1,h_x2,x1_scaled,kappa0,kappa1,"
         "kappa2,kappa3,f1_norm,approx_gradient,approx_peak_radius,approx_variance\n";
  for (const auto& d : rows) {
    const auto& n = d.norms;
    const double nan = NAN;
    const double k[5] = {d.kappa_valid ? d.kappa.kappa[0] : nan, d.kappa_valid ? d.kappa.kappa[1] : nan,
                         d.kappa_valid ? d.kappa.kappa[2] : nan, d.kappa_valid ? d.kappa.kappa[3] : nan,
                         d.kappa_valid ? d.kappa.f1_norm : nan};
    const double vals[] = {d.t,         n.mass,      n.energy,       n.momentum,     n.gradient,
                           n.variance,  d.peak_radius, d.quartic,    d.pseudoconformal, d.w_functional,
                           d.g_lyapunov, d.q,        d.lambda,       d.v,            d.theta,
                           n.h_l2,      n.h_h1,      n.h_variance,   d.h_hessian,    n.h_x1,
                           n.h_x2,      d.x1_scaled, k[0],           k[1],           k[2],
                           k[3],        k[4],        d.approx_gradient, d.approx_peak_radius, d.approx_variance};
    bool first = true;
    for (double v : vals) {
      csv << (first ? "" : ",") << (std::isfinite(v) ? num(v) : std::string("nan"));
      first = false;
    }
    csv << '\n';
  }
  write_text(out / "compare.csv", csv.str());
  log << "compared " << rows.size() << " samples\n";
  return rows;
}

ReportOutcome cmd_report(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const json ej = read_json(out / "evolve.json", "evolve");
  const json cj = read_json(out / "construct.json", "construct");
  const auto rows = cmd_compare(c, out, log);
  if (rows.empty()) throw MissingInput("evolve output lists no samples; rerun `evolve`");
  const int N = c.order;

  std::vector<double> t, grad, radius, var, x1;
  for (const auto& d : rows) {
    t.push_back(d.t);
    grad.push_back(d.norms.gradient);
    radius.push_back(d.peak_radius);
    var.push_back(d.norms.variance);
    x1.push_back(d.norms.h_x1);
  }

  json checks = json::array();
  ReportOutcome outcome;
  const auto add = [&](json j) {
    if (j["gated"].get<bool>() && !j["pass"].get<bool>()) {
      outcome.all_gated_pass = false;
      outcome.failures.push_back(j["name"].get<std::string>());
    }
    checks.push_back(std::move(j));
  };

  add(check("run_complete", ej.at("reached").get<double>(), "evolution reached t_end",
            ej.at("status").get<std::string>() == "complete", true, ej.value("message", std::string())));

  json fits;
  std::string why;
  const auto gfit = try_fit(t, grad, why);
  fits["gradient"] = gfit ? fit_json(*gfit) : json(nullptr);
  add(check("gradient_exponent", gfit ? gfit->exponent : NAN,
            "in [" + short_num(kGradientRange[0]) + ", " + short_num(kGradientRange[1]) + "]",
            gfit && gfit->exponent >= kGradientRange[0] && gfit->exponent <= kGradientRange[1], true,
            gfit ? "" : why));
  const auto rfit = try_fit(t, radius, why);
  fits["peak_radius"] = rfit ? fit_json(*rfit) : json(nullptr);
  add(check("radius_exponent", rfit ? rfit->exponent : NAN, "reference 1/3", true, false,
            "informational: the run window is outside the small-t regime of the rate"));
  const auto vfit = try_fit(t, var, why);
  fits["variance"] = vfit ? fit_json(*vfit) : json(nullptr);
  add(check("variance_exponent", vfit ? vfit->exponent : NAN, "reference 1/3", true, false,
            "informational: the run window is outside the small-t regime of the rate"));

  const double M0 = rows[0].norms.mass, E0 = rows[0].norms.energy;
  const double K0 = rows[0].norms.gradient * rows[0].norms.gradient;
  double mass_drift = 0.0, energy_dev = 0.0;
  for (const auto& d : rows) {
    mass_drift = std::max(mass_drift, std::abs(d.norms.mass - M0) / M0);
    energy_dev = std::max(energy_dev, std::abs(d.norms.energy - E0));
  }
  add(check("mass_drift", mass_drift, "<= " + short_num(kMassDriftTolerance), mass_drift <= kMassDriftTolerance,
            true));
  add(check("energy_drift_kinetic_scale", energy_dev / K0, "<= " + short_num(kEnergyDriftTolerance),
            energy_dev / K0 <= kEnergyDriftTolerance, true,
            "max |E(t) - E(start)| / ||grad psi(start)||^2"));
  add(check("energy_drift_unit_scale", energy_dev / (1.0 + std::abs(E0)), "<= " + short_num(kEnergyDriftTolerance),
            energy_dev / (1.0 + std::abs(E0)) <= kEnergyDriftTolerance, false,
            "max |E(t) - E(start)| / (1 + |E(start)|); not gated because E is a cancellation of two terms of "
            "size ||grad psi||^2"));

  double pc = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto &A = rows[k - 1], &B = rows[k];
    const double lhs = B.pseudoconformal - A.pseudoconformal;
    const double rhs = (B.t - A.t) * (A.t * A.quartic + B.t * B.quartic);
    pc = std::max(pc, std::abs(lhs - rhs) / std::abs(rhs));
  }
  add(check("pseudoconformal_law", pc, "<= " + short_num(kPseudoconformalTolerance), pc <= kPseudoconformalTolerance,
            true, "max over sample intervals of |dQ - int 2 t ||psi||_4^4 dt| / |int 2 t ||psi||_4^4 dt|"));

  const auto& r0 = rows[0];
  const bool zero_h = r0.norms.h_l2 == 0.0 && r0.norms.h_h1 == 0.0 && r0.norms.h_x1 == 0.0 &&
                      r0.norms.h_x2 == 0.0 && r0.norms.h_variance == 0.0;
  add(check("initial_remainder_zero", r0.norms.h_l2, "all h norms exactly 0 at the start", zero_h, true));
  const bool zero_k = r0.kappa_valid && r0.kappa.kappa[0] == 0.0 && r0.kappa.kappa[1] == 0.0 &&
                      r0.kappa.kappa[2] == 0.0 && r0.kappa.kappa[3] == 0.0;
  add(check("initial_kappa_zero", r0.kappa_valid ? r0.kappa.f1_norm : NAN, "kappa_j exactly 0 at the start", zero_k,
            true));

  double sup = 0.0;
  for (const auto& d : rows) sup = std::max(sup, d.x1_scaled);
  add(check("x1_scaled_sup_finite", sup, "finite", std::isfinite(sup), true, "sup_t ||h||_X1 / t^(2N/3)"));

  // kappa_j against the t^{(2N+1)/3} trend with the amplitude fitted at that
  // fixed exponent.
  const double kp = (2.0 * N + 1.0) / 3.0;
  json kfits = json::array();
  double kappa_ratio = 0.0;
  for (int j = 0; j < 4; ++j) {
    std::vector<double> kt, kv;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].kappa_valid && rows[i].kappa.kappa[j] != 0.0) {
        kt.push_back(rows[i].t);
        kv.push_back(std::abs(rows[i].kappa.kappa[j]));
      }
    json kj{{"index", j}};
    const auto f = try_fit(kt, kv, why);
    kj["fit"] = f ? fit_json(*f) : json(nullptr);
    if (!kt.empty()) {
      double la = 0.0;
      for (std::size_t i = 0; i < kt.size(); ++i) la += std::log(kv[i]) - kp * std::log(kt[i]);
      const double amp = std::exp(la / kt.size());
      double worst = 0.0;
      for (std::size_t i = 0; i < kt.size(); ++i) worst = std::max(worst, kv[i] / (amp * std::pow(kt[i], kp)));
      kj["trend_amplitude"] = amp;
      kj["max_ratio_to_trend"] = worst;
      kappa_ratio = std::max(kappa_ratio, worst);
    }
    kfits.push_back(kj);
  }
  fits["kappa"] = kfits;
  add(check("kappa_growth", kappa_ratio, "|kappa_j| <= " + short_num(kKappaGrowthFactor) + " x fitted t^((2N+1)/3) trend",
            kappa_ratio <= kKappaGrowthFactor, false, "informational"));

  const auto& rf = cj.at("residual_fits").at(0);
  add(check("residual_exponent", rf["fit"].is_null() ? NAN : rf["fit"]["exponent"].get<double>(),
            ">= " + short_num((2.0 * N - 1.0) / 3.0 - 0.1), rf["pass"].get<bool>(), true,
            "fit of ||H|| over [" + short_num(rf["t_min"].get<double>()) + ", " +
                short_num(rf["t_max"].get<double>()) + "]"));
  const double elim = cj.at("energy_limit").get<double>();
  const bool tuned = cj.at("q2_source").get<std::string>() == "tuned";
  add(check("energy_limit", elim, "within " + short_num(kEnergyLimitTolerance) + " of " + short_num(c.energy),
            std::abs(elim - c.energy) <= kEnergyLimitTolerance, tuned, tuned ? "" : "q2 given in config; not gated"));

  // Coercivity witness at the start of the run.
  const RunSetup s = setup_run(c, cj.at("q2").get<double>());
  json probe;
  try {
    const auto pn = sample_approx(*s.approx, s.grid, s.t_start);
    const auto pr = coercivity_probe(pn, modulation_at(*s.approx, s.t_start), kCoercivityAmplitude,
                                     c.localization_window);
    probe = {{"t", s.t_start},          {"amplitude", kCoercivityAmplitude}, {"g_scaled", pr.g_scaled},
             {"f1_norm", pr.f1_norm},   {"max_kappa", pr.max_kappa},         {"nonnegative", pr.g_scaled >= 0.0},
             {"label", "heuristic witness, not a verification"}};
  } catch (const Error& e) {
    probe = {{"error", e.what()}, {"label", "heuristic witness, not a verification"}};
  }

  json j;
  j["format"] = "csb.report/1";
  j["order"] = N;
  j["direction"] = ej.at("direction");
  j["status"] = ej.at("status");
  j["t_start"] = ej.at("t_start");
  j["t_end"] = ej.at("t_end");
  j["reached"] = ej.at("reached");
  j["samples"] = rows.size();
  j["fits"] = fits;
  j["checks"] = checks;
  j["all_gated_pass"] = outcome.all_gated_pass;
  j["coercivity_probe"] = probe;
  j["hessian_convention"] = "||grad^2 h|| computed as ||Lap h||, which equals (||h_rr||^2 + 2||h_r/r||^2)^(1/2) for decaying radial h";
  j["theta"] = cj.at("theta");
  j["mass"] = {{"start", M0}, {"leading_order", 8.0 * std::numbers::pi}};
  j["energy"] = {{"start", E0}, {"kinetic_start", K0}, {"limit", elim}, {"target", c.energy}};
  j["mass_fraction_outside_half_radius"] = ej.at("mass_fraction_outside_half_radius");
  write_text(out / "summary.json", j.dump(2) + "\n");

  // Plots.
  const auto guide = [](const std::vector<double>& ts, double t_anchor, double y_anchor, double p) {
    std::vector<double> y;
    for (double x : ts) y.push_back(y_anchor * std::pow(x / t_anchor, p));
    return y;
  };
  {
    std::vector<PlotSeries> s2{{"||grad psi||", t, grad, "#1f77b4", false},
                               {"t^(-2/3)", t, guide(t, t.front(), grad.front(), -2.0 / 3.0), "#7f7f7f", true}};
    write_text(out / "rates.svg", svg_line_plot({"Gradient norm", "t", "||grad psi||", true, true}, s2));
  }
  {
    std::vector<PlotSeries> s2{{"peak radius", t, radius, "#d62728", false},
                               {"t^(1/3)", t, guide(t, t.front(), radius.front(), 1.0 / 3.0), "#7f7f7f", true}};
    write_text(out / "radius.svg", svg_line_plot({"Peak radius", "t", "r", true, true}, s2));
  }
  {
    std::vector<PlotSeries> s2{{"||h||_X1", t, x1, "#2ca02c", false}};
    s2.push_back({"t^(2N/3)", t, guide(t, t.back(), x1.back() > 0 ? x1.back() : 1.0, 2.0 * N / 3.0), "#7f7f7f", true});
    write_text(out / "hnorm.svg", svg_line_plot({"Remainder norm", "t", "||h||_X1", true, true}, s2));
  }
  {
    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
    std::vector<PlotSeries> s2;
    const auto& list = ej.at("samples");
    const std::size_t n = list.size();
    const std::size_t picks = std::min<std::size_t>(5, n);
    for (std::size_t k = 0; k < picks; ++k) {
      const std::size_t idx = picks == 1 ? 0 : k * (n - 1) / (picks - 1);
      const auto st = load_state(out / list[idx].at("file").get<std::string>(), s.grid);
      PlotSeries ps;
      ps.label = "t = " + short_num(st.t);
      ps.color = colors[k];
      const int stride = std::max(1, s.grid->size() / 800);
      for (int i = 0; i < s.grid->size(); i += stride) {
        ps.x.push_back(s.grid->node(i));
        ps.y.push_back(std::abs(st.w[i]) / s.grid->node(i));
      }
      s2.push_back(std::move(ps));
    }
    write_text(out / "profiles.svg", svg_line_plot({"|psi| against r", "r", "|psi|", false, false}, s2));
  }

  log << "report: " << (outcome.all_gated_pass ? "all gated checks pass" : "gated checks failed") << '\n';
  for (const auto& f : outcome.failures) log << "  failed: " << f << '\n';
  return outcome;
}

}  // namespace csb
