#include <cmath>
#include <numbers>
#include <vector>

#include "csb/diagnostics.hpp"
#include "csb/errors.hpp"
#include "csb/profiles.hpp"
#include "doctest.h"

using namespace csb;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

WaveState radial_field(const RadialGridPtr& g, auto&& f, double t = 0.0) {
  std::vector<cplx> psi(g->size());
  for (int i = 0; i < g->size(); ++i) psi[i] = f(g->node(i));
  return reduce(g, psi, t);
}

const ApproxSolution& approx2() {
  static const ApproxSolution a = [] {
    ConstructionOptions o;
    o.order = 2;
    return ApproxSolution(construct_expansion(o));
  }();
  return a;
}

// A radial grid resolving the layer of psi_N at t = 1e-6 with room for the
// localization window.
RadialGridPtr layer_grid() { return make_radial_grid(0.05, 20000); }

WaveState add(const WaveState& a, const WaveState& b, double eps) {
  WaveState out = a;
  for (std::size_t i = 0; i < out.w.size(); ++i) out.w[i] += eps * b.w[i];
  return out;
}

}  // namespace

TEST_CASE("norms of a Gaussian against closed forms") {
  const auto g = make_radial_grid(8.0, 8000);
  const auto s = radial_field(g, [](double r) { return cplx(std::exp(-r * r)); });
  const double m = std::pow(kPi / 2.0, 1.5);
  CHECK(mass(s) == doctest::Approx(m).epsilon(1e-8));
  CHECK(gradient_norm(s) == doctest::Approx(std::sqrt(3.0 * m)).epsilon(1e-6));
  CHECK(hessian_norm(s) == doctest::Approx(std::sqrt(15.0 * m)).epsilon(1e-6));
  // <r^2> = 3/4 for exp(-2 r^2).
  CHECK(variance(s) == doctest::Approx(std::sqrt(0.75 * m)).epsilon(1e-8));
  const double t = 1e-3, c = std::cbrt(t * t);
  CHECK(x_norm(s, 1, t) == doctest::Approx(std::sqrt(m) * (1 + c * std::sqrt(3.0))).epsilon(1e-7));
  CHECK(x_norm(s, 2, t) ==
        doctest::Approx(std::sqrt(m) * (1 + c * std::sqrt(3.0) + c * c * std::sqrt(15.0))).epsilon(1e-7));
  CHECK_THROWS_AS(x_norm(s, 3, t), InvalidArgument);
  CHECK_THROWS_AS(x_norm(s, 1, 0.0), InvalidArgument);
  CHECK(peak_radius(s) == doctest::Approx(g->node(0)));

  const auto ring = radial_field(g, [](double r) { return cplx(std::exp(-16 * (r - 2.345) * (r - 2.345))); });
  CHECK(peak_radius(ring) == doctest::Approx(2.345).epsilon(1e-5));
}

TEST_CASE("localized momentum of a plane-wave modulated ring") {
  const auto g = make_radial_grid(8.0, 8000);
  const double k = 2.0, q = 3.0;
  const auto s = radial_field(g, [&](double r) { return std::exp(-4.0 * (r - q) * (r - q) + kI * k * r); });
  CHECK(momentum_localized(s, q) == doctest::Approx(k * mass(s)).epsilon(1e-5));
  // A window that excludes the ring sees nothing.
  CHECK(std::abs(momentum_localized(s, 6.0, {0.1, 0.2})) <= 1e-12);
  CHECK_THROWS_AS(momentum_localized(s, 0.0), InvalidArgument);
  // Phase invariance.
  WaveState rot = s;
  for (auto& v : rot.w) v *= std::polar(1.0, 0.7);
  CHECK(momentum_localized(rot, q) == doctest::Approx(momentum_localized(s, q)).epsilon(1e-13));
  CHECK(mass(rot) == doctest::Approx(mass(s)).epsilon(1e-14));
  CHECK(energy(rot) == doctest::Approx(energy(s)).epsilon(1e-13));
  CHECK(x_norm(rot, 2, 0.1) == doctest::Approx(x_norm(s, 2, 0.1)).epsilon(1e-13));
}

TEST_CASE("W reduces to M + E and its gradient is exact") {
  const auto g = make_radial_grid(8.0, 4000);
  const auto s = radial_field(g, [](double r) { return std::exp(-(r - 2.0) * (r - 2.0) + 0.3 * kI * r); });
  const Modulation unit{0.0, 2.0, 1.0, 0.0, 0.0};
  CHECK(w_functional(s, unit) == doctest::Approx(mass(s) + energy(s)).epsilon(1e-14));

  const Modulation p{0.0, 2.0, 1.7, -0.8, 0.3};
  const auto d = radial_field(g, [](double r) { return (0.5 + kI * r) * std::exp(-2 * (r - 2.2) * (r - 2.2)); });
  const auto grad = w_gradient(s, p);
  std::vector<cplx> dpsi(g->size());
  for (int i = 0; i < g->size(); ++i) dpsi[i] = d.w[i] / g->node(i);
  const double eps = 1e-5;
  const double fd = (w_functional(add(s, d, eps), p) - w_functional(add(s, d, -eps), p)) / (2 * eps);
  CHECK(pairing(grad, dpsi, *g) == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("G is quadratic at psi_N") {
  const auto& a = approx2();
  const double t = 1e-6;
  const auto g = layer_grid();
  const auto psin = sample_approx(a, g, t);
  const auto p = modulation_at(a, t);
  CHECK(g_lyapunov(psin, psin, p) == 0.0);

  const auto bump = ComplexField::from_function(make_rho_grid(10.0, 2001), [](double rho) {
    return (1.0 + 0.4 * rho + 0.6 * kI * rho * rho) * std::exp(-rho * rho / 2.0);
  });
  const auto h = push_forward(bump, p, g);
  double scaled[3];
  for (int k = 0; k < 3; ++k) {
    const double eps = std::pow(10.0, -2 - k);
    scaled[k] = g_lyapunov(add(psin, h, eps), psin, p) / (eps * eps);
  }
  CHECK(std::abs(scaled[1] - scaled[2]) <= 0.2 * std::abs(scaled[0] - scaled[1]));
  CHECK(std::abs(scaled[1] - scaled[2]) <= 1e-2 * std::abs(scaled[2]));
  CHECK(std::abs(scaled[2]) > 0.0);
}

TEST_CASE("kappa projections reproduce the symplectic Gram matrix") {
  const auto& a = approx2();
  const double t = 1e-6;
  const auto p = modulation_at(a, t);
  const auto g = layer_grid();
  const auto rg = make_rho_grid(40.0, 8001);
  const auto phi = ground_state(rg), phi_r = ground_state_d1(rg);
  const ComplexField xi[4] = {kI * phi, -phi_r, phi + phi_r.times_rho(), kI * phi.times_rho()};
  // <xi_i, i xi_j> = Im int xi_i conj(xi_j) for phi = sech.
  const double gram[4][4] = {{0, 0, 1, 0}, {0, 0, 0, -1}, {-1, 0, 0, 0}, {0, 1, 0, 0}};
  const auto weight = ComplexField::from_function(
      rg, [&](double rho) { return cplx(1.0 / (std::sqrt(p.lambda) * (rho / p.lambda + p.q))); });
  for (int i = 0; i < 4; ++i) {
    CAPTURE(i);
    const auto h = push_forward(xi[i] * weight, p, g);
    const auto rep = kappa_projections(h, p);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(rep.kappa[j] - gram[i][j]) <= 1e-6);
    CHECK(rep.f1_norm == doctest::Approx(l2_norm(xi[i])).epsilon(1e-6));
  }
  CHECK_THROWS_AS(kappa_projections(sample_approx(a, make_radial_grid(0.02, 2000), t), p), GridMismatch);
}

TEST_CASE("G is nonnegative on a kappa-free perturbation") {
  const auto& a = approx2();
  const double t = 1e-6;
  const auto p = modulation_at(a, t);
  const auto g = layer_grid();
  const auto psin = sample_approx(a, g, t);
  const auto rg = make_rho_grid(40.0, 8001);
  const auto phi = ground_state(rg), phi_r = ground_state_d1(rg);
  const ComplexField xi[4] = {kI * phi, -phi_r, phi + phi_r.times_rho(), kI * phi.times_rho()};
  const auto weight = ComplexField::from_function(
      rg, [&](double rho) { return cplx(1.0 / (std::sqrt(p.lambda) * (rho / p.lambda + p.q))); });
  auto f1 = ComplexField::from_function(rg, [](double rho) {
    return (1.0 + 0.5 * rho + kI * (0.3 - 0.2 * rho * rho)) * std::exp(-rho * rho / 3.0);
  });
  const auto k0 = kappa_projections(push_forward(f1 * weight, p, g), p);
  // Adding c_k xi_k shifts kappa by c_k <xi_k, i xi_j>.
  f1 += (-k0.kappa[2]) * xi[0] + k0.kappa[3] * xi[1] + k0.kappa[0] * xi[2] + (-k0.kappa[1]) * xi[3];
  const auto h = push_forward(f1 * weight, p, g);
  const auto k1 = kappa_projections(h, p);
  for (double k : k1.kappa) CHECK(std::abs(k) <= 1e-6 * k1.f1_norm);
  for (double eps : {1e-3, 1e-4}) {
    CAPTURE(eps);
    CHECK(g_lyapunov(add(psin, h, eps), psin, p) >= 0.0);
  }
  const auto probe = coercivity_probe(psin, p);
  CHECK(probe.max_kappa <= 1e-6 * probe.f1_norm);
  CHECK(probe.g_scaled >= 0.0);
  CHECK(probe.g_scaled == doctest::Approx(g_lyapunov(add(psin, h, 1e-3), psin, p) / 1e-6).epsilon(1e-2));
}

TEST_CASE("radial sampling of psi_N keeps its mass") {
  const auto& a = approx2();
  for (double t : {1e-6, 1e-5}) {
    CAPTURE(t);
    const auto s = sample_approx(a, make_radial_grid(0.1, 40000), t);
    CHECK(mass(s) == doctest::Approx(a.mass(t)).epsilon(1e-6));
    // E is a cancellation of two terms of size ||grad psi||^2 ~ lambda^2 M;
    // the grid error is relative to that size.
    CHECK(std::abs(energy(s) - a.energy(t)) <= 1e-4 * std::pow(gradient_norm(s), 2));
    CHECK(variance(s) == doctest::Approx(a.variance(t)).epsilon(1e-6));
    CHECK(peak_radius(s) == doctest::Approx(a.peak_radius(t)).epsilon(1e-4));
    const auto rep = compare(s, s, a.params().q(t));
    CHECK(rep.h_l2 == 0.0);
    CHECK(rep.h_x2 == 0.0);
    CHECK(rep.mass == mass(s));
  }
}

TEST_CASE("pseudoconformal law along a nonlinear run") {
  const auto g = make_radial_grid(10.0, 2000);
  const auto s0 = radial_field(g, [](double r) { return cplx(std::exp(-r * r)); });
  EvolveControls c;
  for (int k = 0; k <= 150; ++k) c.sample_times.push_back(0.05 + k * 0.001);
  const auto tr = evolve(s0, 0.2, c);
  // Closed form 1/2 ||(x + 2it grad) psi||^2 - 2 t^2 ||psi||_4^4 with a
  // centered difference of psi.
  const auto direct = [](const WaveState& s) {
    const auto psi = unreduce(s);
    const auto& gg = *s.grid;
    double acc = 0.0;
    for (int i = 1; i + 1 < gg.size(); ++i) {
      const double r = gg.node(i);
      const cplx pr = (psi[i + 1] - psi[i - 1]) / (2 * gg.spacing());
      acc += std::norm(r * psi[i] + 2.0 * kI * s.t * pr) * r * r;
    }
    return 0.5 * 4 * kPi * acc * gg.spacing() - 2 * s.t * s.t * discrete_quartic(s);
  };
  double integral = 0.0;
  const WaveState* first = nullptr;
  const WaveState* prev = nullptr;
  for (const auto& smp : tr.samples) {
    if (smp.t < 0.05 - 1e-12) continue;
    if (!first) first = &smp;
    if (prev) integral += (smp.t - prev->t) * (prev->t * discrete_quartic(*prev) + smp.t * discrete_quartic(smp));
    prev = &smp;
  }
  const auto& last = *prev;
  CHECK(pseudoconformal_quantity(last) == doctest::Approx(direct(last)).epsilon(1e-4));
  const double dq = pseudoconformal_quantity(last) - pseudoconformal_quantity(*first);
  CHECK(dq == doctest::Approx(integral).epsilon(0.05));
  CHECK(std::abs(dq - integral) <= 1e-2 * std::abs(integral));
}

TEST_CASE("power-law fits") {
  std::vector<double> t, y;
  for (int i = 0; i < 9; ++i) {
    t.push_back(1e-4 * std::pow(10.0, i / 8.0));
    y.push_back(3.0 * std::pow(t.back(), -2.0 / 3.0));
  }
  const auto f = fit_power_law(t, y);
  CHECK(f.exponent == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(f.amplitude == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.residual <= 1e-12);
  CHECK(f.samples == 9);
  y[3] = 0.0;
  CHECK_THROWS_AS(fit_power_law(t, y), InvalidArgument);
  CHECK_THROWS_AS(fit_power_law(std::span(t).first(7), std::span(y).first(7)), InvalidArgument);
  std::vector<double> narrow(9), ny(9, 1.0);
  for (int i = 0; i < 9; ++i) narrow[i] = 1.0 + i;
  CHECK_THROWS_AS(fit_power_law(narrow, ny), InvalidArgument);
}
