#include <cmath>
#include <numbers>
#include <vector>

#include "csb/approx_solution.hpp"
#include "csb/cutoff.hpp"
#include "csb/errors.hpp"
#include "doctest.h"

using namespace csb;

namespace {

const double kQ0 = std::pow(12.0, 1.0 / 6.0);
constexpr double kPi = std::numbers::pi;
const ProbeTimes kProbes{1e-6, 1e-7, 1e-8};

const ApproxSolution& approx(int order) {
  static const ApproxSolution a2 = [] {
    ConstructionOptions o;
    o.order = 2;
    return ApproxSolution(construct_expansion(o));
  }();
  static const ApproxSolution a3 = [] {
    ConstructionOptions o;
    o.order = 3;
    return ApproxSolution(construct_expansion(o));
  }();
  return order == 2 ? a2 : a3;
}

double slope(double t1, double y1, double t2, double y2) {
  return std::log(y2 / y1) / std::log(t2 / t1);
}

}  // namespace

TEST_CASE("smoothstep and cutoff") {
  CHECK(smoothstep(-0.1).value == 0.0);
  CHECK(smoothstep(0.0).value == 0.0);
  CHECK(smoothstep(1.0).value == 1.0);
  CHECK(smoothstep(1.5).value == 1.0);
  CHECK(smoothstep(0.5).value == doctest::Approx(0.5).epsilon(1e-15));
  for (double x : {0.05, 0.2, 0.37, 0.5, 0.81, 0.96}) {
    CAPTURE(x);
    const double h = 1e-5;
    const auto c = smoothstep(x), p = smoothstep(x + h), m = smoothstep(x - h);
    CHECK(std::abs((p.value - m.value) / (2 * h) - c.d1) <= 1e-6 * (1 + std::abs(c.d1)));
    CHECK(std::abs((p.d1 - m.d1) / (2 * h) - c.d2) <= 1e-5 * (1 + std::abs(c.d2)));
    CHECK(smoothstep(x).value + smoothstep(1 - x).value == doctest::Approx(1.0).epsilon(1e-14));
  }

  const CutoffWindow w{0.4, 0.7};
  CHECK(cutoff(w, 0.0).value == 1.0);
  CHECK(cutoff(w, -0.4).value == 1.0);
  CHECK(cutoff(w, 0.7).value == 0.0);
  CHECK(cutoff(w, -0.9).value == 0.0);
  for (double z : {-0.6, -0.45, 0.5, 0.66}) {
    CAPTURE(z);
    const double h = 1e-6;
    const auto c = cutoff(w, z);
    CHECK(std::abs((cutoff(w, z + h).value - cutoff(w, z - h).value) / (2 * h) - c.d1) <= 1e-6 * (1 + std::abs(c.d1)));
    CHECK(std::abs((cutoff(w, z + h).d1 - cutoff(w, z - h).d1) / (2 * h) - c.d2) <= 1e-4 * (1 + std::abs(c.d2)));
    CHECK(cutoff(w, z).value == cutoff(w, -z).value);
  }
  CHECK_THROWS_AS(validate_window({0.5, 0.4}), InvalidArgument);
  CHECK_THROWS_AS(validate_window({0.0, 0.4}), InvalidArgument);
  CHECK_THROWS_AS(validate_window({0.5, 1.0}), InvalidArgument);
  CHECK_NOTHROW(validate_window(kNarrowProfileWindow));
  CHECK_NOTHROW(validate_window(kNarrowLocalizationWindow));
}

TEST_CASE("direct NLS residual agrees with the rescaled profile residual") {
  const auto& a = approx(3);
  for (double t : {1e-6, 1e-5, 1e-4}) {
    CAPTURE(t);
    const auto st = a.layer(t);
    const double rel = l2_norm(st.direct_residual - st.residual) / l2_norm(st.residual);
    CHECK(rel <= 1e-5);
  }
}

TEST_CASE("residual decays at the constructed order") {
  for (int N : {2, 3}) {
    CAPTURE(N);
    const auto& a = approx(N);
    const double target = (2.0 * N - 1.0) / 3.0 - 0.1;
    for (int k = 0; k <= 1; ++k) {
      CAPTURE(k);
      const double t1 = 1e-7, t2 = 1e-6;
      CHECK(slope(t1, a.residual_norm(t1, k), t2, a.residual_norm(t2, k)) >= target);
    }
  }
}

TEST_CASE("second-derivative residual on a wider profile grid") {
  // The high stages have not decayed at |rho| = 20, and two grid derivatives
  // of the tiny residual amplify round-off below t ~ 1e-6.
  for (int N : {2, 3}) {
    CAPTURE(N);
    ConstructionOptions o;
    o.order = N;
    o.half_width = 30.0;
    o.point_count = 6145;
    const ApproxSolution a(construct_expansion(o));
    const double t1 = 1e-6, t2 = 1e-5;
    CHECK(slope(t1, a.residual_norm(t1, 2), t2, a.residual_norm(t2, 2)) >= (2.0 * N - 1.0) / 3.0 - 0.1);
  }
}

TEST_CASE("asymptotic rates of the approximate solution at small t") {
  const auto& a = approx(3);
  const double t1 = 1e-9, t2 = 1e-8;
  CHECK(slope(t1, a.peak_radius(t1), t2, a.peak_radius(t2)) == doctest::Approx(1.0 / 3.0).epsilon(0.03 * 3));
  CHECK(slope(t1, a.gradient_norm(t1), t2, a.gradient_norm(t2)) == doctest::Approx(-2.0 / 3.0).epsilon(0.03 * 1.5));
  CHECK(slope(t1, a.variance(t1), t2, a.variance(t2)) == doctest::Approx(1.0 / 3.0).epsilon(0.03 * 3));
  // The layer sits at r = q up to O(s) profile corrections.
  const double t = 1e-9;
  CHECK(std::abs(a.peak_radius(t) - a.params().q(t)) * a.params().lambda(t) <= 0.05);
  CHECK(std::abs(a.params().q(t) / std::cbrt(t) - kQ0) <= 1e-2);
}

TEST_CASE("mass of the approximate solution is 8 pi") {
  const auto& a = approx(3);
  for (double t : {1e-9, 1e-7, 1e-5}) {
    CAPTURE(t);
    CHECK(std::abs(a.mass(t) - 8 * kPi) <= 1e-6 * 8 * kPi);
  }
}

TEST_CASE("pointwise evaluation and support") {
  const auto& a = approx(2);
  const double t = 1e-6;
  const auto st = a.layer(t);
  std::vector<double> r;
  std::vector<cplx> ref;
  for (int i = st.grid->center() - 600; i <= st.grid->center() + 600; i += 37) {
    r.push_back(st.r[i]);
    ref.push_back(st.psi[i]);
  }
  const auto got = a.psi_at(r, t);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(got[i] - ref[i]) <= 1e-9 * std::abs(ref[0]));
  const auto [lo, hi] = a.support(t);
  const std::vector<double> outside{0.5 * lo, 0.99 * lo, 1.01 * hi, 3.0 * hi};
  for (const auto& v : a.psi_at(outside, t)) CHECK(v == cplx(0.0));
  CHECK_THROWS_AS(a.layer(0.0), InvalidArgument);
  CHECK_THROWS_AS(a.residual_norm(1e-6, 3), InvalidArgument);
}

TEST_CASE("runtime t0 policy") {
  const auto& a = approx(3);
  CHECK_THROWS_AS(runtime_t0(a, kNarrowLocalizationWindow), InvalidArgument);
  const CutoffWindow loc{0.75, 0.9};
  const double t0 = runtime_t0(a, loc);
  CHECK(t0 > 1e-6);
  CHECK(t0 < 1e-2);
  // At t0 the correction is within the bound; slightly later it is not.
  const auto in_support_max = [&](double t) {
    const auto c = a.correction(t);
    const double qw = a.params().q(t) * a.params().omega(t);
    double m = 0.0;
    for (int i = 0; i < c.size(); ++i)
      if (std::abs(a.expansion().grid->node(i) * qw) <= 0.7) m = std::max(m, std::abs(c[i]));
    return m;
  };
  CHECK(in_support_max(t0) <= 0.2);
  CHECK(in_support_max(t0 / 0.95) > 0.2);
}

TEST_CASE("energy limit is affine in q2 with the predicted slope") {
  ConstructionOptions o;
  o.order = 2;
  const auto r = tune_q2(0.0, o, {}, kProbes);
  // 3D energy: 4 pi times the per-solid-angle coefficient (28/3)/q0^5.
  const double expected = 4 * kPi * (28.0 / 3.0) / std::pow(kQ0, 5);
  CHECK(r.slope == doctest::Approx(expected).epsilon(1e-3));
  CHECK_THROWS_AS(tune_q2(0.0, o, {}, kProbes, {1.0, 1.0}), AffineDegenerate);
  CHECK_THROWS_AS(extrapolated_energy(approx(2), {1e-7, 1e-7, 1e-8}), InvalidArgument);
}

TEST_CASE("energy tuning hits the target") {
  for (int N : {2, 3}) {
    for (double e : {0.0, 1.0}) {
      CAPTURE(N);
      CAPTURE(e);
      ConstructionOptions o;
      o.order = N;
      const auto r = tune_q2(e, o, {}, kProbes);
      CHECK(std::abs(r.limit - e) <= 1e-4);
      o.q2 = r.q2;
      const ApproxSolution a(construct_expansion(o));
      CHECK(std::abs(extrapolated_energy(a, kProbes) - e) <= 1e-3);
      // |E(t) - e| shrinks as t decreases over a decade.
      double prev = INFINITY;
      for (double t = 1e-5; t >= 1e-6 * 0.999; t /= std::pow(10.0, 0.125)) {
        const double d = std::abs(a.energy(t) - e);
        CHECK(d < prev);
        prev = d;
      }
    }
  }
}
