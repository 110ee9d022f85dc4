#include "csb/cutoff.hpp"

#include <cmath>

#include "csb/errors.hpp"

namespace csb {

namespace {

// f(x) = exp(-1/x) for x > 0 and its first two derivatives.
struct Bump {
  double f = 0.0, d1 = 0.0, d2 = 0.0;
};

Bump bump(double x) {
  if (x < 1e-3) return {};  // exp(-1000) underflows anyway
  const double f = std::exp(-1.0 / x);
  const double x2 = x * x;
  return {f, f / x2, f * (1.0 / (x2 * x2) - 2.0 / (x2 * x))};
}

}  // namespace

void validate_window(const CutoffWindow& w) {
  if (!(w.plateau > 0.0) || !(w.support > w.plateau) || !(w.support < 1.0))
    throw InvalidArgument("cutoff window needs 0 < plateau < support < 1");
}

CutoffValue smoothstep(double x) {
  if (x <= 0.0) return {0.0, 0.0, 0.0};
  if (x >= 1.0) return {1.0, 0.0, 0.0};
  const Bump a = bump(x);
  const Bump b = bump(1.0 - x);
  // g(x) = f(1 - x): g' = -f'(1 - x), g'' = f''(1 - x).
  const double g = b.f, g1 = -b.d1, g2 = b.d2;
  const double d = a.f + g, d1 = a.d1 + g1;
  const double num = a.d1 * g - a.f * g1;     // S' * d^2
  const double num1 = a.d2 * g - a.f * g2;    // derivative of num
  CutoffValue out;
  out.value = a.f / d;
  out.d1 = num / (d * d);
  out.d2 = (num1 * d - 2.0 * num * d1) / (d * d * d);
  return out;
}

CutoffValue cutoff(const CutoffWindow& w, double zeta) {
  const double a = std::abs(zeta);
  if (a <= w.plateau) return {1.0, 0.0, 0.0};
  if (a >= w.support) return {0.0, 0.0, 0.0};
  const double width = w.support - w.plateau;
  const CutoffValue s = smoothstep((a - w.plateau) / width);
  const double sign = zeta < 0.0 ? -1.0 : 1.0;
  return {1.0 - s.value, -sign * s.d1 / width, -s.d2 / (width * width)};
}

}  // namespace csb
