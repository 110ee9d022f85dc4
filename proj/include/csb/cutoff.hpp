#pragma once

// Smooth radial cutoffs in the layer variable zeta = (r - q) / q.

namespace csb {

// Equal to 1 for |zeta| <= plateau and 0 for |zeta| >= support.
struct CutoffWindow {
  double plateau = 0.0;
  double support = 0.0;
};

inline constexpr CutoffWindow kNarrowProfileWindow{1.0 / 200.0, 1.0 / 100.0};
inline constexpr CutoffWindow kNarrowLocalizationWindow{1.0 / 20.0, 1.0 / 10.0};

void validate_window(const CutoffWindow& w);

struct CutoffValue {
  double value = 0.0;
  double d1 = 0.0;  // d/dzeta
  double d2 = 0.0;
};

// exp(-1/x)-based smoothstep: 0 for x <= 0, 1 for x >= 1, C-infinity.
CutoffValue smoothstep(double x);

CutoffValue cutoff(const CutoffWindow& w, double zeta);

}  // namespace csb
