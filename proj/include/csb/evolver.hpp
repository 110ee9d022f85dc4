#pragma once

// Radial cubic NLS  i psi_t + Lap psi + 2|psi|^2 psi = 0  in three dimensions,
// integrated through w = r psi, which solves  i w_t + w_rr + 2|w/r|^2 w = 0
// on (0, R] with w(0) = w(R) = 0.

#include <complex>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace csb {

using cplx = std::complex<double>;

// Nodes r_i = (i + 1) dr, i = 0 .. m-1, so the last node is R.
class RadialGrid {
 public:
  RadialGrid(double outer_radius, int point_count);

  double outer_radius() const noexcept { return R_; }
  int size() const noexcept { return m_; }
  double spacing() const noexcept { return dr_; }
  double node(int i) const noexcept { return r_[i]; }
  std::span<const double> nodes() const noexcept { return r_; }

 private:
  double R_;
  int m_;
  double dr_;
  std::vector<double> r_;
};

using RadialGridPtr = std::shared_ptr<const RadialGrid>;
RadialGridPtr make_radial_grid(double outer_radius, int point_count);

struct WaveState {
  double t = 0.0;
  RadialGridPtr grid;
  std::vector<cplx> w;  // r psi at the nodes; w at R is held at zero
};

// w = r psi. psi must decay at R: |psi(R)| above `tolerance` times max|psi|
// is rejected.
WaveState reduce(const RadialGridPtr& grid, std::span<const cplx> psi, double t = 0.0,
                 double tolerance = 1e-8);
// psi = w / r at the nodes. Rejects states whose linear extrapolation of w to
// r = 0 exceeds `tolerance` times max|w|.
std::vector<cplx> unreduce(const WaveState& state, double tolerance = 1e-3);
// psi(0) from the even extension: quadratic extrapolation of psi in r^2.
cplx center_value(const WaveState& state);

struct StepOptions {
  bool nonlinear = true;
};

// One Strang step: half nonlinear phase, Crank-Nicolson on w_rr, half
// nonlinear phase. dt may be negative.
WaveState step(const WaveState& state, double dt, const StepOptions& options = {});

struct EvolveControls {
  double dt_factor = 0.1;  // dt <= dt_factor * min(dr^2, 1 / max|psi|^2)
  double dt_max = std::numeric_limits<double>::infinity();
  bool nonlinear = true;
  // Re-evaluate max|psi| and the step size after this many steps.
  int check_interval = 32;
  // UnderResolved once 1 / max|psi| drops below this many grid spacings.
  double min_points_per_width = 16.0;
  // Times at which states are recorded, in the direction of travel; t_end is
  // always recorded.
  std::vector<double> sample_times;
};

struct Trajectory {
  std::vector<WaveState> samples;
  double reached = 0.0;
  long steps = 0;
};

Trajectory evolve(const WaveState& initial, double t_end, const EvolveControls& controls = {});

// Discrete conserved quantities of the scheme's spatial discretization:
//   M = 4 pi sum |w_i|^2 dr
//   K = 4 pi sum |w_{i+1} - w_i|^2 / dr   (w_{-1} = 0 at r = 0), the ||grad psi||^2
//   P = 4 pi sum |w_i|^4 / r_i^2 dr,      the ||psi||_4^4
//   E = K - P
double discrete_mass(const WaveState& s);
double discrete_kinetic(const WaveState& s);
double discrete_quartic(const WaveState& s);
double discrete_energy(const WaveState& s);

// Field dump: header "t,r,re_psi,im_psi" then one row per node.
void write_checkpoint(std::ostream& out, const WaveState& s);
WaveState read_checkpoint(std::istream& in);

}  // namespace csb
