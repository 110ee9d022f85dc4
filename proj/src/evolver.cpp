#include "csb/evolver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "csb/errors.hpp"

namespace csb {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
const cplx kI(0.0, 1.0);

// Crank-Nicolson for w_t = i w_rr on the interior nodes 0 .. m-2 (the node at
// R is pinned to zero), factorized once per time step value.
class CrankNicolson {
 public:
  CrankNicolson(int unknowns, double dr, double dt) : n_(unknowns), dt_(dt) {
    const double mu = dt / (dr * dr);
    diag_ = 1.0 + kI * mu;
    off_ = -0.5 * kI * mu;
    rdiag_ = 1.0 - kI * mu;
    roff_ = 0.5 * kI * mu;
    cprime_.resize(n_);
    inv_.resize(n_);
    cplx prev = 0.0;
    for (int i = 0; i < n_; ++i) {
      const cplx den = diag_ - off_ * prev;
      inv_[i] = 1.0 / den;
      cprime_[i] = off_ * inv_[i];
      prev = cprime_[i];
    }
    work_.resize(n_);
  }

  double dt() const noexcept { return dt_; }

  void apply(std::vector<cplx>& w) {
    // Right-hand side and forward sweep fused.
    cplx dprev = 0.0;
    for (int i = 0; i < n_; ++i) {
      const cplx left = i > 0 ? w[i - 1] : cplx(0.0);
      const cplx right = i + 1 < n_ ? w[i + 1] : cplx(0.0);
      const cplx d = rdiag_ * w[i] + roff_ * (left + right);
      dprev = (d - off_ * dprev) * inv_[i];
      work_[i] = dprev;
    }
    w[n_ - 1] = work_[n_ - 1];
    for (int i = n_ - 2; i >= 0; --i) w[i] = work_[i] - cprime_[i] * w[i + 1];
  }

 private:
  int n_;
  double dt_;
  cplx diag_, off_, rdiag_, roff_;
  std::vector<cplx> cprime_, inv_, work_;
};

void nonlinear_phase(std::vector<cplx>& w, const RadialGrid& g, double tau) {
  for (int i = 0; i < g.size(); ++i) {
    const double r = g.node(i);
    w[i] *= std::polar(1.0, 2.0 * std::norm(w[i]) / (r * r) * tau);
  }
}

void strang(std::vector<cplx>& w, const RadialGrid& g, CrankNicolson& cn, bool nonlinear) {
  const double dt = cn.dt();
  if (nonlinear) nonlinear_phase(w, g, 0.5 * dt);
  cn.apply(w);
  w.back() = 0.0;
  if (nonlinear) nonlinear_phase(w, g, 0.5 * dt);
}

double max_psi(const WaveState& s) {
  double m = 0.0;
  for (int i = 0; i < s.grid->size(); ++i) m = std::max(m, std::abs(s.w[i]) / s.grid->node(i));
  return m;
}

}  // namespace

RadialGrid::RadialGrid(double outer_radius, int point_count) : R_(outer_radius), m_(point_count) {
  if (!(outer_radius > 0.0) || !std::isfinite(outer_radius))
    throw InvalidArgument("radial grid: outer radius must be positive");
  if (point_count < 4) throw InvalidArgument("radial grid: need at least 4 nodes");
  dr_ = R_ / m_;
  r_.resize(m_);
  for (int i = 0; i < m_; ++i) r_[i] = (i + 1) * dr_;
}

RadialGridPtr make_radial_grid(double outer_radius, int point_count) {
  return std::make_shared<const RadialGrid>(outer_radius, point_count);
}

WaveState reduce(const RadialGridPtr& grid, std::span<const cplx> psi, double t, double tolerance) {
  if (static_cast<int>(psi.size()) != grid->size()) throw GridMismatch("reduce: sample count differs from grid size");
  double peak = 0.0;
  for (const auto& v : psi) peak = std::max(peak, std::abs(v));
  if (std::abs(psi.back()) > tolerance * peak) throw InvalidArgument("reduce: psi does not decay at the outer radius");
  WaveState s;
  s.t = t;
  s.grid = grid;
  s.w.resize(psi.size());
  for (int i = 0; i < grid->size(); ++i) s.w[i] = grid->node(i) * psi[i];
  s.w.back() = 0.0;
  return s;
}

std::vector<cplx> unreduce(const WaveState& state, double tolerance) {
  const auto& g = *state.grid;
  double peak = 0.0;
  for (const auto& v : state.w) peak = std::max(peak, std::abs(v));
  const cplx w0 = 2.0 * state.w[0] - state.w[1];
  if (std::abs(w0) > tolerance * peak)
    throw InvalidArgument("unreduce: w does not vanish at r = 0; division by r would blow up");
  std::vector<cplx> psi(g.size());
  for (int i = 0; i < g.size(); ++i) psi[i] = state.w[i] / g.node(i);
  return psi;
}

cplx center_value(const WaveState& state) {
  // psi is even in r, so fit psi = a + b r^2 + c r^4 through the first three
  // nodes (r = dr, 2dr, 3dr) and return a.
  const auto& g = *state.grid;
  const cplx p1 = state.w[0] / g.node(0), p2 = state.w[1] / g.node(1), p3 = state.w[2] / g.node(2);
  // Lagrange weights in x = r^2 at x = 0 for nodes x = 1, 4, 9 (units of dr^2).
  return p1 * (4.0 * 9.0) / ((1.0 - 4.0) * (1.0 - 9.0)) + p2 * (1.0 * 9.0) / ((4.0 - 1.0) * (4.0 - 9.0)) +
         p3 * (1.0 * 4.0) / ((9.0 - 1.0) * (9.0 - 4.0));
}

WaveState step(const WaveState& state, double dt, const StepOptions& options) {
  WaveState out = state;
  CrankNicolson cn(state.grid->size() - 1, state.grid->spacing(), dt);
  strang(out.w, *state.grid, cn, options.nonlinear);
  out.t = state.t + dt;
  return out;
}

Trajectory evolve(const WaveState& initial, double t_end, const EvolveControls& controls) {
  if (!(controls.dt_factor > 0.0)) throw InvalidArgument("evolve: dt factor must be positive");
  const auto& g = *initial.grid;
  const double dr = g.spacing();
  const double dir = t_end >= initial.t ? 1.0 : -1.0;

  std::vector<double> targets;
  for (double ts : controls.sample_times)
    if ((ts - initial.t) * dir > 0.0 && (t_end - ts) * dir > 0.0) targets.push_back(ts);
  std::sort(targets.begin(), targets.end(), [dir](double a, double b) { return a * dir < b * dir; });
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  targets.push_back(t_end);

  Trajectory traj;
  traj.samples.push_back(initial);
  WaveState cur = initial;
  std::unique_ptr<CrankNicolson> cn;

  for (double target : targets) {
    while ((target - cur.t) * dir > 0.0) {
      const double peak = max_psi(cur);
      if (peak > 0.0 && 1.0 / peak < controls.min_points_per_width * dr) {
        traj.reached = cur.t;
        std::ostringstream os;
        os << "layer width 1/max|psi| = " << 1.0 / peak << " is below " << controls.min_points_per_width
           << " grid spacings at t = " << cur.t;
        throw UnderResolved(os.str(), cur.t);
      }
      double cap = dr * dr;
      if (peak > 0.0) cap = std::min(cap, 1.0 / (peak * peak));
      cap = std::min(controls.dt_factor * cap, controls.dt_max);
      const double remaining = std::abs(target - cur.t);
      const double count = std::ceil(remaining / cap * (1.0 - 1e-12));
      const double dt = dir * remaining / count;
      if (!cn || cn->dt() != dt) cn = std::make_unique<CrankNicolson>(g.size() - 1, dr, dt);
      const long n = static_cast<long>(std::min<double>(count, controls.check_interval));
      const double start = cur.t;
      for (long k = 0; k < n; ++k) strang(cur.w, g, *cn, controls.nonlinear);
      traj.steps += n;
      cur.t = n == static_cast<long>(count) ? target : start + n * dt;
      for (const auto& v : cur.w)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
          traj.reached = start;
          throw NumericalFailure("evolve: non-finite field values near t = " + std::to_string(start));
        }
    }
    traj.samples.push_back(cur);
  }
  traj.reached = cur.t;
  return traj;
}

double discrete_mass(const WaveState& s) {
  double acc = 0.0;
  for (const auto& v : s.w) acc += std::norm(v);
  return kFourPi * acc * s.grid->spacing();
}

double discrete_kinetic(const WaveState& s) {
  double acc = std::norm(s.w[0]);
  for (std::size_t i = 1; i < s.w.size(); ++i) acc += std::norm(s.w[i] - s.w[i - 1]);
  return kFourPi * acc / s.grid->spacing();
}

double discrete_quartic(const WaveState& s) {
  const auto& g = *s.grid;
  double acc = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double a = std::norm(s.w[i]) / (g.node(i) * g.node(i));
    acc += a * a * g.node(i) * g.node(i);
  }
  return kFourPi * acc * g.spacing();
}

double discrete_energy(const WaveState& s) { return discrete_kinetic(s) - discrete_quartic(s); }

void write_checkpoint(std::ostream& out, const WaveState& s) {
  const auto psi = unreduce(s, INFINITY);
  out << "t,r,re_psi,im_psi\n" << std::setprecision(17);
  for (int i = 0; i < s.grid->size(); ++i)
    out << s.t << ',' << s.grid->node(i) << ',' << psi[i].real() << ',' << psi[i].imag() << '\n';
}

WaveState read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t,r,re_psi,im_psi") throw InvalidArgument("checkpoint: bad header");
  double t = 0.0;
  std::vector<double> r;
  std::vector<cplx> psi;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double tt, rr, re, im;
    char c1, c2, c3;
    if (!(row >> tt >> c1 >> rr >> c2 >> re >> c3 >> im)) throw InvalidArgument("checkpoint: malformed row: " + line);
    t = tt;
    r.push_back(rr);
    psi.push_back({re, im});
  }
  if (r.size() < 4) throw InvalidArgument("checkpoint: too few rows");
  auto grid = make_radial_grid(r.back(), static_cast<int>(r.size()));
  for (int i = 0; i < grid->size(); ++i)
    if (std::abs(grid->node(i) - r[i]) > 1e-9 * grid->spacing())
      throw InvalidArgument("checkpoint: nodes are not the uniform grid (i + 1) R / m");
  WaveState s;
  s.t = t;
  s.grid = grid;
  s.w.resize(psi.size());
  for (int i = 0; i < grid->size(); ++i) s.w[i] = r[i] * psi[i];
  s.w.back() = 0.0;
  return s;
}

}  // namespace csb
