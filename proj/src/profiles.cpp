#include "csb/profiles.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "csb/errors.hpp"

namespace csb {

RhoGrid::RhoGrid(double half_width, int point_count)
    : half_width_(half_width), n_(point_count) {
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw InvalidArgument("rho grid: half width must be positive");
  if (point_count < 3 || point_count % 2 == 0)
    throw InvalidArgument("rho grid: point count must be odd and >= 3");
  h_ = 2.0 * half_width / (n_ - 1);
  nodes_.resize(n_);
  weights_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    nodes_[i] = i < n_ / 2 ? -half_width_ + h_ * i : 0.0;
    double w = (i == 0 || i == n_ - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    weights_[i] = w * h_ / 3.0;
  }
  // exactly mirror-symmetric nodes
  for (int i = n_ / 2 + 1; i < n_; ++i) nodes_[i] = -nodes_[n_ - 1 - i];
}

GridPtr make_rho_grid(double half_width, int point_count) {
  return std::make_shared<const RhoGrid>(half_width, point_count);
}

ComplexField::ComplexField(GridPtr grid) : grid_(std::move(grid)) {
  values_.assign(grid_->size(), cplx{});
}

ComplexField::ComplexField(GridPtr grid, std::vector<cplx> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != grid_->size())
    throw GridMismatch("field length does not match grid");
}

ComplexField ComplexField::real_part() const {
  ComplexField out(grid_);
  for (int i = 0; i < size(); ++i) out[i] = values_[i].real();
  return out;
}

ComplexField ComplexField::imag_part() const {
  ComplexField out(grid_);
  for (int i = 0; i < size(); ++i) out[i] = values_[i].imag();
  return out;
}

ComplexField ComplexField::conj() const {
  ComplexField out(grid_);
  for (int i = 0; i < size(); ++i) out[i] = std::conj(values_[i]);
  return out;
}

ComplexField ComplexField::reflected() const {
  ComplexField out(grid_);
  const int n = size();
  for (int i = 0; i < n; ++i) out[i] = values_[n - 1 - i];
  return out;
}

ComplexField ComplexField::times_rho(int power) const {
  ComplexField out(*this);
  for (int i = 0; i < size(); ++i) out[i] *= std::pow(grid_->node(i), power);
  return out;
}

double ComplexField::max_abs() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ComplexField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

void require_same_grid(const ComplexField& a, const ComplexField& b) {
  if (a.grid() == b.grid()) return;
  if (!a.grid() || !b.grid() || a.grid()->size() != b.grid()->size() ||
      a.grid()->half_width() != b.grid()->half_width())
    throw GridMismatch("fields live on different rho grids");
}

ComplexField& ComplexField::operator+=(const ComplexField& o) {
  require_same_grid(*this, o);
  for (int i = 0; i < size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ComplexField& ComplexField::operator-=(const ComplexField& o) {
  require_same_grid(*this, o);
  for (int i = 0; i < size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ComplexField& ComplexField::operator*=(cplx s) {
  for (auto& v : values_) v *= s;
  return *this;
}

ComplexField& ComplexField::operator*=(const ComplexField& o) {
  require_same_grid(*this, o);
  for (int i = 0; i < size(); ++i) values_[i] *= o.values_[i];
  return *this;
}

ComplexField operator+(ComplexField a, const ComplexField& b) { return a += b; }
ComplexField operator-(ComplexField a, const ComplexField& b) { return a -= b; }
ComplexField operator*(ComplexField a, const ComplexField& b) { return a *= b; }
ComplexField operator*(cplx s, ComplexField a) { return a *= s; }
ComplexField operator*(ComplexField a, cplx s) { return a *= s; }
ComplexField operator-(ComplexField a) { return a *= -1.0; }

double inner(const ComplexField& a, const ComplexField& b) {
  require_same_grid(a, b);
  const auto w = a.grid()->weights();
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += w[i] * (a[i] * std::conj(b[i])).real();
  return s;
}

double l2_norm(const ComplexField& a) { return std::sqrt(std::max(inner(a, a), 0.0)); }

double parity_defect(const ComplexField& f, int sign) {
  const double nf = l2_norm(f);
  if (nf == 0.0) return 0.0;
  ComplexField d = f - static_cast<double>(sign) * f.reflected();
  return l2_norm(d) / nf;
}

ComplexField ground_state(const GridPtr& grid) {
  return ComplexField::from_function(grid, [](double r) { return cplx(1.0 / std::cosh(r)); });
}

ComplexField ground_state_d1(const GridPtr& grid) {
  return ComplexField::from_function(
      grid, [](double r) { return cplx(-std::tanh(r) / std::cosh(r)); });
}

ComplexField ground_state_d2(const GridPtr& grid) {
  // phi'' = phi - 2 phi^3
  return ComplexField::from_function(grid, [](double r) {
    const double p = 1.0 / std::cosh(r);
    return cplx(p - 2.0 * p * p * p);
  });
}

namespace {

constexpr int kHalfStencil = 3;

// Ghost continuation: u(L + j h) = u(L) exp(-j h).
struct Ghost {
  double g[kHalfStencil + 1];
  explicit Ghost(double h) {
    for (int j = 0; j <= kHalfStencil; ++j) g[j] = std::exp(-j * h);
  }
};

cplx sample(const ComplexField& f, const Ghost& gh, int j) {
  const int n = f.size();
  if (j < 0) return gh.g[-j] * f[0];
  if (j >= n) return gh.g[j - n + 1] * f[n - 1];
  return f[j];
}

// Sixth-order central weights, symmetric (second derivative) and
// antisymmetric (first derivative) halves.
constexpr double kD2[kHalfStencil + 1] = {-490.0 / 180.0, 270.0 / 180.0, -27.0 / 180.0,
                                          2.0 / 180.0};
constexpr double kD1[kHalfStencil + 1] = {0.0, 45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0};

// Row of -d^2 for node i expressed on actual nodes (ghosts folded into the
// end nodes).
void fold_row(int i, int n, double h, const Ghost& gh, std::vector<std::pair<int, double>>& row) {
  row.clear();
  for (int o = -kHalfStencil; o <= kHalfStencil; ++o) {
    int j = i + o;
    double w = -kD2[std::abs(o)] / (h * h);
    if (j < 0) {
      w *= gh.g[-j];
      j = 0;
    } else if (j >= n) {
      w *= gh.g[j - n + 1];
      j = n - 1;
    }
    auto it = std::find_if(row.begin(), row.end(), [j](const auto& p) { return p.first == j; });
    if (it == row.end())
      row.emplace_back(j, w);
    else
      it->second += w;
  }
}

}  // namespace

ComplexField d_rho(const ComplexField& f) {
  const auto& g = f.grid();
  const double h = g->spacing();
  const Ghost gh(h);
  ComplexField out(g);
  for (int i = 0; i < g->size(); ++i) {
    cplx acc{};
    for (int o = kHalfStencil; o >= 1; --o)
      acc += kD1[o] * (sample(f, gh, i + o) - sample(f, gh, i - o));
    out[i] = acc / h;
  }
  return out;
}

ComplexField d_rho2(const ComplexField& f) {
  const auto& g = f.grid();
  const double h = g->spacing();
  const Ghost gh(h);
  ComplexField out(g);
  for (int i = 0; i < g->size(); ++i) {
    cplx acc{};
    for (int o = kHalfStencil; o >= 1; --o)
      acc += kD2[o] * (sample(f, gh, i + o) + sample(f, gh, i - o));
    acc += kD2[0] * f[i];
    out[i] = acc / (h * h);
  }
  return out;
}

struct LinOp::Factorization {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  int n = 0;
};

LinOp::LinOp(LinOpKind kind, GridPtr grid) : kind_(kind), grid_(std::move(grid)) {
  const int n = grid_->size();
  const double h = grid_->spacing();
  const double c = kind_ == LinOpKind::Lplus ? 6.0 : 2.0;
  potential_.resize(n);
  for (int i = 0; i < n; ++i) {
    const double p = 1.0 / std::cosh(grid_->node(i));
    potential_[i] = 1.0 - c * p * p;
  }
  kernel_ = kind_ == LinOpKind::Lplus ? ground_state_d1(grid_) : ground_state(grid_);

  // Bordered system [A k; (W k)^T 0].
  const Ghost gh(h);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * n);
  std::vector<std::pair<int, double>> row;
  const auto w = grid_->weights();
  for (int i = 0; i < n; ++i) {
    fold_row(i, n, h, gh, row);
    for (auto [j, v] : row) trips.emplace_back(i, j, v + (j == i ? potential_[i] : 0.0));
    const double k = kernel_[i].real();
    trips.emplace_back(i, n, k);
    trips.emplace_back(n, i, w[i] * k);
  }
  Eigen::SparseMatrix<double> m(n + 1, n + 1);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  auto f = std::make_shared<Factorization>();
  f->n = n;
  f->lu.analyzePattern(m);
  f->lu.factorize(m);
  if (f->lu.info() != Eigen::Success) throw SingularSystem("bordered operator factorization failed");
  factor_ = std::move(f);
}

ComplexField LinOp::apply(const ComplexField& u) const {
  if (u.grid() != grid_) require_same_grid(u, kernel_);
  const ComplexField upp = d_rho2(u);
  ComplexField out(grid_);
  for (int i = 0; i < grid_->size(); ++i) out[i] = -upp[i] + potential_[i] * u[i];
  return out;
}

std::vector<double> LinOp::solve_real(std::span<const double> g) const {
  const int n = factor_->n;
  Eigen::VectorXd rhs(n + 1);
  for (int i = 0; i < n; ++i) rhs[i] = g[i];
  rhs[n] = 0.0;
  Eigen::VectorXd x = factor_->lu.solve(rhs);
  if (factor_->lu.info() != Eigen::Success) throw SingularSystem("bordered solve failed");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = x[i];
  if (!std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); }))
    throw SingularSystem("bordered solve produced non-finite values");
  return out;
}

ComplexField LinOp::solve_constrained(const ComplexField& g, const SolveTolerances& tol) const {
  SolveReport r;
  return solve_constrained(g, tol, r);
}

ComplexField LinOp::solve_constrained(const ComplexField& g, const SolveTolerances& tol,
                                      SolveReport& report) const {
  require_same_grid(g, kernel_);
  const int n = grid_->size();
  const double kn = l2_norm(kernel_);
  ComplexField out(grid_);
  for (int part = 0; part < 2; ++part) {
    ComplexField gp = part == 0 ? g.real_part() : g.imag_part();
    const double gn = l2_norm(gp);
    const double pairing = inner(gp, kernel_);
    (part == 0 ? report.kernel_pairing_re : report.kernel_pairing_im) = pairing;
    if (gn == 0.0) {
      (part == 0 ? report.residual_re : report.residual_im) = 0.0;
      continue;
    }
    if (std::abs(pairing) > tol.solvability * gn * kn) {
      std::ostringstream os;
      os << (kind_ == LinOpKind::Lplus ? "L+" : "L-") << " solvability violated: |(g,k)| = "
         << std::abs(pairing) << " vs ||g|| = " << gn;
      throw SolvabilityViolation(os.str());
    }
    std::vector<double> gr(n);
    for (int i = 0; i < n; ++i) gr[i] = gp[i].real();
    const auto x = solve_real(gr);
    ComplexField u(grid_);
    for (int i = 0; i < n; ++i) u[i] = x[i];
    const double res = l2_norm(apply(u) - gp) / gn;
    (part == 0 ? report.residual_re : report.residual_im) = res;
    if (res > tol.residual) {
      std::ostringstream os;
      os << "constrained solve residual " << res << " exceeds tolerance " << tol.residual;
      throw SingularSystem(os.str());
    }
    for (int i = 0; i < n; ++i) out[i] += (part == 0 ? cplx(x[i], 0.0) : cplx(0.0, x[i]));
  }
  return out;
}

ComplexField apply(const LinOp& op, const ComplexField& u) { return op.apply(u); }

ComplexField solve_constrained(const LinOp& op, const ComplexField& g, const SolveTolerances& tol) {
  return op.solve_constrained(g, tol);
}

}  // namespace csb
