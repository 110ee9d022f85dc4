#pragma once

// Profile-variable grid, the sech ground state, the 1D linearized operators
// L+ and L-, the real L2 pairing, and kernel-constrained linear solves.

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace csb {

using cplx = std::complex<double>;

// Uniform grid on [-L, L] with an odd number of nodes, so rho = 0 is a node.
class RhoGrid {
 public:
  RhoGrid(double half_width, int point_count);

  double half_width() const noexcept { return half_width_; }
  int size() const noexcept { return n_; }
  double spacing() const noexcept { return h_; }
  double node(int i) const noexcept { return nodes_[i]; }
  int center() const noexcept { return n_ / 2; }
  std::span<const double> nodes() const noexcept { return nodes_; }
  // Composite Simpson weights (already scaled by h).
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  double half_width_;
  int n_;
  double h_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const RhoGrid>;

GridPtr make_rho_grid(double half_width, int point_count);

// Complex samples on a RhoGrid. Cheap to copy only in the sense that the grid
// is shared; sample storage is owned.
class ComplexField {
 public:
  ComplexField() = default;
  explicit ComplexField(GridPtr grid);
  ComplexField(GridPtr grid, std::vector<cplx> values);

  template <class F>
  static ComplexField from_function(GridPtr grid, F&& f) {
    ComplexField out(grid);
    for (int i = 0; i < grid->size(); ++i) out.values_[i] = f(grid->node(i));
    return out;
  }

  const GridPtr& grid() const noexcept { return grid_; }
  int size() const noexcept { return static_cast<int>(values_.size()); }
  cplx& operator[](int i) { return values_[i]; }
  const cplx& operator[](int i) const { return values_[i]; }
  std::span<const cplx> values() const noexcept { return values_; }
  std::span<cplx> values() noexcept { return values_; }

  ComplexField real_part() const;
  ComplexField imag_part() const;
  ComplexField conj() const;
  // f(-rho).
  ComplexField reflected() const;
  // Pointwise multiplication by rho^power.
  ComplexField times_rho(int power = 1) const;

  double max_abs() const;
  bool all_finite() const;

  ComplexField& operator+=(const ComplexField& o);
  ComplexField& operator-=(const ComplexField& o);
  ComplexField& operator*=(cplx s);
  // Pointwise product.
  ComplexField& operator*=(const ComplexField& o);

 private:
  GridPtr grid_;
  std::vector<cplx> values_;
};

ComplexField operator+(ComplexField a, const ComplexField& b);
ComplexField operator-(ComplexField a, const ComplexField& b);
ComplexField operator*(ComplexField a, const ComplexField& b);
ComplexField operator*(cplx s, ComplexField a);
ComplexField operator*(ComplexField a, cplx s);
ComplexField operator-(ComplexField a);

void require_same_grid(const ComplexField& a, const ComplexField& b);

// Re \int a conj(b) drho by composite Simpson.
double inner(const ComplexField& a, const ComplexField& b);
double l2_norm(const ComplexField& a);

// ||f - sign * f(-.)|| / ||f||; zero for the zero field.
double parity_defect(const ComplexField& f, int sign);

// phi = sech(rho) and its analytic derivatives.
ComplexField ground_state(const GridPtr& grid);
ComplexField ground_state_d1(const GridPtr& grid);
ComplexField ground_state_d2(const GridPtr& grid);

// Sixth-order central differences. Beyond +-L samples are continued by the
// exp(-|rho|) tail that every profile field shares.
ComplexField d_rho(const ComplexField& f);
ComplexField d_rho2(const ComplexField& f);

enum class LinOpKind { Lplus, Lminus };

struct SolveTolerances {
  double solvability = 1e-6;  // |(g, k)| <= tol * ||g|| * ||k||
  double residual = 1e-8;     // ||op u - g|| <= tol * ||g||
};

// L+ = -d^2 + 1 - 6 phi^2 or L- = -d^2 + 1 - 2 phi^2 on a RhoGrid, with a
// cached factorization of the kernel-bordered system.
class LinOp {
 public:
  LinOp(LinOpKind kind, GridPtr grid);

  LinOpKind kind() const noexcept { return kind_; }
  const GridPtr& grid() const noexcept { return grid_; }
  // phi_rho for L+, phi for L-.
  const ComplexField& kernel() const noexcept { return kernel_; }

  ComplexField apply(const ComplexField& u) const;

  // Unique solution of op u = g with (u, kernel) = 0, real and imaginary
  // parts solved independently.
  ComplexField solve_constrained(const ComplexField& g,
                                 const SolveTolerances& tol = {}) const;

  // Kernel pairings of g and relative residuals ||op u - g|| / ||g||, per
  // component.
  struct SolveReport {
    double kernel_pairing_re = 0.0;
    double kernel_pairing_im = 0.0;
    double residual_re = 0.0;
    double residual_im = 0.0;
  };
  ComplexField solve_constrained(const ComplexField& g, const SolveTolerances& tol,
                                 SolveReport& report) const;

 private:
  struct Factorization;
  std::vector<double> solve_real(std::span<const double> g) const;

  LinOpKind kind_;
  GridPtr grid_;
  std::vector<double> potential_;  // 1 - c phi^2
  ComplexField kernel_;
  std::shared_ptr<const Factorization> factor_;
};

ComplexField apply(const LinOp& op, const ComplexField& u);
ComplexField solve_constrained(const LinOp& op, const ComplexField& g,
                               const SolveTolerances& tol = {});

}  // namespace csb
