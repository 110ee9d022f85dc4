#pragma once

// Truncated Laurent series in s = t^{1/3}. Degree d stands for s^d = t^{d/3}.
//
// A series stores its coefficients up to a truncation degree; everything above
// is unknown rather than zero. Products carry the tightest truncation that
// keeps every stored coefficient exact, which matters once negative degrees
// (q'' ~ s^-5, U_t ~ s^-2) enter.

#include <climits>
#include <map>
#include <string>
#include <vector>

#include "csb/profiles.hpp"

namespace csb {

inline constexpr int kUntruncated = INT_MAX / 4;

class ScalarSeries {
 public:
  ScalarSeries() = default;
  explicit ScalarSeries(int max_degree) : dmax_(max_degree) {}

  static ScalarSeries monomial(double c, int degree, int max_degree = kUntruncated);
  static ScalarSeries constant(double c, int max_degree = kUntruncated) {
    return monomial(c, 0, max_degree);
  }

  int max_degree() const noexcept { return dmax_; }
  double coeff(int d) const;
  void add(int d, double c);
  void set(int d, double c);
  const std::map<int, double>& terms() const noexcept { return terms_; }
  bool is_zero() const;
  // Lowest degree with a nonzero coefficient; kUntruncated for zero.
  int valuation() const;

  ScalarSeries truncated(int max_degree) const;
  // sum c_d t^{d/3}
  double evaluate(double t) const;

  ScalarSeries& operator+=(const ScalarSeries& o);
  ScalarSeries& operator-=(const ScalarSeries& o);
  ScalarSeries& operator*=(double s);

 private:
  std::map<int, double> terms_;
  int dmax_ = kUntruncated;
};

ScalarSeries operator+(ScalarSeries a, const ScalarSeries& b);
ScalarSeries operator-(ScalarSeries a, const ScalarSeries& b);
ScalarSeries operator*(const ScalarSeries& a, const ScalarSeries& b);
ScalarSeries operator*(double s, ScalarSeries a);
ScalarSeries pow(const ScalarSeries& a, int n);

// d/dt: s^d -> (d/3) s^{d-3}.
ScalarSeries differentiate_time(const ScalarSeries& a);
// Term-wise antiderivative with zero constant; throws on a t^{-1} term.
ScalarSeries integrate_time(const ScalarSeries& a);
// 1 / a for a = 1 + (positive valuation tail), truncated at max_degree.
ScalarSeries invert_unit(const ScalarSeries& a, int max_degree);

class FieldSeries {
 public:
  FieldSeries() = default;
  FieldSeries(GridPtr grid, int max_degree) : grid_(std::move(grid)), dmax_(max_degree) {}

  static FieldSeries constant(const ComplexField& f, int max_degree);

  const GridPtr& grid() const noexcept { return grid_; }
  int max_degree() const noexcept { return dmax_; }
  // Zero field when the degree is absent.
  ComplexField coeff(int d) const;
  bool has(int d) const { return terms_.count(d) != 0; }
  void add(int d, const ComplexField& f);
  void set(int d, ComplexField f);
  const std::map<int, ComplexField>& terms() const noexcept { return terms_; }
  int valuation() const;

  FieldSeries truncated(int max_degree) const;
  FieldSeries conj() const;
  // Coefficient-wise rho derivatives.
  FieldSeries d_rho() const;
  FieldSeries d_rho2() const;
  FieldSeries times_rho(int power = 1) const;
  // Evaluates sum_d t^{d/3} f_d.
  ComplexField evaluate(double t) const;

  FieldSeries& operator+=(const FieldSeries& o);
  FieldSeries& operator-=(const FieldSeries& o);
  FieldSeries& operator*=(cplx s);

 private:
  GridPtr grid_;
  std::map<int, ComplexField> terms_;
  int dmax_ = kUntruncated;
};

FieldSeries operator+(FieldSeries a, const FieldSeries& b);
FieldSeries operator-(FieldSeries a, const FieldSeries& b);
FieldSeries operator*(cplx s, FieldSeries a);
// Pointwise product of field coefficients.
FieldSeries operator*(const FieldSeries& a, const FieldSeries& b);
FieldSeries operator*(const ScalarSeries& a, const FieldSeries& b);
FieldSeries differentiate_time(const FieldSeries& a);
// 1 / a for a = 1 (all-ones field) + (positive valuation tail).
FieldSeries invert_unit(const FieldSeries& a, int max_degree);

// Parameter laws as formal series. q and omega are finite sums; lambda and
// theta' are truncated at max_degree.
struct ParameterSeries {
  ScalarSeries q, dq, d2q;
  ScalarSeries omega, domega;
  ScalarSeries lambda;  // 1 / (omega q^2)
  ScalarSeries v, dv;   // v = q'
  ScalarSeries theta_prime;  // lambda^2 - v^2/4 - v' q / 2
  ScalarSeries theta;        // antiderivative of theta', zero constant
};

// q(t) = sum q_k t^{(2k+1)/3}, omega(t) = sum omega_k t^{2k/3}; omega[0] must
// be 1.
ScalarSeries q_series(const std::vector<double>& q);
ScalarSeries omega_series(const std::vector<double>& omega);
ParameterSeries parameter_series(const std::vector<double>& q, const std::vector<double>& omega,
                                 int max_degree);

// Everything the profile equation needs from lower stages. chi[j-1] is
// chi_j; q and omega hold whatever coefficients are known.
struct StageData {
  GridPtr grid;
  std::vector<double> q;
  std::vector<double> omega{1.0};
  std::vector<ComplexField> chi;
};

// Residual of the rescaled profile equation, written so that its degree-k
// coefficient equals H chi_k - D_k:
//   -i q^4 w^2 U_t - U'' + U - 2|U|^2 U - 2 q w/(1 + rho w q) U'
//   + (1/2) q'' q^6 w^3 rho U + i (2 q' q^3 w^2 + w' w q^4)(U + rho U')
//   - i q' q^3 w^2 / (1 + rho w q) U,
// with U = phi + sum_j s^j chi_j, expanded to max_degree.
FieldSeries profile_residual(const StageData& data, int max_degree);

struct StageRhs {
  ComplexField plus;   // Re D_k
  ComplexField minus;  // Im D_k
};

// D_k from all data of lower stages; chi_k and higher are ignored.
StageRhs assemble_rhs(int k, const StageData& data);

// Debug dump: degree, ||coefficient||_2, parity defect against (-1)^degree
// for the real part.
std::string series_csv(const FieldSeries& s);

}  // namespace csb
