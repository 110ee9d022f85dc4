#include "csb/series.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "csb/errors.hpp"

namespace csb {

namespace {

int clamp_degree(long long d) {
  return static_cast<int>(std::min<long long>(d, kUntruncated));
}

// Truncation degree of a product: the lowest degree at which an unknown
// coefficient of either factor could contribute, minus one.
int product_max_degree(int dmax_a, int val_a, int dmax_b, int val_b) {
  auto bound = [](int dmax, int other_val) -> long long {
    if (dmax >= kUntruncated) return kUntruncated;
    if (other_val >= kUntruncated) return kUntruncated;
    return static_cast<long long>(dmax) + other_val;
  };
  return clamp_degree(std::min(bound(dmax_a, val_b), bound(dmax_b, val_a)));
}

}  // namespace

// ---------------------------------------------------------------- scalars

ScalarSeries ScalarSeries::monomial(double c, int degree, int max_degree) {
  ScalarSeries s(max_degree);
  s.add(degree, c);
  return s;
}

double ScalarSeries::coeff(int d) const {
  auto it = terms_.find(d);
  return it == terms_.end() ? 0.0 : it->second;
}

void ScalarSeries::add(int d, double c) {
  if (d > dmax_ || c == 0.0) return;
  terms_[d] += c;
}

void ScalarSeries::set(int d, double c) {
  if (d > dmax_) return;
  terms_[d] = c;
}

bool ScalarSeries::is_zero() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const auto& kv) { return kv.second == 0.0; });
}

int ScalarSeries::valuation() const {
  for (const auto& [d, c] : terms_)
    if (c != 0.0) return d;
  return kUntruncated;
}

ScalarSeries ScalarSeries::truncated(int max_degree) const {
  ScalarSeries out(std::min(max_degree, dmax_));
  for (const auto& [d, c] : terms_) out.add(d, c);
  return out;
}

double ScalarSeries::evaluate(double t) const {
  const double s = std::cbrt(t);
  double acc = 0.0;
  for (const auto& [d, c] : terms_) acc += c * std::pow(s, d);
  return acc;
}

ScalarSeries& ScalarSeries::operator+=(const ScalarSeries& o) {
  dmax_ = std::min(dmax_, o.dmax_);
  for (auto it = terms_.begin(); it != terms_.end();)
    it = it->first > dmax_ ? terms_.erase(it) : std::next(it);
  for (const auto& [d, c] : o.terms_) add(d, c);
  return *this;
}

ScalarSeries& ScalarSeries::operator-=(const ScalarSeries& o) {
  ScalarSeries neg = o;
  neg *= -1.0;
  return *this += neg;
}

ScalarSeries& ScalarSeries::operator*=(double s) {
  for (auto& kv : terms_) kv.second *= s;
  return *this;
}

ScalarSeries operator+(ScalarSeries a, const ScalarSeries& b) { return a += b; }
ScalarSeries operator-(ScalarSeries a, const ScalarSeries& b) { return a -= b; }
ScalarSeries operator*(double s, ScalarSeries a) { return a *= s; }

ScalarSeries operator*(const ScalarSeries& a, const ScalarSeries& b) {
  ScalarSeries out(product_max_degree(a.max_degree(), a.valuation(), b.max_degree(), b.valuation()));
  for (const auto& [da, ca] : a.terms())
    for (const auto& [db, cb] : b.terms()) out.add(da + db, ca * cb);
  return out;
}

ScalarSeries pow(const ScalarSeries& a, int n) {
  if (n < 0) throw InvalidArgument("series pow: negative exponent");
  ScalarSeries out = ScalarSeries::constant(1.0);
  for (int i = 0; i < n; ++i) out = out * a;
  return out;
}

ScalarSeries differentiate_time(const ScalarSeries& a) {
  const int dmax = a.max_degree() >= kUntruncated ? kUntruncated : a.max_degree() - 3;
  ScalarSeries out(dmax);
  for (const auto& [d, c] : a.terms()) out.add(d - 3, c * d / 3.0);
  return out;
}

ScalarSeries integrate_time(const ScalarSeries& a) {
  const int dmax = a.max_degree() >= kUntruncated ? kUntruncated : a.max_degree() + 3;
  ScalarSeries out(dmax);
  for (const auto& [d, c] : a.terms()) {
    if (c == 0.0) continue;
    if (d == -3) throw InvalidArgument("series integration: t^-1 term has a logarithmic antiderivative");
    out.add(d + 3, c / (d / 3.0 + 1.0));
  }
  return out;
}

ScalarSeries invert_unit(const ScalarSeries& a, int max_degree) {
  if (a.valuation() < 0) throw InvalidArgument("invert_unit: negative degrees present");
  if (std::abs(a.coeff(0) - 1.0) > 1e-12) throw InvalidArgument("invert_unit: constant term must be 1");
  const int dmax = std::min(max_degree, a.max_degree());
  ScalarSeries out(dmax);
  std::vector<double> y(dmax + 1, 0.0);
  y[0] = 1.0;
  for (int d = 1; d <= dmax; ++d) {
    double acc = 0.0;
    for (int j = 1; j <= d; ++j) acc += a.coeff(j) * y[d - j];
    y[d] = -acc;
  }
  for (int d = 0; d <= dmax; ++d) out.add(d, y[d]);
  return out;
}

// ---------------------------------------------------------------- fields

FieldSeries FieldSeries::constant(const ComplexField& f, int max_degree) {
  FieldSeries s(f.grid(), max_degree);
  s.set(0, f);
  return s;
}

ComplexField FieldSeries::coeff(int d) const {
  auto it = terms_.find(d);
  return it == terms_.end() ? ComplexField(grid_) : it->second;
}

void FieldSeries::add(int d, const ComplexField& f) {
  if (d > dmax_) return;
  require_same_grid(f, ComplexField(grid_));
  auto it = terms_.find(d);
  if (it == terms_.end())
    terms_.emplace(d, f);
  else
    it->second += f;
}

void FieldSeries::set(int d, ComplexField f) {
  if (d > dmax_) return;
  terms_.insert_or_assign(d, std::move(f));
}

int FieldSeries::valuation() const {
  for (const auto& [d, f] : terms_)
    if (f.max_abs() != 0.0) return d;
  return kUntruncated;
}

FieldSeries FieldSeries::truncated(int max_degree) const {
  FieldSeries out(grid_, std::min(max_degree, dmax_));
  for (const auto& [d, f] : terms_) out.add(d, f);
  return out;
}

FieldSeries FieldSeries::conj() const {
  FieldSeries out(grid_, dmax_);
  for (const auto& [d, f] : terms_) out.set(d, f.conj());
  return out;
}

FieldSeries FieldSeries::d_rho() const {
  FieldSeries out(grid_, dmax_);
  for (const auto& [d, f] : terms_) out.set(d, csb::d_rho(f));
  return out;
}

FieldSeries FieldSeries::d_rho2() const {
  FieldSeries out(grid_, dmax_);
  for (const auto& [d, f] : terms_) out.set(d, csb::d_rho2(f));
  return out;
}

FieldSeries FieldSeries::times_rho(int power) const {
  FieldSeries out(grid_, dmax_);
  for (const auto& [d, f] : terms_) out.set(d, f.times_rho(power));
  return out;
}

ComplexField FieldSeries::evaluate(double t) const {
  const double s = std::cbrt(t);
  ComplexField out(grid_);
  for (const auto& [d, f] : terms_) out += std::pow(s, d) * f;
  return out;
}

FieldSeries& FieldSeries::operator+=(const FieldSeries& o) {
  dmax_ = std::min(dmax_, o.dmax_);
  for (auto it = terms_.begin(); it != terms_.end();)
    it = it->first > dmax_ ? terms_.erase(it) : std::next(it);
  for (const auto& [d, f] : o.terms_) add(d, f);
  return *this;
}

FieldSeries& FieldSeries::operator-=(const FieldSeries& o) {
  FieldSeries neg = o;
  neg *= -1.0;
  return *this += neg;
}

FieldSeries& FieldSeries::operator*=(cplx s) {
  for (auto& kv : terms_) kv.second *= s;
  return *this;
}

FieldSeries operator+(FieldSeries a, const FieldSeries& b) { return a += b; }
FieldSeries operator-(FieldSeries a, const FieldSeries& b) { return a -= b; }
FieldSeries operator*(cplx s, FieldSeries a) { return a *= s; }

FieldSeries operator*(const FieldSeries& a, const FieldSeries& b) {
  FieldSeries out(a.grid(),
                  product_max_degree(a.max_degree(), a.valuation(), b.max_degree(), b.valuation()));
  for (const auto& [da, fa] : a.terms())
    for (const auto& [db, fb] : b.terms())
      if (da + db <= out.max_degree()) out.add(da + db, fa * fb);
  return out;
}

FieldSeries operator*(const ScalarSeries& a, const FieldSeries& b) {
  FieldSeries out(b.grid(),
                  product_max_degree(a.max_degree(), a.valuation(), b.max_degree(), b.valuation()));
  for (const auto& [da, ca] : a.terms())
    for (const auto& [db, fb] : b.terms())
      if (da + db <= out.max_degree()) out.add(da + db, cplx(ca) * fb);
  return out;
}

FieldSeries differentiate_time(const FieldSeries& a) {
  const int dmax = a.max_degree() >= kUntruncated ? kUntruncated : a.max_degree() - 3;
  FieldSeries out(a.grid(), dmax);
  for (const auto& [d, f] : a.terms())
    if (d != 0) out.add(d - 3, cplx(d / 3.0) * f);
  return out;
}

FieldSeries invert_unit(const FieldSeries& a, int max_degree) {
  if (a.valuation() < 0) throw InvalidArgument("invert_unit: negative degrees present");
  const ComplexField c0 = a.coeff(0);
  for (const auto& v : c0.values())
    if (std::abs(v - 1.0) > 1e-12) throw InvalidArgument("invert_unit: constant term must be 1");
  const int dmax = std::min(max_degree, a.max_degree());
  FieldSeries out(a.grid(), dmax);
  std::vector<ComplexField> y;
  y.reserve(dmax + 1);
  y.push_back(c0);
  for (int d = 1; d <= dmax; ++d) {
    ComplexField acc(a.grid());
    for (int j = 1; j <= d; ++j)
      if (a.has(j)) acc -= a.coeff(j) * y[d - j];
    y.push_back(std::move(acc));
  }
  for (int d = 0; d <= dmax; ++d) out.set(d, y[d]);
  return out;
}

// ---------------------------------------------------------------- parameters

ScalarSeries q_series(const std::vector<double>& q) {
  ScalarSeries s;
  for (std::size_t k = 0; k < q.size(); ++k) s.add(static_cast<int>(2 * k + 1), q[k]);
  return s;
}

ScalarSeries omega_series(const std::vector<double>& omega) {
  ScalarSeries s;
  for (std::size_t k = 0; k < omega.size(); ++k) s.add(static_cast<int>(2 * k), omega[k]);
  return s;
}

ParameterSeries parameter_series(const std::vector<double>& q, const std::vector<double>& omega,
                                 int max_degree) {
  if (q.empty() || q[0] == 0.0) throw InvalidArgument("parameter series: q0 must be nonzero");
  if (omega.empty() || omega[0] != 1.0) throw InvalidArgument("parameter series: omega0 must be 1");
  ParameterSeries p;
  p.q = q_series(q);
  p.dq = differentiate_time(p.q);
  p.d2q = differentiate_time(p.dq);
  p.omega = omega_series(omega);
  p.domega = differentiate_time(p.omega);
  p.v = p.dq;
  p.dv = p.d2q;

  // lambda = q0^-2 s^-2 / (omega (q / (q0 s))^2)
  const double q0 = q[0];
  const ScalarSeries q_unit = ScalarSeries::monomial(1.0 / q0, -1) * p.q;
  const ScalarSeries inv = invert_unit(p.omega * q_unit * q_unit, max_degree + 2);
  p.lambda = ScalarSeries::monomial(1.0 / (q0 * q0), -2) * inv;

  p.theta_prime = p.lambda * p.lambda - 0.25 * (p.v * p.v) - 0.5 * (p.dv * p.q);
  p.theta_prime = p.theta_prime.truncated(max_degree);
  p.theta = integrate_time(p.theta_prime);
  return p;
}

// ---------------------------------------------------------------- profile equation

FieldSeries profile_residual(const StageData& data, int max_degree) {
  const GridPtr& grid = data.grid;
  if (!grid) throw InvalidArgument("profile residual: missing grid");
  if (data.omega.empty() || data.omega[0] != 1.0)
    throw InvalidArgument("profile residual: omega0 must be 1");

  const ScalarSeries q = q_series(data.q);
  const ScalarSeries w = omega_series(data.omega);
  const ScalarSeries dq = differentiate_time(q);
  const ScalarSeries d2q = differentiate_time(dq);
  const ScalarSeries dw = differentiate_time(w);

  const ScalarSeries q3 = pow(q, 3), q4 = q3 * q, w2 = w * w;
  const ScalarSeries time_coeff = q4 * w2;        // q^4 w^2
  const ScalarSeries qw = q * w;                  // q w
  const ScalarSeries drift = dq * q3 * w2;        // q' q^3 w^2
  const ScalarSeries dilation = 2.0 * drift + dw * w * q4;
  const ScalarSeries curvature = 0.5 * (d2q * pow(q, 6) * w2 * w);

  FieldSeries u(grid, max_degree), u_r(grid, max_degree), u_rr(grid, max_degree);
  u.set(0, ground_state(grid));
  u_r.set(0, ground_state_d1(grid));
  u_rr.set(0, ground_state_d2(grid));
  for (std::size_t j = 0; j < data.chi.size() && static_cast<int>(j) + 1 <= max_degree; ++j) {
    const auto& c = data.chi[j];
    require_same_grid(c, u.coeff(0));
    u.set(static_cast<int>(j) + 1, c);
    u_r.set(static_cast<int>(j) + 1, d_rho(c));
    u_rr.set(static_cast<int>(j) + 1, d_rho2(c));
  }
  const FieldSeries u_t = differentiate_time(u);

  const ComplexField ones = ComplexField::from_function(grid, [](double) { return cplx(1.0); });
  const FieldSeries one = FieldSeries::constant(ones, max_degree);
  const FieldSeries geometric = invert_unit(one + qw * one.times_rho(), max_degree);

  const cplx I(0.0, 1.0);
  FieldSeries e = (-I) * (time_coeff * u_t);
  e -= u_rr;
  e += u;
  e -= 2.0 * (u * u.conj() * u);
  e -= 2.0 * (qw * (geometric * u_r));
  e += curvature * u.times_rho();
  e += I * (dilation * (u + u_r.times_rho()));
  e -= I * (drift * (geometric * u));
  return e.truncated(max_degree);
}

StageRhs assemble_rhs(int k, const StageData& data) {
  if (k < 1) throw InvalidArgument("assemble_rhs: stage index must be >= 1");
  const std::size_t need_params = static_cast<std::size_t>((k - 1) / 2) + 1;
  const std::size_t need_chi = static_cast<std::size_t>(k - 1);
  if (data.q.size() < need_params || data.omega.size() < need_params || data.chi.size() < need_chi)
    throw InvalidArgument("assemble_rhs: missing lower-stage data for stage " + std::to_string(k));
  StageData lower;
  lower.grid = data.grid;
  lower.q.assign(data.q.begin(), data.q.begin() + need_params);
  lower.omega.assign(data.omega.begin(), data.omega.begin() + need_params);
  lower.chi.assign(data.chi.begin(), data.chi.begin() + need_chi);
  const FieldSeries e = profile_residual(lower, k);
  const ComplexField d = -e.coeff(k);
  return {d.real_part(), d.imag_part()};
}

std::string series_csv(const FieldSeries& s) {
  std::ostringstream os;
  os << "degree,l2_norm,parity_defect_re,parity_defect_im\n";
  os << std::setprecision(10);
  for (const auto& [d, f] : s.terms()) {
    const int sign = (d % 2 == 0) ? 1 : -1;
    os << d << ',' << l2_norm(f) << ',' << parity_defect(f.real_part(), sign) << ','
       << parity_defect(f.imag_part(), -sign) << '\n';
  }
  return os.str();
}

}  // namespace csb
