#pragma once

#include <vector>

namespace qloc::specfun {

// J_n(x) for integer order n >= 0 and any finite x.
double bessel_j(int n, double x);

// J_0(x) .. J_nmax(x) in one pass (Miller backward recurrence, or forward
// recurrence when nmax < x where that direction is stable).
std::vector<double> bessel_j_sequence(int nmax, double x);

// k-th positive zero of J_m, k >= 1.
double bessel_j_zero(int m, int k);

// J_n(x)/x with the x -> 0 limit, and its derivative in x.
double bessel_over_x(int n, double x);
double bessel_over_x_deriv(int n, double x);

// Aperture overlap <K_r|K_r'> = 2 J1(2 pi d)/(2 pi d), d = |r - r'|.
double kernel(double d);

// J2(2 pi d)/d^2 with limit pi^2/2 at d = 0. The field-point gradient is
// grad_r kernel(|r - r0|) = -2 kernel_grad_factor(d) (r - r0).
double kernel_grad_factor(double d);

// Integral of J_{m+1}(2 pi r)^2 / r over [0, R].
double radial_sq_integral(int m, double R);

// Integral of J_{m+1}(2 pi r) J_{mp+1}(2 pi r) / r over [0, R].
double radial_cross_integral(int m, int mp, double R);

// Reference routes by adaptive quadrature.
double radial_sq_integral_quadrature(int m, double R, double rel_tol = 1e-12);
double radial_cross_integral_quadrature(int m, int mp, double R, double rel_tol = 1e-12);

// All cross integrals for m, mp <= m_max from one Bessel sequence at 2 pi R.
class RadialIntegralTable {
 public:
  RadialIntegralTable(int m_max, double R);

  int m_max() const { return m_max_; }
  double R() const { return R_; }
  double operator()(int m, int mp) const { return table_[m * (m_max_ + 1) + mp]; }

 private:
  int m_max_;
  double R_;
  std::vector<double> table_;
};

}  // namespace qloc::specfun
