#pragma once

// Independent reference routines for tests: power series in long double,
// bisection, and Boost Gauss-Kronrod quadrature.

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline double bessel_series(int n, double x) {
  long double term = 1.0L;
  for (int k = 1; k <= n; ++k) term *= (x / 2.0L) / k;
  long double sum = term;
  const long double q = -(static_cast<long double>(x) * x) / 4.0L;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<long double>(k) * (k + n));
    sum += term;
    if (std::fabs(term) < 1e-22L * std::fabs(sum)) break;
  }
  return static_cast<double>(sum);
}

inline double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::fabs(b); ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Adaptive Gauss-Kronrod over [a, b], split into `pieces` equal parts.
inline double gk(const std::function<double(double)>& f, double a, double b, int pieces = 1, double tol = 1e-13) {
  double sum = 0.0;
  const double h = (b - a) / pieces;
  for (int k = 0; k < pieces; ++k)
    sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a + k * h, a + (k + 1) * h, 15, tol);
  return sum;
}

// Gauss-Legendre nodes and weights on [a, b] by Golub-Welsch.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a, double b) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> x(n), w(n);
  for (int k = 0; k < n; ++k) {
    x[k] = 0.5 * (b - a) * (es.eigenvalues()(k) + 1) + a;
    w[k] = (b - a) * std::pow(es.eigenvectors()(0, k), 2);
  }
  return {x, w};
}

}  // namespace oracle
