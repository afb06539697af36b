#include "qloc/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

#include "qloc/error.hpp"
#include "qloc/quadrature.hpp"

namespace qloc::specfun {

namespace {

using std::numbers::pi;

// Keep double arithmetic inside Boost; the default promotes to long double.
using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

void check_order(int n) {
  if (n < 0) throw InvalidArgument("Bessel order must be non-negative");
}

// Starting order for Miller recurrence: far enough past max(n, x) that
// J_N(x) is below double precision relative to the wanted values.
int miller_start(int nmax, double x) {
  const double top = std::max(static_cast<double>(nmax), x);
  int n = static_cast<int>(top) + 40 + static_cast<int>(8.0 * std::cbrt(top));
  return n + (n & 1);
}

}  // namespace

double bessel_j(int n, double x) {
  check_order(n);
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x < 0.0) {
    const double v = boost::math::cyl_bessel_j(n, -x, Policy());
    return (n & 1) ? -v : v;
  }
  return boost::math::cyl_bessel_j(n, x, Policy());
}

std::vector<double> bessel_j_sequence(int nmax, double x) {
  check_order(nmax);
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  const double ax = std::fabs(x);
  if (ax == 0.0) {
    out[0] = 1.0;
    return out;
  }

  if (ax < 1e-20) {
    for (int k = 0; k <= nmax; ++k) out[k] = boost::math::cyl_bessel_j(k, ax, Policy());
  } else if (nmax < ax) {
    out[0] = boost::math::cyl_bessel_j(0, ax, Policy());
    if (nmax >= 1) out[1] = boost::math::cyl_bessel_j(1, ax, Policy());
    for (int k = 1; k < nmax; ++k) out[k + 1] = (2.0 * k / ax) * out[k] - out[k - 1];
  } else {
    const int top = miller_start(nmax, ax);
    double jp1 = 0.0;
    double j = 1e-300;
    double norm = 0.0;
    for (int k = top; k >= 1; --k) {
      const double jm1 = (2.0 * k / ax) * j - jp1;
      jp1 = j;
      j = jm1;
      // j now holds the unnormalized J_{k-1}
      const int idx = k - 1;
      if (idx <= nmax) out[idx] = j;
      if (idx > 0 && (idx & 1) == 0) norm += 2.0 * j;
      if (std::fabs(j) > 1e250) {
        j *= 1e-250;
        jp1 *= 1e-250;
        norm *= 1e-250;
        for (int i = idx; i <= nmax; ++i) out[i] *= 1e-250;
      }
    }
    norm += j;
    for (double& v : out) v /= norm;
  }

  if (x < 0.0) {
    for (int k = 1; k <= nmax; k += 2) out[k] = -out[k];
  }
  return out;
}

double bessel_j_zero(int m, int k) {
  check_order(m);
  if (k < 1) throw InvalidArgument("Bessel zero index must be >= 1");
  return boost::math::cyl_bessel_j_zero(static_cast<double>(m), k, Policy());
}

double bessel_over_x(int n, double x) {
  if (n < 1) throw InvalidArgument("bessel_over_x needs order >= 1");
  if (std::fabs(x) < 1.0) {
    // sum_k (-1)^k (x/2)^(2k+n-1) / (2 k! (k+n)!)
    const double h = 0.5 * x;
    double c = 1.0;
    for (int i = 2; i <= n; ++i) c /= i;
    double sum = 0.0;
    for (int k = 0; k < 30; ++k) {
      const double t = 0.5 * c * std::pow(h, 2 * k + n - 1);
      sum += t;
      if (std::fabs(t) <= 1e-17 * std::fabs(sum)) break;
      c *= -1.0 / (static_cast<double>(k + 1) * (k + 1 + n));
    }
    return sum;
  }
  return bessel_j(n, x) / x;
}

double bessel_over_x_deriv(int n, double x) {
  if (n < 1) throw InvalidArgument("bessel_over_x_deriv needs order >= 1");
  if (std::fabs(x) < 1.0) {
    const double h = 0.5 * x;
    double c = 1.0;
    for (int i = 2; i <= n; ++i) c /= i;
    double sum = 0.0;
    for (int k = 0; k < 30; ++k) {
      const int p = 2 * k + n - 1;
      if (p != 0) {
        const double t = 0.25 * c * p * std::pow(h, p - 1);
        sum += t;
        if (std::fabs(t) <= 1e-17 * std::fabs(sum)) break;
      }
      c *= -1.0 / (static_cast<double>(k + 1) * (k + 1 + n));
    }
    return sum;
  }
  return bessel_j(n - 1, x) / x - (n + 1) * bessel_j(n, x) / (x * x);
}

double kernel(double d) {
  const double x = 2.0 * pi * std::fabs(d);
  if (x < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 8.0 + x2 * x2 / 192.0;
  }
  return 2.0 * boost::math::cyl_bessel_j(1, x, Policy()) / x;
}

double kernel_grad_factor(double d) {
  d = std::fabs(d);
  const double x = 2.0 * pi * d;
  if (d < 1e-6) {
    const double x2 = x * x;
    return 0.5 * pi * pi * (1.0 - x2 / 12.0 + x2 * x2 / 384.0);
  }
  return boost::math::cyl_bessel_j(2, x, Policy()) / (d * d);
}

namespace {

// J_k(X) for k up to where the tail is negligible, plus suffix sums of squares.
struct RadialSeeds {
  std::vector<double> j;
  std::vector<double> tail_sq;  // tail_sq[k] = sum_{i > k} J_i^2
};

RadialSeeds radial_seeds(int m_max, double R) {
  const double X = 2.0 * pi * R;
  const int top = miller_start(m_max + 2, X);
  RadialSeeds s;
  s.j = bessel_j_sequence(top, X);
  s.tail_sq.assign(s.j.size(), 0.0);
  for (int k = top - 1; k >= 0; --k) s.tail_sq[k] = s.tail_sq[k + 1] + s.j[k + 1] * s.j[k + 1];
  return s;
}

double sq_from_seeds(const RadialSeeds& s, int nu) {
  return (s.j[nu] * s.j[nu] + 2.0 * s.tail_sq[nu]) / (2.0 * nu);
}

double cross_from_seeds(const RadialSeeds& s, int mu, int nu, double X) {
  if (mu == nu) return sq_from_seeds(s, mu);
  const double a = X * (s.j[mu] * s.j[nu + 1] - s.j[mu + 1] * s.j[nu]) /
                   (static_cast<double>(mu) * mu - static_cast<double>(nu) * nu);
  return a + s.j[mu] * s.j[nu] / (mu + nu);
}

void check_radius(double R) {
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidArgument("radius must be positive");
}

}  // namespace

double radial_sq_integral(int m, double R) {
  check_order(m);
  check_radius(R);
  return sq_from_seeds(radial_seeds(m, R), m + 1);
}

double radial_cross_integral(int m, int mp, double R) {
  check_order(m);
  check_order(mp);
  check_radius(R);
  const auto s = radial_seeds(std::max(m, mp), R);
  return cross_from_seeds(s, m + 1, mp + 1, 2.0 * pi * R);
}

double radial_sq_integral_quadrature(int m, double R, double rel_tol) {
  return radial_cross_integral_quadrature(m, m, R, rel_tol);
}

double radial_cross_integral_quadrature(int m, int mp, double R, double rel_tol) {
  check_order(m);
  check_order(mp);
  check_radius(R);
  quad::QuadSpec spec;
  spec.rel_tol = rel_tol;
  spec.abs_tol = 1e-300;
  const auto f = [m, mp](double r) {
    const double x = 2.0 * pi * r;
    return 2.0 * pi * bessel_j(m + 1, x) * bessel_over_x(mp + 1, x);
  };
  const int pieces = std::max(1, static_cast<int>(std::ceil(4.0 * R)));
  return quad::integrate_radial(f, 0.0, R, spec, pieces).value_or_throw("radial integral");
}

RadialIntegralTable::RadialIntegralTable(int m_max, double R) : m_max_(m_max), R_(R) {
  check_order(m_max);
  check_radius(R);
  const auto s = radial_seeds(m_max, R);
  const double X = 2.0 * pi * R;
  const int n = m_max + 1;
  table_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int m = 0; m <= m_max; ++m) {
    for (int mp = m; mp <= m_max; ++mp) {
      const double v = cross_from_seeds(s, m + 1, mp + 1, X);
      table_[m * n + mp] = v;
      table_[mp * n + m] = v;
    }
  }
}

}  // namespace qloc::specfun
