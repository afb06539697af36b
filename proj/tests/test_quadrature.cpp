#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qloc/error.hpp"
#include "qloc/fisher.hpp"
#include "qloc/quadrature.hpp"
#include "qloc/specfun.hpp"

using namespace qloc;
using namespace qloc::quad;
using std::numbers::pi;

namespace {

QuadSpec tight(double rel = 1e-11) {
  QuadSpec s;
  s.rel_tol = rel;
  return s;
}

}  // namespace

TEST(QuadSpec, Validation) {
  QuadSpec s;
  s.rel_tol = -1;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = {};
  s.max_evals = 0;
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(Radial, Basics) {
  EXPECT_NEAR(integrate_radial([](double) { return 1.0; }, 0, 1, tight()).value, 1.0, 1e-15);
  EXPECT_NEAR(integrate_radial([](double x) { return std::sin(x); }, 0, pi, tight()).value, 2.0, 1e-12);
  const double ref = specfun::radial_sq_integral(0, 1.0);
  auto f = [](double r) { double j = specfun::bessel_j(1, 2 * pi * r); return j * j / r; };
  EXPECT_NEAR(integrate_radial(f, 0, 1, tight(1e-12)).value, ref, 1e-12);
}

TEST(Cubature, PolynomialIsExactIn2D) {
  auto f = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0] * x[1] + x[1] * x[1] * x[1]; };
  const auto r = cubature(f, 1, grid_boxes({0, 0}, {1, 2}, {1, 1}), tight());
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value[0], 2.0 / 3.0 + 4.0, 1e-13);
}

TEST(Cubature, GaussianIn4D) {
  auto f = [](std::span<const double> x, std::span<double> out) {
    double s = 0;
    for (double v : x) s += v * v;
    out[0] = std::exp(-s);
  };
  const auto r = cubature(f, 1, grid_boxes({-1, -1, -1, -1}, {1, 1, 1, 1}, {1, 1, 1, 1}), tight(1e-8));
  const double one = std::sqrt(pi) * std::erf(1.0);
  EXPECT_NEAR(r.value[0], std::pow(one, 4), 1e-7);
}

TEST(Cubature, NonConvergenceIsReported) {
  auto f = [](std::span<const double> x, std::span<double> out) { out[0] = std::sin(200 * x[0]) * std::cos(150 * x[1]); };
  QuadSpec s = tight(1e-12);
  s.max_evals = 2000;
  const auto r = cubature(f, 1, grid_boxes({0, 0}, {1, 1}, {1, 1}), s);
  EXPECT_FALSE(r.converged);
  EXPECT_THROW(r.value_or_throw("test"), NonConvergence);
}

TEST(Cubature, SerialAndParallelAgreeBitwise) {
  auto f = [](double x, double y, std::span<double> out) {
    const double k = specfun::kernel(std::hypot(x - 0.3, y));
    out[0] = k * k;
    out[1] = x * k;
  };
  const auto a = integrate_disk(f, 2, 1.7, tight(1e-9), Execution::Serial);
  const auto b = integrate_disk(f, 2, 1.7, tight(1e-9), Execution::Parallel);
  ASSERT_EQ(a.value.size(), b.value.size());
  for (std::size_t k = 0; k < a.value.size(); ++k) {
    EXPECT_EQ(a.value[k], b.value[k]);
    EXPECT_EQ(a.error[k], b.error[k]);
  }
  EXPECT_EQ(a.evals, b.evals);
}

TEST(Disk, TrivialIntegrands) {
  EXPECT_NEAR(integrate_disk([](double, double) { return 1.0; }, 1.0, tight()).value, pi, 1e-10);
  EXPECT_NEAR(integrate_disk([](double x, double) { return x; }, 1.0, tight()).value, 0.0, 1e-10);
  EXPECT_NEAR(integrate_disk([](double x, double y) { return x * x + y * y; }, 2.0, tight()).value, pi * 8.0, 1e-9);
}

TEST(Disk, KernelSquaredMatchesTensorGridAndRadialOracle) {
  const double R = 2.0;
  const double got = integrate_disk([](double x, double y) { double k = specfun::kernel(std::hypot(x, y)); return k * k; },
                                    R, tight(1e-10)).value;
  // Radially symmetric: 2 pi int_0^R K(r)^2 r dr.
  const double radial =
      2 * pi * oracle::gk([](double r) { double k = specfun::kernel(r); return k * k * r; }, 0.0, R, 8);
  EXPECT_NEAR(got, radial, 1e-10);
  // Midpoint tensor grid at 2048^2 over the bounding square; boundary error ~ h.
  const int n = 2048;
  const double h = 2 * R / n;
  double grid = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = -R + (i + 0.5) * h;
    for (int j = 0; j < n; ++j) {
      const double y = -R + (j + 0.5) * h;
      const double r = std::hypot(x, y);
      if (r <= R) {
        const double k = specfun::kernel(r);
        grid += k * k;
      }
    }
  }
  grid *= h * h;
  EXPECT_NEAR(got, grid, 1e-4);
}

TEST(DiskPair, TrivialIntegrands) {
  QuadSpec s = tight(1e-9);
  EXPECT_NEAR(integrate_disk_pair([](double, double, double, double) { return 1.0; }, 1.0, s).value, pi * pi, 1e-8);
  EXPECT_NEAR(integrate_disk_pair([](double x, double, double xp, double) { return x * xp; }, 1.0, s).value, 0.0, 1e-8);
}

TEST(DiskPair, KernelMatchesNestedOracle) {
  QuadSpec s;
  s.rel_tol = 1e-7;
  const double got =
      integrate_disk_pair([](double x, double y, double xp, double yp) { return specfun::kernel(std::hypot(x - xp, y - yp)); },
                          1.0, s).value;
  // The inner disk integral depends only on |r|; nested Gauss-Kronrod in polar form.
  auto inner = [](double rho) {
    return oracle::gk([rho](double rp) {
      return rp * oracle::gk([rho, rp](double t) {
        return specfun::kernel(std::sqrt(rho * rho + rp * rp - 2 * rho * rp * std::cos(t)));
      }, 0.0, 2 * pi, 2, 1e-11);
    }, 0.0, 1.0, 2, 1e-11);
  };
  const double ref = 2 * pi * oracle::gk([&](double rho) { return rho * inner(rho); }, 0.0, 1.0, 2, 1e-10);
  EXPECT_NEAR(got, ref, 1e-6 * std::fabs(ref));
}

TEST(Plane, PsfNormalization) {
  auto h = [](double x, double y) { return psf(std::hypot(x, y)); };
  // Encircled energy of the Airy pattern: 1 - J0^2 - J1^2 at 2 pi r_cut. The
  // missing tail is about 1/(pi^2 r_cut), 3.4e-3 at r_cut = 30.
  const double x = 2 * pi * 30.0;
  const double ee = 1.0 - std::pow(specfun::bessel_j(0, x), 2) - std::pow(specfun::bessel_j(1, x), 2);
  EXPECT_NEAR(integrate_plane(h, 30.0, tight(1e-10)).value, ee, 1e-9);
  EXPECT_NEAR(integrate_plane(h, 120.0, tight(1e-9)).value, 1.0, 1e-3);
  EXPECT_EQ(integrate_plane([](double, double) { return 0.0; }, 5.0, tight()).value, 0.0);
}
