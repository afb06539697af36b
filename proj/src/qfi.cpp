#include "qloc/qfi.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "qloc/error.hpp"
#include "qloc/specfun.hpp"

namespace qloc {

namespace {

using std::numbers::pi;
using cd = std::complex<double>;

RhoBElements rho_b_quadrature(const SourceDiskScene& s, const RhoBOptions& opts) {
  const double r0 = s.r0;
  const double area = pi * s.R * s.R;

  const quad::VecField f2 = [r0](double x, double y, std::span<double> out) {
    const double dx = x - r0, dy = y;
    const double d = std::hypot(dx, dy);
    const double k = specfun::kernel(d);
    const double g = specfun::kernel_grad_factor(d);
    out[0] = k * k;
    out[1] = k * g * dx;
    out[2] = k * g * dy;
    out[3] = g * g * dx * dx;
    out[4] = g * g * dy * dy;
  };
  const auto v2 = quad::integrate_disk(f2, 5, s.R, opts.spec2d, opts.exec).value_or_throw("rho_B elements");

  const quad::VecPairField f4 = [r0](double x, double y, double xp, double yp, std::span<double> out) {
    const double dx = x - r0, dy = y, dxp = xp - r0, dyp = yp;
    const double gg = specfun::kernel_grad_factor(std::hypot(dx, dy)) *
                      specfun::kernel_grad_factor(std::hypot(dxp, dyp)) *
                      specfun::kernel(std::hypot(x - xp, y - yp));
    out[0] = gg * dx * dxp;
    out[1] = gg * dy * dyp;
  };
  const auto v4 = quad::integrate_disk_pair(f4, 2, s.R, opts.spec4d, opts.exec).value_or_throw("rho_B^2 element");

  RhoBElements e;
  e.s0 = v2[0] / area;
  e.s1 = {2.0 * v2[1] / area, 2.0 * v2[2] / area};
  e.s2 = {4.0 * v2[3] / area, 4.0 * v2[4] / area};
  e.s3 = {4.0 * v4[0] / (area * area), 4.0 * v4[1] / (area * area)};
  return e;
}

// rho_B is block diagonal in n with the same radial block for every n of a
// given parity, so every element reduces to sums over (m, m').
RhoBElements rho_b_spectral(const SourceDiskScene& s) {
  const int M = static_cast<int>(std::ceil(2.0 * pi * s.R)) + 25;
  const specfun::RadialIntegralTable table(M, s.R);
  const double c = 2.0 / (pi * pi * s.R * s.R);
  Eigen::MatrixXd bg = Eigen::MatrixXd::Zero(M + 1, M + 1);
  for (int m = 0; m <= M; ++m)
    for (int mp = m % 2; mp <= M; mp += 2) bg(m, mp) = c * std::sqrt((m + 1.0) * (mp + 1.0)) * table(m, mp);

  const auto B = aperture_radial(M, s.r0);
  const auto dB = aperture_radial_deriv(M, s.r0);
  Eigen::VectorXd u(M + 1), w(M + 1);
  for (int m = 0; m <= M; ++m) {
    u(m) = 2.0 * std::sqrt(m + 1.0) * B[m];
    w(m) = 2.0 * std::sqrt(m + 1.0) * dB[m];
  }

  RhoBElements e;
  double s2t = 0.0;
  for (int m = 0; m <= M; ++m) {
    for (int mp = m % 2; mp <= M; mp += 2) {
      const double k = std::min(m, mp);
      const double count = k + 1.0;
      e.s0 += count * bg(m, mp) * u(m) * u(mp);
      e.s1[0] += count * bg(m, mp) * u(m) * w(mp);
      e.s2[0] += count * bg(m, mp) * w(m) * w(mp);
      s2t += k * (k + 1.0) * (k + 2.0) / 3.0 * bg(m, mp) * u(m) * u(mp);
    }
  }
  double s3r = 0.0, s3t = 0.0;
  for (int n = -M; n <= M; ++n) {
    const int an = std::abs(n);
    for (int m = an; m <= M; m += 2) {
      double ar = 0.0, at = 0.0;
      for (int mp = an; mp <= M; mp += 2) {
        ar += bg(m, mp) * w(mp);
        at += bg(m, mp) * u(mp);
      }
      s3r += ar * ar;
      s3t += static_cast<double>(n) * n * at * at;
    }
  }
  e.s3[0] = s3r;
  if (s.r0 >= 1e-9) {
    e.s2[1] = s2t / (s.r0 * s.r0);
    e.s3[1] = s3t / (s.r0 * s.r0);
  }
  return e;
}

SymMatrix2 diag(double a, double c) { return {a, 0.0, c, Frame::SourceAligned}; }

void check_order(int order) {
  if (order < 0 || order > 2) throw InvalidArgument("perturbative order must be 0, 1 or 2");
}

// The double sums shared by the source and hole expressions:
//   D1 = sum_ij a_i a_j Q_imu Q_jnu / (l_i + l_j)
//   D2 = sum_ij a_i^2 Q_jmu Q_jnu / (l_i + l_j)
struct DoubleSums {
  Eigen::Matrix2d d1 = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d d2 = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d qq = Eigen::Matrix2d::Zero();  // sum_i Q_imu Q_inu
};

DoubleSums double_sums(const std::vector<double>& lambda, const std::vector<double>& a, const Eigen::MatrixXd& Q,
                       std::size_t n) {
  DoubleSums s;
  // D1: t_mu(i) = sum_j a_j Q_jmu/(l_i + l_j), then D1 = sum_i a_i Q_i t(i)^T.
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector2d t = Eigen::Vector2d::Zero();
    Eigen::Matrix2d u = Eigen::Matrix2d::Zero();
    for (std::size_t j = 0; j < n; ++j) {
      const double inv = 1.0 / (lambda[i] + lambda[j]);
      const Eigen::Vector2d qj = Q.row(static_cast<Eigen::Index>(j)).transpose();
      t += a[j] * inv * qj;
      u += inv * qj * qj.transpose();
    }
    const Eigen::Vector2d qi = Q.row(static_cast<Eigen::Index>(i)).transpose();
    s.d1 += a[i] * qi * t.transpose();
    s.d2 += a[i] * a[i] * u;
    s.qq += qi * qi.transpose();
  }
  return s;
}

std::size_t state_count(const EigenSystem& es, const QfiOptions& opts) {
  if (es.n_retained() == 0) throw InvalidArgument("eigensystem has no retained states");
  return opts.max_states == 0 ? es.n_retained() : std::min(opts.max_states, es.n_retained());
}

SymMatrix2 to_sym(const Eigen::Matrix2d& m) { return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1), Frame::SourceAligned}; }

bool null_warning(const SymMatrix2& null_term, const SymMatrix2& H, double ratio) {
  return std::fabs(null_term.a11) > ratio * std::fabs(H.a11) || std::fabs(null_term.a22) > ratio * std::fabs(H.a22);
}

}  // namespace

RhoBElements rho_b_elements(const SourceDiskScene& scene, const RhoBOptions& opts) {
  scene.validate();
  require_positive_r0(scene.r0);
  return opts.route == RhoBRoute::Spectral ? rho_b_spectral(scene) : rho_b_quadrature(scene, opts);
}

PerturbativeTerms perturbative_terms(const RhoBElements& e) {
  const double p2 = pi * pi;
  PerturbativeTerms t;
  t.k0 = diag(4.0 * p2, 4.0 * p2);
  t.k1 = diag(-4.0 * (p2 * e.s0 + e.s2[0]), -4.0 * (p2 * e.s0 + e.s2[1]));
  // Every element is real for the clear circular aperture.
  t.imag_cross = 0.0;
  const auto k2 = [&](int mu) { return 4.0 * p2 * e.s0 * e.s0 + 8.0 * e.s0 * e.s2[mu] + 4.0 * e.s3[mu] - 4.0 * t.imag_cross; };
  t.k2 = diag(k2(0), k2(1));
  return t;
}

SymMatrix2 qfi_perturbative_source(const SourceDiskScene& scene, int order, const RhoBElements& e) {
  check_order(order);
  scene.validate();
  const auto t = perturbative_terms(e);
  const double a = scene.alpha();
  double h11 = t.k0.a11, h22 = t.k0.a22;
  if (order >= 1) {
    h11 += a * t.k1.a11;
    h22 += a * t.k1.a22;
  }
  if (order >= 2) {
    h11 += a * a * t.k2.a11;
    h22 += a * a * t.k2.a22;
  }
  return diag((1.0 - scene.b) * h11, (1.0 - scene.b) * h22);
}

SymMatrix2 qfi_perturbative_source(const SourceDiskScene& scene, int order, const RhoBOptions& opts) {
  check_order(order);
  scene.validate();
  if (order == 0 || scene.b == 0.0) {
    require_positive_r0(scene.r0);
    return qfi_perturbative_source(scene, 0, RhoBElements{});
  }
  return qfi_perturbative_source(scene, order, rho_b_elements(scene, opts));
}

QfiResult qfi_exact_source(const EigenSystem& es, const SourceDiskScene& scene, const QfiOptions& opts) {
  scene.validate();
  require_positive_r0(scene.r0);
  if (std::fabs(es.R - scene.R) > 1e-12 || std::fabs(es.b - scene.b) > 1e-12 || std::fabs(es.r0 - scene.r0) > 1e-12)
    throw InvalidArgument("eigensystem was solved for a different scene");
  const std::size_t n = state_count(es, opts);
  const auto a = state_overlaps(es, scene.r0);
  const Eigen::MatrixXd Q = q_matrix(es, scene.r0);
  const DoubleSums s = double_sums(es.eigenvalues, a, Q, n);

  const double ob = 1.0 - scene.b;
  const Eigen::Matrix2d null_inner = pi * pi * Eigen::Matrix2d::Identity() - s.qq;
  const Eigen::Matrix2d H = 4.0 * ob * ob * (null_inner / ob + s.d1 + s.d2);

  QfiResult r;
  r.H = to_sym(H);
  r.null_term = to_sym(4.0 * ob * null_inner);
  // At b = 0 the state is pure and the null-space term is the whole answer.
  r.null_warning = scene.b > 0.0 && null_warning(r.null_term, r.H, opts.null_warn_ratio);
  r.eigensum = es.eigensum;
  r.m_max = es.m_max;
  r.n_states = n;
  return r;
}

QfiResult qfi_hole(const EigenSystem& disk, const HoleDiskScene& scene, const QfiOptions& opts) {
  scene.validate();
  require_positive_r0(scene.r0);
  if (std::fabs(disk.R - scene.R) > 1e-12 || disk.b != 1.0)
    throw InvalidArgument("hole QFI needs the pure-disk eigensystem of the same radius");
  const double eps = scene.epsilon();
  if (eps > 0.1) throw InvalidArgument("hole area ratio must not exceed 0.1");
  const std::size_t n = state_count(disk, opts);
  const auto a = state_overlaps(disk, scene.r0);
  const Eigen::MatrixXd Q = q_matrix(disk, scene.r0);
  const DoubleSums s = double_sums(disk.eigenvalues, a, Q, n);

  const Eigen::Matrix2d null_inner = pi * pi * Eigen::Matrix2d::Identity() - s.qq;
  // The pair sum carries 4 eps^2: expanding 2 sum |<i|d rho|j>|^2/(l_i + l_j) with
  // d rho = -eps d|K0><K0| doubles the cross terms. This is also the b -> 1 limit
  // of the source QFI at 1 - b = eps.
  const Eigen::Matrix2d H = 2.0 * eps * null_inner + 4.0 * eps * eps * (s.d1.transpose() + s.d2);

  QfiResult r;
  r.H = to_sym(H);
  r.null_term = to_sym(2.0 * eps * null_inner);
  r.null_warning = null_warning(r.null_term, r.H, opts.null_warn_ratio);
  r.eigensum = disk.eigensum;
  r.m_max = disk.m_max;
  r.n_states = n;
  return r;
}

SymMatrix2 qfi_exact_source_generic(const SourceDiskScene& scene, Frame frame, const EigenOptions& opts) {
  scene.validate();
  require_positive_r0(scene.r0);
  const int M = opts.m_max > 0 ? opts.m_max : static_cast<int>(std::ceil(2.0 * pi * scene.R)) + 20;
  const auto idx = zernike_indices(M);
  const auto dim = static_cast<Eigen::Index>(idx.size());
  const auto B = aperture_radial(M, scene.r0);
  const auto dB = aperture_radial_deriv(M, scene.r0);
  const double c0 = std::cos(scene.phi0), s0 = std::sin(scene.phi0);

  Eigen::VectorXcd u(dim), dx(dim), dy(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const auto [m, n] = idx[k];
    const cd ph = std::polar(1.0, -n * scene.phi0);
    const double amp = 2.0 * std::sqrt(m + 1.0);
    u(k) = amp * B[m] * ph;
    const cd dr = amp * dB[m] * ph;
    const cd dt = cd(0.0, -n / scene.r0) * u(k);
    dx(k) = c0 * dr - s0 * dt;
    dy(k) = s0 * dr + c0 * dt;
  }

  Eigen::MatrixXcd rho = (1.0 - scene.b) * u * u.adjoint();
  if (scene.b > 0.0) {
    const specfun::RadialIntegralTable table(M, scene.R);
    const double c = 2.0 * scene.b / (pi * pi * scene.R * scene.R);
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j < dim; ++j)
        if (idx[i].n == idx[j].n) rho(i, j) += c * std::sqrt((idx[i].m + 1.0) * (idx[j].m + 1.0)) * table(idx[i].m, idx[j].m);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> se(rho);
  if (se.info() != Eigen::Success) throw Error("Hermitian eigen-decomposition failed");
  const Eigen::VectorXd& lam = se.eigenvalues();
  const Eigen::MatrixXcd& V = se.eigenvectors();
  const Eigen::VectorXcd q = V.adjoint() * u;
  const Eigen::VectorXcd px = V.adjoint() * dx;
  const Eigen::VectorXcd py = V.adjoint() * dy;

  // <i|d rho|j> = (1-b)(p_i conj(q_j) + q_i conj(p_j))
  const double ob = 1.0 - scene.b;
  double hxx = 0.0, hxy = 0.0, hyy = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (std::max(lam(i), lam(j)) < opts.lambda_floor) continue;
      const cd ax = ob * (px(i) * std::conj(q(j)) + q(i) * std::conj(px(j)));
      const cd ay = ob * (py(i) * std::conj(q(j)) + q(i) * std::conj(py(j)));
      const double w = 2.0 / (lam(i) + lam(j));
      hxx += w * std::norm(ax);
      hyy += w * std::norm(ay);
      hxy += w * std::real(ax * std::conj(ay));
    }
  }
  SymMatrix2 lab{hxx, hxy, hyy, Frame::SourceAligned};
  if (frame == Frame::Lab) {
    lab.frame = Frame::Lab;
    return lab;
  }
  SymMatrix2 aligned = rotate_to_lab(lab, -scene.phi0);
  aligned.frame = Frame::SourceAligned;
  return aligned;
}

}  // namespace qloc
