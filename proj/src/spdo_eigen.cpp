#include "qloc/spdo_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qloc/error.hpp"
#include "qloc/specfun.hpp"

namespace qloc {

namespace {

using std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);

}  // namespace

std::vector<double> aperture_radial(int m_max, double r) {
  std::vector<double> out(static_cast<std::size_t>(m_max) + 1);
  const double x = 2.0 * pi * r;
  if (x < 1.0) {
    for (int m = 0; m <= m_max; ++m) out[m] = specfun::bessel_over_x(m + 1, x);
  } else {
    const auto j = specfun::bessel_j_sequence(m_max + 1, x);
    for (int m = 0; m <= m_max; ++m) out[m] = j[m + 1] / x;
  }
  return out;
}

std::vector<double> aperture_radial_deriv(int m_max, double r) {
  std::vector<double> out(static_cast<std::size_t>(m_max) + 1);
  const double x = 2.0 * pi * r;
  if (x < 1.0) {
    for (int m = 0; m <= m_max; ++m) out[m] = 2.0 * pi * specfun::bessel_over_x_deriv(m + 1, x);
  } else {
    const auto j = specfun::bessel_j_sequence(m_max + 1, x);
    for (int m = 0; m <= m_max; ++m) out[m] = 2.0 * pi * (j[m] / x - (m + 2) * j[m + 1] / (x * x));
  }
  return out;
}

namespace {

double weight_of(int n) { return n == 0 ? 1.0 : kSqrt2; }

void parity_bases(int m_max, std::vector<BasisIndex>& even, std::vector<BasisIndex>& odd) {
  even.clear();
  odd.clear();
  for (int m = 0; m <= m_max; ++m) {
    for (int n = m % 2; n <= m; n += 2) {
      even.push_back({m, n});
      if (n > 0) odd.push_back({m, n});
    }
  }
}

struct Blocks {
  Eigen::MatrixXd even;
  Eigen::MatrixXd odd;
};

// Background prefactor (2b/(pi^2 R^2)) sqrt((m+1)(m'+1)) I_{mm'} and source
// vector s_m = sqrt((1-b)/pi^2) sqrt(m+1) J_{m+1}(2 pi r0)/r0.
struct Ingredients {
  Eigen::MatrixXd bg;
  Eigen::VectorXd src;
};

Ingredients ingredients(const SourceDiskScene& s, int m_max) {
  Ingredients in;
  const int n = m_max + 1;
  in.bg = Eigen::MatrixXd::Zero(n, n);
  if (s.b > 0.0) {
    const specfun::RadialIntegralTable table(m_max, s.R);
    const double c = 2.0 * s.b / (pi * pi * s.R * s.R);
    for (int m = 0; m < n; ++m) {
      for (int mp = m % 2; mp < n; mp += 2) {
        in.bg(m, mp) = c * std::sqrt((m + 1.0) * (mp + 1.0)) * table(m, mp);
      }
    }
  }
  in.src = Eigen::VectorXd::Zero(n);
  if (s.b < 1.0) {
    const double amp = std::sqrt(1.0 - s.b) / pi;
    if (s.r0 < 1e-9) {
      in.src(0) = amp * pi;
    } else {
      const auto B = aperture_radial(m_max, s.r0);
      for (int m = 0; m < n; ++m) in.src(m) = amp * std::sqrt(m + 1.0) * 2.0 * pi * B[m];
    }
  }
  return in;
}

Blocks build_blocks(const SourceDiskScene& s, int m_max, const std::vector<BasisIndex>& even,
                    const std::vector<BasisIndex>& odd) {
  const Ingredients in = ingredients(s, m_max);
  Blocks out;
  const auto ne = static_cast<Eigen::Index>(even.size());
  const auto no = static_cast<Eigen::Index>(odd.size());
  out.even.resize(ne, ne);
  out.odd.resize(no, no);
  for (Eigen::Index i = 0; i < ne; ++i) {
    const auto [m, n] = even[i];
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto [mp, np] = even[j];
      double v = weight_of(n) * weight_of(np) * in.src(m) * in.src(mp);
      if (n == np) v += in.bg(m, mp);
      out.even(i, j) = v;
      out.even(j, i) = v;
    }
  }
  for (Eigen::Index i = 0; i < no; ++i) {
    const auto [m, n] = odd[i];
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto [mp, np] = odd[j];
      const double v = n == np ? in.bg(m, mp) : 0.0;
      out.odd(i, j) = v;
      out.odd(j, i) = v;
    }
  }
  return out;
}

struct Candidate {
  double lambda;
  Parity parity;
  Eigen::Index col;
};

EigenSystem solve_at(const SourceDiskScene& s, int m_max, const EigenOptions& opts) {
  EigenSystem es;
  es.R = s.R;
  es.b = s.b;
  es.r0 = s.r0;
  es.phi0 = s.phi0;
  es.m_max = m_max;
  es.lambda_floor = opts.lambda_floor;
  es.dimension = static_cast<std::size_t>(m_max + 1) * (m_max + 2) / 2;
  parity_bases(m_max, es.even_basis, es.odd_basis);
  const Blocks blocks = build_blocks(s, m_max, es.even_basis, es.odd_basis);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(blocks.even);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> so(blocks.odd);
  if (se.info() != Eigen::Success || so.info() != Eigen::Success)
    throw Error("symmetric eigen-decomposition failed");

  std::vector<Candidate> kept;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < se.eigenvalues().size(); ++k) {
    const double l = se.eigenvalues()(k);
    sum += l;
    if (l >= opts.lambda_floor) kept.push_back({l, Parity::Even, k});
  }
  for (Eigen::Index k = 0; k < so.eigenvalues().size(); ++k) {
    const double l = so.eigenvalues()(k);
    sum += l;
    if (l >= opts.lambda_floor) kept.push_back({l, Parity::Odd, k});
  }
  es.eigensum = sum;

  std::stable_sort(kept.begin(), kept.end(),
                   [](const Candidate& a, const Candidate& b) { return a.lambda > b.lambda; });
  // Degenerate even/odd pairs: even first.
  for (std::size_t k = 0; k + 1 < kept.size(); ++k) {
    if (kept[k].parity == Parity::Odd && kept[k + 1].parity == Parity::Even &&
        kept[k].lambda - kept[k + 1].lambda <= 1e-10 * kept[k].lambda) {
      std::swap(kept[k], kept[k + 1]);
    }
  }

  Eigen::Index n_even = 0, n_odd = 0;
  for (const auto& c : kept) (c.parity == Parity::Even ? n_even : n_odd)++;
  es.even_vectors.resize(blocks.even.rows(), n_even);
  es.odd_vectors.resize(blocks.odd.rows(), n_odd);
  Eigen::Index ie = 0, io = 0;
  for (const auto& c : kept) {
    es.eigenvalues.push_back(c.lambda);
    es.parity.push_back(c.parity);
    Eigen::VectorXd v = c.parity == Parity::Even ? Eigen::VectorXd(se.eigenvectors().col(c.col))
                                                 : Eigen::VectorXd(so.eigenvectors().col(c.col));
    v.normalize();
    // Fix the sign so the largest component is positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    if (c.parity == Parity::Even) {
      es.even_vectors.col(ie) = v;
      es.column.push_back(static_cast<std::size_t>(ie++));
    } else {
      es.odd_vectors.col(io) = v;
      es.column.push_back(static_cast<std::size_t>(io++));
    }
  }
  return es;
}

EigenSystem solve_escalating(const SourceDiskScene& s, const EigenOptions& opts) {
  if (opts.m_max_step < 1 || opts.m_max_limit < 1) throw InvalidArgument("invalid m_max escalation settings");
  if (!(opts.lambda_floor > 0.0)) throw InvalidArgument("lambda_floor must be positive");
  const int m_min = static_cast<int>(std::ceil(2.0 * pi * s.R));
  int m = opts.m_max > 0 ? opts.m_max : m_min + 20;
  if (m < m_min) throw InvalidArgument("m_max must be at least ceil(2 pi R)");
  if (m > opts.m_max_limit) m = std::max(m_min, opts.m_max_limit);
  for (;;) {
    EigenSystem es = solve_at(s, m, opts);
    const double dev = std::fabs(es.eigensum - 1.0);
    if (dev <= opts.eigensum_tol) return es;
    if (m + opts.m_max_step <= opts.m_max_limit) {
      m += opts.m_max_step;
      continue;
    }
    if (dev > opts.eigensum_hard_tol) {
      throw TruncationInadequate("eigenvalue sum deviates from 1 by " + std::to_string(dev) +
                                 " at m_max = " + std::to_string(m));
    }
    return es;
  }
}

// Even and odd basis function values at (r, phi), without the 2/lambda factor:
// even_k = w_n sqrt(m+1) B_m cos(n d), odd_k = sqrt(2) sqrt(m+1) B_m sin(n d).
void basis_values(const EigenSystem& es, double r, double dphi, Eigen::VectorXd& ev, Eigen::VectorXd& od) {
  const auto B = aperture_radial(es.m_max, r);
  std::vector<double> c(es.m_max + 1), s(es.m_max + 1);
  for (int n = 0; n <= es.m_max; ++n) {
    c[n] = std::cos(n * dphi);
    s[n] = std::sin(n * dphi);
  }
  ev.resize(static_cast<Eigen::Index>(es.even_basis.size()));
  od.resize(static_cast<Eigen::Index>(es.odd_basis.size()));
  for (std::size_t k = 0; k < es.even_basis.size(); ++k) {
    const auto [m, n] = es.even_basis[k];
    ev(k) = weight_of(n) * std::sqrt(m + 1.0) * B[m] * c[n];
  }
  for (std::size_t k = 0; k < es.odd_basis.size(); ++k) {
    const auto [m, n] = es.odd_basis[k];
    od(k) = kSqrt2 * std::sqrt(m + 1.0) * B[m] * s[n];
  }
}

void check_state(const EigenSystem& es, std::size_t i) {
  if (i >= es.n_retained()) throw InvalidArgument("state index out of range");
}

}  // namespace

const char* parity_name(Parity p) { return p == Parity::Even ? "even" : "odd"; }

std::vector<BasisIndex> zernike_indices(int m_max) {
  if (m_max < 0) throw InvalidArgument("m_max must be non-negative");
  std::vector<BasisIndex> out;
  for (int m = 0; m <= m_max; ++m)
    for (int n = -m; n <= m; n += 2) out.push_back({m, n});
  return out;
}

std::size_t zernike_index_of(int m, int n) {
  if (m < 0 || std::abs(n) > m || ((m - n) & 1)) throw InvalidArgument("invalid aperture index");
  return static_cast<std::size_t>(m) * (m + 1) / 2 + static_cast<std::size_t>((n + m) / 2);
}

Eigen::MatrixXd build_m_matrix(const SourceDiskScene& scene, int m_max) {
  scene.validate();
  if (m_max < static_cast<int>(std::ceil(2.0 * pi * scene.R)))
    throw InvalidArgument("m_max must be at least ceil(2 pi R)");
  const Ingredients in = ingredients(scene, m_max);
  const auto idx = zernike_indices(m_max);
  const auto dim = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd M(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double v = in.src(idx[i].m) * in.src(idx[j].m);
      if (idx[i].n == idx[j].n) v += in.bg(idx[i].m, idx[j].m);
      M(i, j) = v;
      M(j, i) = v;
    }
  }
  return M;
}

Eigen::VectorXd EigenSystem::unit_vector(std::size_t i) const {
  if (i >= n_retained()) throw InvalidArgument("state index out of range");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension));
  const auto col = static_cast<Eigen::Index>(column[i]);
  if (parity[i] == Parity::Even) {
    for (std::size_t k = 0; k < even_basis.size(); ++k) {
      const auto [m, n] = even_basis[k];
      const double v = even_vectors(static_cast<Eigen::Index>(k), col);
      if (n == 0) {
        full(zernike_index_of(m, 0)) = v;
      } else {
        full(zernike_index_of(m, n)) = v / kSqrt2;
        full(zernike_index_of(m, -n)) = v / kSqrt2;
      }
    }
  } else {
    for (std::size_t k = 0; k < odd_basis.size(); ++k) {
      const auto [m, n] = odd_basis[k];
      const double v = odd_vectors(static_cast<Eigen::Index>(k), col);
      full(zernike_index_of(m, n)) = v / kSqrt2;
      full(zernike_index_of(m, -n)) = -v / kSqrt2;
    }
  }
  return full;
}

double EigenSystem::coefficient(std::size_t i, int m, int n) const {
  if (m > m_max) return 0.0;
  return 2.0 * unit_vector(i)(zernike_index_of(m, n)) / eigenvalues[i];
}

EigenSystem solve_eigensystem(const SourceDiskScene& scene, const EigenOptions& opts) {
  scene.validate();
  return solve_escalating(scene, opts);
}

EigenSystem disk_eigensystem(double R, const EigenOptions& opts) {
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidArgument("R must be positive");
  SourceDiskScene s{R, 1.0, 0.0, 0.0};
  return solve_escalating(s, opts);
}

double eigenfunction_value(const EigenSystem& es, std::size_t i, double r, double phi) {
  check_state(es, i);
  if (r < 0.0) throw InvalidArgument("r must be non-negative");
  Eigen::VectorXd ev, od;
  basis_values(es, r, phi - es.phi0, ev, od);
  const auto col = static_cast<Eigen::Index>(es.column[i]);
  const double lc = es.parity[i] == Parity::Even ? es.even_vectors.col(col).dot(ev)
                                                 : es.odd_vectors.col(col).dot(od);
  return 2.0 * lc / es.eigenvalues[i];
}

std::vector<double> state_overlaps(const EigenSystem& es, double r) {
  Eigen::VectorXd ev, od;
  basis_values(es, r, 0.0, ev, od);
  const Eigen::VectorXd ae = 2.0 * (es.even_vectors.transpose() * ev);
  std::vector<double> out(es.n_retained(), 0.0);
  for (std::size_t i = 0; i < es.n_retained(); ++i) {
    if (es.parity[i] == Parity::Even) out[i] = ae(static_cast<Eigen::Index>(es.column[i]));
  }
  return out;
}

Eigen::MatrixXd q_matrix(const EigenSystem& es, double r) {
  require_positive_r0(r);
  const auto B = aperture_radial(es.m_max, r);
  const auto dB = aperture_radial_deriv(es.m_max, r);
  Eigen::VectorXd ge(static_cast<Eigen::Index>(es.even_basis.size()));
  Eigen::VectorXd go(static_cast<Eigen::Index>(es.odd_basis.size()));
  for (std::size_t k = 0; k < es.even_basis.size(); ++k) {
    const auto [m, n] = es.even_basis[k];
    ge(k) = 2.0 * weight_of(n) * std::sqrt(m + 1.0) * dB[m];
  }
  for (std::size_t k = 0; k < es.odd_basis.size(); ++k) {
    const auto [m, n] = es.odd_basis[k];
    go(k) = 2.0 * kSqrt2 * n * std::sqrt(m + 1.0) * B[m] / r;
  }
  const Eigen::VectorXd qe = es.even_vectors.transpose() * ge;
  const Eigen::VectorXd qo = es.odd_vectors.transpose() * go;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(es.n_retained()), 2);
  for (std::size_t i = 0; i < es.n_retained(); ++i) {
    const auto col = static_cast<Eigen::Index>(es.column[i]);
    if (es.parity[i] == Parity::Even)
      Q(i, 0) = qe(col);
    else
      Q(i, 1) = qo(col);
  }
  return Q;
}

Eigen::MatrixXd q_matrix_quadrature(const EigenSystem& es, double r0, double phi0, double weight,
                                    std::size_t n_states, const quad::QuadSpec& spec,
                                    quad::Execution exec) {
  require_positive_r0(r0);
  n_states = std::min(n_states, es.n_retained());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_states), 2);
  if (n_states == 0 || weight == 0.0) return Q;

  const double x0 = r0 * std::cos(phi0), y0 = r0 * std::sin(phi0);
  const double er_x = std::cos(phi0), er_y = std::sin(phi0);
  const quad::VecField f = [&](double x, double y, std::span<double> out) {
    const double dx = x - x0, dy = y - y0;
    const double g = specfun::kernel_grad_factor(std::hypot(dx, dy));
    const double pr = dx * er_x + dy * er_y;
    const double pt = -dx * er_y + dy * er_x;
    Eigen::VectorXd ev, od;
    basis_values(es, std::hypot(x, y), std::atan2(y, x) - phi0, ev, od);
    for (std::size_t i = 0; i < n_states; ++i) {
      const auto col = static_cast<Eigen::Index>(es.column[i]);
      // lambda_i C_i(r): bounded even when lambda_i is tiny
      const double lc = 2.0 * (es.parity[i] == Parity::Even ? es.even_vectors.col(col).dot(ev)
                                                            : es.odd_vectors.col(col).dot(od));
      out[2 * i] = lc * g * pr;
      out[2 * i + 1] = lc * g * pt;
    }
  };
  const auto res = quad::integrate_disk(f, 2 * n_states, es.R, spec, exec);
  const auto& v = res.value_or_throw("Q matrix elements");
  const double pref = 2.0 * weight / (pi * es.R * es.R);
  for (std::size_t i = 0; i < n_states; ++i) {
    Q(i, 0) = pref * v[2 * i] / es.eigenvalues[i];
    Q(i, 1) = pref * v[2 * i + 1] / es.eigenvalues[i];
  }
  return Q;
}

namespace {

double q_element_impl(const EigenSystem& es, std::size_t i, Axis mu, double r0, double phi0,
                      double weight, const quad::QuadSpec& spec) {
  check_state(es, i);
  require_positive_r0(r0);
  if (weight == 0.0) return 0.0;
  const double pref = 2.0 * weight / (pi * es.R * es.R);
  quad::QuadSpec s = spec;
  // Absolute floor so selection-rule zeros terminate: about rel_tol/10 in Q.
  s.abs_tol = std::max(spec.abs_tol, 0.1 * spec.rel_tol * es.eigenvalues[i] / pref);
  const double x0 = r0 * std::cos(phi0), y0 = r0 * std::sin(phi0);
  const double ux = mu == Axis::Radial ? std::cos(phi0) : -std::sin(phi0);
  const double uy = mu == Axis::Radial ? std::sin(phi0) : std::cos(phi0);
  const auto col = static_cast<Eigen::Index>(es.column[i]);
  const bool even = es.parity[i] == Parity::Even;
  const quad::Field f = [&](double x, double y) {
    const double dx = x - x0, dy = y - y0;
    Eigen::VectorXd ev, od;
    basis_values(es, std::hypot(x, y), std::atan2(y, x) - phi0, ev, od);
    const double lc = 2.0 * (even ? es.even_vectors.col(col).dot(ev) : es.odd_vectors.col(col).dot(od));
    return lc * specfun::kernel_grad_factor(std::hypot(dx, dy)) * (dx * ux + dy * uy);
  };
  const double v = quad::integrate_disk(f, es.R, s).value_or_throw("Q matrix element");
  return pref * v / es.eigenvalues[i];
}

}  // namespace

double q_matrix_element(const EigenSystem& es, std::size_t i, Axis mu, const SourceDiskScene& scene,
                        const quad::QuadSpec& spec) {
  scene.validate();
  return q_element_impl(es, i, mu, scene.r0, scene.phi0, scene.b, spec);
}

double q_matrix_element(const EigenSystem& es, std::size_t i, Axis mu, const HoleDiskScene& scene,
                        const quad::QuadSpec& spec) {
  scene.validate();
  return q_element_impl(es, i, mu, scene.r0, scene.phi0, 1.0, spec);
}

}  // namespace qloc
