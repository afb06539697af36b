#include "qloc/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <tuple>

#include "qloc/error.hpp"
#include "qloc/spdo_eigen.hpp"
#include "qloc/specfun.hpp"

namespace qloc {

namespace {

using std::numbers::pi;

// Angular weight of a real mode pair and its phi-derivative.
struct Angular {
  double a;
  double da;
};

Angular angular(int m, int sigma, double phi) {
  if (m == 0) return {1.0, 0.0};
  const double c = std::cos(m * phi), s = std::sin(m * phi);
  if (sigma > 0) return {2.0 * c * c, -4.0 * m * c * s};
  return {2.0 * s * s, 4.0 * m * c * s};
}

void check_sigma(int m, int sigma) {
  if (sigma != 1 && sigma != -1) throw InvalidArgument("sigma must be +1 or -1");
  if (m == 0 && sigma != 1) throw InvalidArgument("m = 0 modes carry sigma = +1 only");
}

// Kahan-compensated accumulator.
struct Sum {
  double s = 0.0, c = 0.0;
  void add(double v) {
    const double y = v - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

}  // namespace

double ProbabilitySet::total() const {
  Sum s;
  for (const auto& m : modes) s.add(m.p);
  s.add(unobserved.p);
  return s.s;
}

std::string basis_name(const ModeBasis& b) {
  switch (b.index()) {
    case 0: return "zernike";
    case 1: return "fb";
    default: return "pps";
  }
}

// ---- Zernike ----

namespace {

ModeProbability zernike_point(const EmissionMixture& mix, int p, int m, int sigma, double B,
                              double dB) {
  const Angular ang = angular(m, sigma, mix.phi0);
  const double amp = 4.0 * (p + 1) * mix.point_weight;
  ModeProbability out;
  out.p = amp * B * B * ang.a;
  out.d_r = 2.0 * amp * B * dB * ang.a;
  out.d_t = mix.r0 < 1e-9 ? 0.0 : amp * B * B * ang.da / mix.r0;
  return out;
}

double zernike_disk(double R, int p, double Ipp) { return 2.0 * (p + 1) / (pi * pi * R * R) * Ipp; }

void check_zernike(int p, int m) {
  if (p < 0 || m < 0 || m > p || (p - m) % 2 != 0) throw InvalidArgument("invalid Zernike index");
}

}  // namespace

ModeProbability zernike_probability(const EmissionMixture& mix, int p, int m, int sigma) {
  check_zernike(p, m);
  check_sigma(m, sigma);
  const auto B = aperture_radial(p, mix.r0);
  const auto dB = aperture_radial_deriv(p, mix.r0);
  ModeProbability out = zernike_point(mix, p, m, sigma, B[p], dB[p]);
  if (mix.disk_weight != 0.0)
    out.p += mix.disk_weight * zernike_disk(mix.R, p, specfun::radial_sq_integral(p, mix.R));
  return out;
}

ModeProbability zernike_probability(const SourceDiskScene& scene, int p, int m, int sigma) {
  return zernike_probability(mixture_of(scene), p, m, sigma);
}

// ---- Fourier-Bessel ----

namespace {

double fb_integral_direct(int m, double x, double y, bool deriv) {
  // u J_m(y u) J_m(x u), or u^2 J_m'(y u) J_m(x u) for the derivative.
  auto f = [&](double u) {
    const double jx = specfun::bessel_j(m, x * u);
    if (!deriv) return u * specfun::bessel_j(m, y * u) * jx;
    const double jp = m == 0 ? -specfun::bessel_j(1, y * u)
                             : 0.5 * (specfun::bessel_j(m - 1, y * u) - specfun::bessel_j(m + 1, y * u));
    return u * u * jp * jx;
  };
  quad::QuadSpec spec;
  spec.rel_tol = 1e-13;
  spec.abs_tol = 1e-300;
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::max(x, y) / 4.0)));
  return quad::integrate_radial(f, 0.0, 1.0, spec, pieces).value;
}

bool near_zero_gap(double x, double y) { return std::abs(y - x) < 1e-3 * x; }

}  // namespace

double fb_overlap_integral(int m, double x, double y) {
  if (near_zero_gap(x, y)) return fb_integral_direct(m, x, y, false);
  return x * specfun::bessel_j(m, y) * specfun::bessel_j(m + 1, x) / (x * x - y * y);
}

double fb_overlap_integral_deriv(int m, double x, double y) {
  if (near_zero_gap(x, y)) return fb_integral_direct(m, x, y, true);
  const double jm = specfun::bessel_j(m, y);
  const double jp = m == 0 ? -specfun::bessel_j(1, y)
                           : 0.5 * (specfun::bessel_j(m - 1, y) - specfun::bessel_j(m + 1, y));
  const double d = x * x - y * y;
  return x * specfun::bessel_j(m + 1, x) * (jp / d + 2.0 * y * jm / (d * d));
}

namespace {

// (8/(R^2 J_{m+1}(x)^2)) int_0^R r I(2 pi r)^2 dr, cached per (m, n, R).
double fb_disk(int m, int n, double R) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, double> cache;
  {
    std::lock_guard lock(mu);
    auto it = cache.find({m, n, R});
    if (it != cache.end()) return it->second;
  }
  const double x = specfun::bessel_j_zero(m, n);
  const double jx = specfun::bessel_j(m + 1, x);
  auto f = [&](double r) {
    const double I = fb_overlap_integral(m, x, 2.0 * pi * r);
    return r * I * I;
  };
  quad::QuadSpec spec;
  spec.rel_tol = 1e-11;
  spec.abs_tol = 1e-300;
  const int pieces = std::max(1, static_cast<int>(std::ceil(4.0 * R)));
  const double v = 8.0 / (R * R * jx * jx) *
                   quad::integrate_radial(f, 0.0, R, spec, pieces).value_or_throw("FB background");
  std::lock_guard lock(mu);
  cache[{m, n, R}] = v;
  return v;
}

}  // namespace

ModeProbability fb_probability(const EmissionMixture& mix, int m, int n, int sigma) {
  if (m < 0 || n < 1) throw InvalidArgument("invalid Fourier-Bessel index");
  check_sigma(m, sigma);
  const double x = specfun::bessel_j_zero(m, n);
  const double jx = specfun::bessel_j(m + 1, x);
  const double y = 2.0 * pi * mix.r0;
  const double a = 2.0 * fb_overlap_integral(m, x, y) / jx;
  const double da = 2.0 * fb_overlap_integral_deriv(m, x, y) / jx * 2.0 * pi;
  const Angular ang = angular(m, sigma, mix.phi0);
  ModeProbability out;
  out.p = mix.point_weight * a * a * ang.a;
  out.d_r = mix.point_weight * 2.0 * a * da * ang.a;
  out.d_t = mix.r0 < 1e-9 ? 0.0 : mix.point_weight * a * a * ang.da / mix.r0;
  if (mix.disk_weight != 0.0) out.p += mix.disk_weight * fb_disk(m, n, mix.R);
  return out;
}

ModeProbability fb_probability(const SourceDiskScene& scene, int m, int n, int sigma) {
  return fb_probability(mixture_of(scene), m, n, sigma);
}

// ---- PPS ----

struct PpsCache {
  std::once_flag once;
  Eigen::MatrixXd background;
};

namespace {

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

const Eigen::MatrixXd& PpsBasis::background_overlaps() const {
  if (!cache) throw InvalidArgument("PPS basis was not built by pps_basis");
  std::call_once(cache->once, [this] {
    const auto N = static_cast<Eigen::Index>(locations.size());
    const std::size_t fdim = static_cast<std::size_t>(N * (N + 1) / 2);
    const double norm = 1.0 / (pi * R * R);
    const auto& locs = locations;
    auto f = [&](double x, double y, std::span<double> out) {
      std::vector<double> k(static_cast<std::size_t>(N));
      for (Eigen::Index i = 0; i < N; ++i) k[i] = specfun::kernel(dist({x, y}, locs[i]));
      std::size_t idx = 0;
      for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) out[idx++] = norm * k[i] * k[j];
    };
    quad::QuadSpec spec;
    spec.rel_tol = 1e-9;
    spec.max_evals = 20'000'000;
    const auto r = quad::integrate_disk(f, fdim, R, spec);
    const auto& v = r.value_or_throw("PPS background overlaps");
    cache->background.resize(N, N);
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        cache->background(i, j) = v[idx];
        cache->background(j, i) = v[idx];
        ++idx;
      }
  });
  return cache->background;
}

PpsBasis pps_basis(double R, const std::vector<Point2>& locations) {
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidArgument("R must be positive");
  const auto N = static_cast<Eigen::Index>(locations.size());
  if (N < 1 || N > 40) throw InvalidArgument("PPS basis needs 1 to 40 locations");
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& p = locations[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || std::hypot(p.x, p.y) >= R)
      throw InvalidArgument("PPS locations must lie strictly inside the disk");
    for (Eigen::Index j = 0; j < i; ++j)
      if (dist(p, locations[j]) < 1e-12) throw InvalidArgument("PPS locations must be distinct");
  }
  PpsBasis b;
  b.R = R;
  b.locations = locations;
  b.gram.resize(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) b.gram(i, j) = specfun::kernel(dist(locations[i], locations[j]));

  b.cholesky = Eigen::MatrixXd::Zero(N, N);
  auto& L = b.cholesky;
  for (Eigen::Index j = 0; j < N; ++j) {
    double d = b.gram(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (d < 1e-12) throw IllConditioned("PPS Gram matrix pivot below 1e-12");
    L(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < N; ++i) {
      double s = b.gram(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  b.coeffs = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(N, N));
  b.cache = std::make_shared<PpsCache>();
  return b;
}

std::vector<Point2> pps_square_grid(double R, int n_a) {
  if (!(R > 0.0)) throw InvalidArgument("R must be positive");
  if (n_a < 1) throw InvalidArgument("grid size must be positive");
  const double h = 2.0 * R / n_a;
  std::vector<Point2> out;
  for (int i = 0; i < n_a; ++i) {
    for (int j = 0; j < n_a; ++j) {
      const Point2 p{-R + (i + 0.5) * h, -R + (j + 0.5) * h};
      if (std::hypot(p.x, p.y) < R) out.push_back(p);
    }
  }
  return out;
}

std::vector<Point2> pps_random_layout(double R, int count, std::uint64_t seed) {
  if (!(R > 0.0)) throw InvalidArgument("R must be positive");
  if (count < 1 || count > 40) throw InvalidArgument("PPS count must lie in [1, 40]");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-R, R);
  std::vector<Point2> out;
  while (static_cast<int>(out.size()) < count) {
    const Point2 p{u(gen), u(gen)};
    if (std::hypot(p.x, p.y) < R) out.push_back(p);
  }
  return out;
}

// ---- probabilities and FI ----

namespace {

void close_set(ProbabilitySet& ps) {
  Sum p, dr, dt;
  for (const auto& m : ps.modes) {
    p.add(m.p);
    dr.add(m.d_r);
    dt.add(m.d_t);
  }
  ps.unobserved = {1.0 - p.s, -dr.s, -dt.s};
}

ProbabilitySet zernike_set(const EmissionMixture& mix, const ZernikeBasis& z) {
  if (z.p_max < 0) throw InvalidArgument("p_max must be non-negative");
  const auto B = aperture_radial(z.p_max, mix.r0);
  const auto dB = aperture_radial_deriv(z.p_max, mix.r0);
  std::vector<double> disk(static_cast<std::size_t>(z.p_max) + 1, 0.0);
  if (mix.disk_weight != 0.0) {
    const specfun::RadialIntegralTable table(z.p_max, mix.R);
    for (int p = 0; p <= z.p_max; ++p) disk[p] = mix.disk_weight * zernike_disk(mix.R, p, table(p, p));
  }
  ProbabilitySet ps;
  for (int p = 0; p <= z.p_max; ++p) {
    for (int m = p; m >= 0; m -= 2) {
      for (int sigma : {1, -1}) {
        if (m == 0 && sigma < 0) continue;
        ModeProbability q = zernike_point(mix, p, m, sigma, B[p], dB[p]);
        q.p += disk[p];
        ps.modes.push_back(q);
      }
    }
  }
  return ps;
}

ProbabilitySet fb_set(const EmissionMixture& mix, const FourierBesselBasis& f) {
  if (f.m_max < 0 || f.n_max < 1) throw InvalidArgument("invalid Fourier-Bessel truncation");
  ProbabilitySet ps;
  for (int m = 0; m <= f.m_max; ++m)
    for (int n = 1; n <= f.n_max; ++n)
      for (int sigma : {1, -1}) {
        if (m == 0 && sigma < 0) continue;
        ps.modes.push_back(fb_probability(mix, m, n, sigma));
      }
  return ps;
}

ProbabilitySet pps_set(const EmissionMixture& mix, const PpsBasis& b) {
  if (std::abs(b.R - mix.R) > 1e-12 * mix.R) throw InvalidArgument("PPS basis built for a different R");
  const auto N = static_cast<Eigen::Index>(b.locations.size());
  const double x0 = mix.r0 * std::cos(mix.phi0), y0 = mix.r0 * std::sin(mix.phi0);
  const double c = std::cos(mix.phi0), s = std::sin(mix.phi0);
  Eigen::VectorXd k(N), kr(N), kt(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const double dx = b.locations[i].x - x0, dy = b.locations[i].y - y0;
    const double d = std::hypot(dx, dy);
    k(i) = specfun::kernel(d);
    const double g2 = 2.0 * specfun::kernel_grad_factor(d);
    kr(i) = g2 * (dx * c + dy * s);
    kt(i) = g2 * (-dx * s + dy * c);
  }
  Eigen::MatrixXd rho = mix.point_weight * k * k.transpose();
  if (mix.disk_weight != 0.0) rho += mix.disk_weight * b.background_overlaps();
  const Eigen::MatrixXd P = b.coeffs * rho * b.coeffs.transpose();
  const Eigen::VectorXd ck = b.coeffs * k, cr = b.coeffs * kr, ct = b.coeffs * kt;
  ProbabilitySet ps;
  for (Eigen::Index n = 0; n < N; ++n) {
    ps.modes.push_back({P(n, n), 2.0 * mix.point_weight * ck(n) * cr(n),
                        mix.r0 < 1e-9 ? 0.0 : 2.0 * mix.point_weight * ck(n) * ct(n)});
  }
  return ps;
}

}  // namespace

ProbabilitySet mode_probabilities(const EmissionMixture& mix, const ModeBasis& basis) {
  ProbabilitySet ps;
  if (auto* z = std::get_if<ZernikeBasis>(&basis)) ps = zernike_set(mix, *z);
  else if (auto* f = std::get_if<FourierBesselBasis>(&basis)) ps = fb_set(mix, *f);
  else ps = pps_set(mix, std::get<PpsBasis>(basis));
  close_set(ps);
  return ps;
}

ProbabilitySet mode_probabilities(const SourceDiskScene& scene, const ModeBasis& basis) {
  return mode_probabilities(mixture_of(scene), basis);
}

ProbabilitySet mode_probabilities(const HoleDiskScene& scene, const ModeBasis& basis) {
  return mode_probabilities(mixture_of(scene), basis);
}

SymMatrix2 fisher_from_probabilities(const ProbabilitySet& ps) {
  Sum a11, a12, a22;
  auto add = [&](const ModeProbability& m, double floor) {
    if (m.p <= 0.0) return;
    if (m.p < floor && std::abs(m.d_r) < floor && std::abs(m.d_t) < floor) return;
    a11.add(m.d_r * m.d_r / m.p);
    a12.add(m.d_r * m.d_t / m.p);
    a22.add(m.d_t * m.d_t / m.p);
  };
  for (const auto& m : ps.modes) add(m, 1e-14);
  // The leftover bucket is a difference of O(1) sums; below 1e-12 it is rounding noise.
  if (ps.unobserved.p >= 1e-12) add(ps.unobserved, 1e-14);
  return {a11.s, a12.s, a22.s, Frame::SourceAligned};
}

SymMatrix2 fi_modes(const SourceDiskScene& scene, const ModeBasis& basis) {
  scene.validate();
  require_positive_r0(scene.r0);
  return fisher_from_probabilities(mode_probabilities(scene, basis));
}

SymMatrix2 fi_modes(const HoleDiskScene& scene, const ModeBasis& basis) {
  scene.validate();
  require_positive_r0(scene.r0);
  return fisher_from_probabilities(mode_probabilities(scene, basis));
}

// ---- direct imaging ----

double psf(double d) {
  const double k = specfun::kernel(d);
  return pi * k * k;
}

DiskBackground::DiskBackground(double R) : R_(R) {
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidArgument("R must be positive");
  m_max_ = static_cast<int>(std::ceil(2.0 * pi * R)) + 25;
  const specfun::RadialIntegralTable table(m_max_, R);
  const int n = m_max_ + 1;
  w_ = Eigen::MatrixXd::Zero(n, n);
  const double c = 8.0 / (pi * R * R);
  for (int m = 0; m < n; ++m)
    for (int mp = m % 2; mp < n; mp += 2)
      w_(m, mp) = c * (std::min(m, mp) + 1.0) * (m + 1.0) * (mp + 1.0) * table(m, mp);
}

double DiskBackground::operator()(double rho) const {
  const auto B = aperture_radial(m_max_, rho);
  const Eigen::Map<const Eigen::VectorXd> v(B.data(), static_cast<Eigen::Index>(B.size()));
  return v.dot(w_ * v);
}

double di_intensity(const EmissionMixture& mix, Point2 r) {
  const double x0 = mix.r0 * std::cos(mix.phi0), y0 = mix.r0 * std::sin(mix.phi0);
  double v = mix.point_weight * psf(std::hypot(r.x - x0, r.y - y0));
  if (mix.disk_weight != 0.0) v += mix.disk_weight * DiskBackground(mix.R)(std::hypot(r.x, r.y));
  return v;
}

double di_intensity(const SourceDiskScene& scene, Point2 r) { return di_intensity(mixture_of(scene), r); }

DiResult fi_direct_imaging_detail(const EmissionMixture& mix, const DiOptions& opts) {
  opts.spec.validate();
  require_positive_r0(mix.r0);
  const DiskBackground bg(mix.R);
  // Aligned frame: the point sits on the x axis, x is radial and y azimuthal.
  auto f = [&](double x, double y, std::span<double> out) {
    const double dx = x - mix.r0;
    const double d = std::hypot(dx, y);
    const double k = specfun::kernel(d);
    double P = mix.point_weight * pi * k * k;
    if (mix.disk_weight != 0.0) P += mix.disk_weight * bg(std::hypot(x, y));
    if (!(P > 0.0)) {
      out[0] = out[1] = out[2] = 0.0;
      return;
    }
    // d h / d x0 = 4 pi K g (x - x0)
    const double s = mix.point_weight * 4.0 * pi * k * specfun::kernel_grad_factor(d);
    const double px = s * dx, py = s * y;
    out[0] = px * px / P;
    out[1] = py * py / P;
    out[2] = px * py / P;
  };

  DiResult res;
  double rc = opts.r_cut_start > 0.0 ? opts.r_cut_start : mix.R + 10.0;
  auto inner = quad::integrate_annulus(f, 3, 0.0, rc, opts.spec, opts.exec);
  const auto& v0 = inner.value_or_throw("direct-imaging Fisher information");
  std::array<double, 3> acc{v0[0], v0[1], v0[2]};
  res.evals = inner.evals;
  // Tail rings only need to resolve the stopping test.
  quad::QuadSpec tail = opts.spec;
  tail.abs_tol = 0.1 * opts.rel_change * std::min(acc[0], acc[1]);
  while (true) {
    if (2.0 * rc > opts.r_cut_max)
      throw NonConvergence("direct-imaging Fisher information: plane truncation did not settle");
    auto ring = quad::integrate_annulus(f, 3, rc, 2.0 * rc, tail, opts.exec);
    const auto& dv = ring.value_or_throw("direct-imaging Fisher information tail");
    res.evals += ring.evals;
    for (int k = 0; k < 3; ++k) acc[k] += dv[k];
    rc *= 2.0;
    if (std::abs(dv[0]) <= opts.rel_change * acc[0] && std::abs(dv[1]) <= opts.rel_change * acc[1]) break;
  }
  res.info = {acc[0], acc[2], acc[1], Frame::SourceAligned};
  res.r_cut = rc;
  return res;
}

SymMatrix2 fi_direct_imaging(const SourceDiskScene& scene, const DiOptions& opts) {
  return fi_direct_imaging_detail(mixture_of(scene), opts).info;
}

SymMatrix2 fi_direct_imaging(const HoleDiskScene& scene, const DiOptions& opts) {
  return fi_direct_imaging_detail(mixture_of(scene), opts).info;
}

}  // namespace qloc
