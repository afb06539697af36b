#include "qloc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>

#include "qloc/error.hpp"

namespace qloc::quad {

namespace {

using std::numbers::pi;

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Region {
  std::vector<double> c;
  std::vector<double> h;
  std::vector<double> val;
  std::vector<double> err;
  double priority = 0.0;
  int split_dim = 0;
};

bool lower_priority(const Region& a, const Region& b) { return a.priority < b.priority; }

class Rule {
 public:
  Rule(const VecIntegrand& f, std::size_t dim, std::size_t fdim) : f_(f), dim_(dim), fdim_(fdim) {}

  std::size_t points() const {
    if (dim_ == 1) return 15;
    return 1 + 4 * dim_ + 2 * dim_ * (dim_ - 1) + (std::size_t{1} << dim_);
  }

  void evaluate(Region& r) const {
    if (dim_ == 1)
      gk15(r);
    else
      genz_malik(r);
    double p = 0.0;
    for (double e : r.err) p = std::max(p, e);
    r.priority = p;
  }

 private:
  void gk15(Region& r) const {
    std::vector<double> x(1);
    std::vector<double> fa(fdim_), fb(fdim_), kr(fdim_, 0.0), gr(fdim_, 0.0);
    const double c = r.c[0];
    const double h = r.h[0];
    x[0] = c;
    f_(x, fa);
    for (std::size_t k = 0; k < fdim_; ++k) {
      kr[k] = kWgk[7] * fa[k];
      gr[k] = kWg[3] * fa[k];
    }
    for (int j = 0; j < 7; ++j) {
      x[0] = c - h * kXgk[j];
      f_(x, fa);
      x[0] = c + h * kXgk[j];
      f_(x, fb);
      for (std::size_t k = 0; k < fdim_; ++k) {
        const double s = fa[k] + fb[k];
        kr[k] += kWgk[j] * s;
        if (j & 1) gr[k] += kWg[j / 2] * s;
      }
    }
    r.val.resize(fdim_);
    r.err.resize(fdim_);
    for (std::size_t k = 0; k < fdim_; ++k) {
      r.val[k] = h * kr[k];
      r.err[k] = std::fabs(h * (kr[k] - gr[k]));
    }
    r.split_dim = 0;
  }

  void genz_malik(Region& r) const {
    static const double l2 = std::sqrt(9.0 / 70.0);
    static const double l4 = std::sqrt(9.0 / 10.0);
    static const double l5 = std::sqrt(9.0 / 19.0);
    const double n = static_cast<double>(dim_);
    const double w1 = (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0;
    const double w2 = 980.0 / 6561.0;
    const double w3 = (1820.0 - 400.0 * n) / 19683.0;
    const double w4 = 200.0 / 19683.0;
    const double w5 = 6859.0 / 19683.0 / static_cast<double>(std::size_t{1} << dim_);
    const double e1 = (729.0 - 950.0 * n + 50.0 * n * n) / 729.0;
    const double e2 = 245.0 / 486.0;
    const double e3 = (265.0 - 100.0 * n) / 1458.0;
    const double e4 = 25.0 / 729.0;

    std::vector<double> x(r.c);
    std::vector<double> f0(fdim_), fa(fdim_), fb(fdim_);
    std::vector<double> s2(fdim_, 0.0), s3(fdim_, 0.0), s4(fdim_, 0.0), s5(fdim_, 0.0);
    std::vector<double> diff(dim_, 0.0);

    f_(x, f0);
    for (std::size_t i = 0; i < dim_; ++i) {
      x[i] = r.c[i] - l2 * r.h[i];
      f_(x, fa);
      x[i] = r.c[i] + l2 * r.h[i];
      f_(x, fb);
      std::vector<double> a2(fdim_);
      for (std::size_t k = 0; k < fdim_; ++k) {
        a2[k] = fa[k] + fb[k];
        s2[k] += a2[k];
      }
      x[i] = r.c[i] - l4 * r.h[i];
      f_(x, fa);
      x[i] = r.c[i] + l4 * r.h[i];
      f_(x, fb);
      x[i] = r.c[i];
      double d = 0.0;
      for (std::size_t k = 0; k < fdim_; ++k) {
        const double a3 = fa[k] + fb[k];
        s3[k] += a3;
        d += std::fabs(a2[k] - 2.0 * f0[k] - (l2 * l2 / (l4 * l4)) * (a3 - 2.0 * f0[k]));
      }
      diff[i] = d;
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = i + 1; j < dim_; ++j) {
        for (int si = -1; si <= 1; si += 2) {
          for (int sj = -1; sj <= 1; sj += 2) {
            x[i] = r.c[i] + si * l4 * r.h[i];
            x[j] = r.c[j] + sj * l4 * r.h[j];
            f_(x, fa);
            for (std::size_t k = 0; k < fdim_; ++k) s4[k] += fa[k];
          }
        }
        x[i] = r.c[i];
        x[j] = r.c[j];
      }
    }
    for (std::size_t mask = 0; mask < (std::size_t{1} << dim_); ++mask) {
      for (std::size_t i = 0; i < dim_; ++i)
        x[i] = r.c[i] + ((mask >> i) & 1 ? l5 : -l5) * r.h[i];
      f_(x, fa);
      for (std::size_t k = 0; k < fdim_; ++k) s5[k] += fa[k];
    }

    double vol = 1.0;
    for (double hi : r.h) vol *= 2.0 * hi;
    r.val.resize(fdim_);
    r.err.resize(fdim_);
    for (std::size_t k = 0; k < fdim_; ++k) {
      const double i7 = vol * (w1 * f0[k] + w2 * s2[k] + w3 * s3[k] + w4 * s4[k] + w5 * s5[k]);
      const double i5 = vol * (e1 * f0[k] + e2 * s2[k] + e3 * s3[k] + e4 * s4[k]);
      r.val[k] = i7;
      r.err[k] = std::fabs(i7 - i5);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < dim_; ++i) {
      if (diff[i] > diff[best]) best = i;
    }
    double dmax = diff[best];
    double scale = 0.0;
    for (double v : f0) scale += std::fabs(v);
    if (dmax <= 1e-14 * scale) {
      best = 0;
      for (std::size_t i = 1; i < dim_; ++i) {
        if (r.h[i] > r.h[best]) best = i;
      }
    }
    r.split_dim = static_cast<int>(best);
  }

  const VecIntegrand& f_;
  std::size_t dim_;
  std::size_t fdim_;
};

void evaluate_batch(const Rule& rule, std::vector<Region>& regions, Execution exec) {
  std::exception_ptr failure;
  const long n = static_cast<long>(regions.size());
#pragma omp parallel for schedule(dynamic) if (exec == Execution::Parallel && n > 1)
  for (long i = 0; i < n; ++i) {
    try {
      rule.evaluate(regions[i]);
    } catch (...) {
#pragma omp critical(qloc_quad_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

double tolerance(const QuadSpec& spec, const std::vector<double>& val) {
  double vmax = 0.0;
  for (double v : val) vmax = std::max(vmax, std::fabs(v));
  return std::max(spec.abs_tol, spec.rel_tol * vmax);
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

}  // namespace

void QuadSpec::validate() const {
  if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
  if (!(abs_tol >= 0.0)) throw InvalidArgument("abs_tol must be non-negative");
  if (max_evals < 1000) throw InvalidArgument("max_evals must be at least 1000");
}

QuadSpec default_spec_2d() { return QuadSpec{}; }

// The Genz-Malik 7/5 estimate overstates the 4D error by two to three orders,
// so 1e-5 here already delivers ~1e-8 in practice.
QuadSpec default_spec_4d() {
  QuadSpec s;
  s.rel_tol = 1e-5;
  s.max_evals = 200'000'000;
  return s;
}

double QuadResult::value_or_throw(std::string_view what) const {
  if (!converged) {
    throw NonConvergence(std::string(what) + ": quadrature did not converge (error " +
                         std::to_string(error) + " after " + std::to_string(evals) + " evaluations)");
  }
  return value;
}

const std::vector<double>& VecQuadResult::value_or_throw(std::string_view what) const {
  if (!converged) {
    throw NonConvergence(std::string(what) + ": quadrature did not converge after " +
                         std::to_string(evals) + " evaluations");
  }
  return value;
}

std::vector<Box> grid_boxes(const std::vector<double>& lo, const std::vector<double>& hi,
                            const std::vector<int>& n) {
  const std::size_t dim = lo.size();
  if (hi.size() != dim || n.size() != dim) throw InvalidArgument("grid_boxes: dimension mismatch");
  std::size_t total = 1;
  for (int k : n) {
    if (k < 1) throw InvalidArgument("grid_boxes: counts must be positive");
    total *= static_cast<std::size_t>(k);
  }
  std::vector<Box> out;
  out.reserve(total);
  std::vector<int> idx(dim, 0);
  for (std::size_t t = 0; t < total; ++t) {
    Box b{std::vector<double>(dim), std::vector<double>(dim)};
    for (std::size_t i = 0; i < dim; ++i) {
      const double w = (hi[i] - lo[i]) / n[i];
      b.lo[i] = lo[i] + w * idx[i];
      b.hi[i] = idx[i] + 1 == n[i] ? hi[i] : lo[i] + w * (idx[i] + 1);
    }
    out.push_back(std::move(b));
    for (std::size_t i = 0; i < dim; ++i) {
      if (++idx[i] < n[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

VecQuadResult cubature(const VecIntegrand& f, std::size_t fdim, const std::vector<Box>& boxes,
                       const QuadSpec& spec, Execution exec) {
  spec.validate();
  if (boxes.empty()) throw InvalidArgument("cubature: no integration boxes");
  if (fdim == 0) throw InvalidArgument("cubature: fdim must be positive");
  const std::size_t dim = boxes.front().lo.size();
  if (dim < 1 || dim > 6) throw InvalidArgument("cubature: dimension must be 1..6");

  Rule rule(f, dim, fdim);
  const std::size_t per_region = rule.points();

  std::vector<Region> heap;
  heap.reserve(boxes.size());
  for (const Box& b : boxes) {
    if (b.lo.size() != dim || b.hi.size() != dim) throw InvalidArgument("cubature: mixed box dimensions");
    Region r;
    r.c.resize(dim);
    r.h.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      r.c[i] = 0.5 * (b.lo[i] + b.hi[i]);
      r.h[i] = 0.5 * (b.hi[i] - b.lo[i]);
    }
    heap.push_back(std::move(r));
  }
  evaluate_batch(rule, heap, exec);
  std::size_t evals = per_region * heap.size();

  std::vector<double> val(fdim, 0.0), err(fdim, 0.0);
  for (const Region& r : heap) {
    for (std::size_t k = 0; k < fdim; ++k) {
      val[k] += r.val[k];
      err[k] += r.err[k];
    }
  }
  std::make_heap(heap.begin(), heap.end(), lower_priority);

  bool converged = max_of(err) <= tolerance(spec, val);
  std::vector<Region> children;
  while (!converged) {
    const std::size_t batch = std::clamp<std::size_t>(heap.size() / 4, 1, 64);
    if (evals + 2 * batch * per_region > spec.max_evals) break;
    children.clear();
    for (std::size_t b = 0; b < batch; ++b) {
      std::pop_heap(heap.begin(), heap.end(), lower_priority);
      Region parent = std::move(heap.back());
      heap.pop_back();
      for (std::size_t k = 0; k < fdim; ++k) {
        val[k] -= parent.val[k];
        err[k] -= parent.err[k];
      }
      const int d = parent.split_dim;
      Region lo, hi;
      lo.c = parent.c;
      lo.h = parent.h;
      lo.h[d] *= 0.5;
      hi.c = lo.c;
      hi.h = lo.h;
      lo.c[d] -= lo.h[d];
      hi.c[d] += lo.h[d];
      children.push_back(std::move(lo));
      children.push_back(std::move(hi));
    }
    evaluate_batch(rule, children, exec);
    evals += per_region * children.size();
    for (Region& r : children) {
      for (std::size_t k = 0; k < fdim; ++k) {
        val[k] += r.val[k];
        err[k] += r.err[k];
      }
      heap.push_back(std::move(r));
      std::push_heap(heap.begin(), heap.end(), lower_priority);
    }
    converged = max_of(err) <= tolerance(spec, val);
  }

  // Final totals with compensated summation in heap order.
  VecQuadResult out;
  out.value.assign(fdim, 0.0);
  out.error.assign(fdim, 0.0);
  for (std::size_t k = 0; k < fdim; ++k) {
    double s = 0.0, comp = 0.0, e = 0.0;
    for (const Region& r : heap) {
      const double v = r.val[k];
      const double t = s + v;
      comp += std::fabs(s) >= std::fabs(v) ? (s - t) + v : (v - t) + s;
      s = t;
      e += r.err[k];
    }
    out.value[k] = s + comp;
    out.error[k] = e;
  }
  out.evals = evals;
  out.converged = max_of(out.error) <= tolerance(spec, out.value);
  return out;
}

QuadResult integrate_radial(const std::function<double(double)>& f, double a, double b,
                            const QuadSpec& spec, int pieces) {
  if (!(a < b)) throw InvalidArgument("integrate_radial: need a < b");
  const VecIntegrand g = [&f](std::span<const double> x, std::span<double> out) { out[0] = f(x[0]); };
  const auto res = cubature(g, 1, grid_boxes({a}, {b}, {std::max(1, pieces)}), spec, Execution::Serial);
  return {res.value[0], res.error[0], res.evals, res.converged};
}

namespace {

int radial_cells(double extent, double per_unit) {
  return std::max(1, static_cast<int>(std::ceil(extent * per_unit)));
}

}  // namespace

VecQuadResult integrate_disk(const VecField& f, std::size_t fdim, double R, const QuadSpec& spec,
                             Execution exec) {
  if (!(R > 0.0)) throw InvalidArgument("integrate_disk: R must be positive");
  return integrate_annulus(f, fdim, 0.0, R, spec, exec);
}

QuadResult integrate_disk(const Field& f, double R, const QuadSpec& spec, Execution exec) {
  const VecField g = [&f](double x, double y, std::span<double> out) { out[0] = f(x, y); };
  const auto res = integrate_disk(g, 1, R, spec, exec);
  return {res.value[0], res.error[0], res.evals, res.converged};
}

VecQuadResult integrate_annulus(const VecField& f, std::size_t fdim, double r_in, double r_out,
                                const QuadSpec& spec, Execution exec) {
  if (!(r_in >= 0.0 && r_out > r_in)) throw InvalidArgument("integrate_annulus: need 0 <= r_in < r_out");
  const VecIntegrand g = [&f](std::span<const double> p, std::span<double> out) {
    const double r = p[0];
    f(r * std::cos(p[1]), r * std::sin(p[1]), out);
    for (double& v : out) v *= r;
  };
  const int nr = std::max(2, radial_cells(r_out - r_in, 2.0));
  const int nt = r_in > 0.0 ? 8 : 4;
  return cubature(g, fdim, grid_boxes({r_in, 0.0}, {r_out, 2.0 * pi}, {nr, nt}), spec, exec);
}

VecQuadResult integrate_disk_pair(const VecPairField& f, std::size_t fdim, double R,
                                  const QuadSpec& spec, Execution exec) {
  if (!(R > 0.0)) throw InvalidArgument("integrate_disk_pair: R must be positive");
  const VecIntegrand g = [&f](std::span<const double> p, std::span<double> out) {
    const double r = p[0], rp = p[2];
    f(r * std::cos(p[1]), r * std::sin(p[1]), rp * std::cos(p[3]), rp * std::sin(p[3]), out);
    for (double& v : out) v *= r * rp;
  };
  const int nr = radial_cells(R, 1.0);
  const auto boxes = grid_boxes({0.0, 0.0, 0.0, 0.0}, {R, 2.0 * pi, R, 2.0 * pi}, {nr, 2, nr, 2});
  return cubature(g, fdim, boxes, spec, exec);
}

QuadResult integrate_disk_pair(const PairField& f, double R, const QuadSpec& spec, Execution exec) {
  const VecPairField g = [&f](double x, double y, double xp, double yp, std::span<double> out) {
    out[0] = f(x, y, xp, yp);
  };
  const auto res = integrate_disk_pair(g, 1, R, spec, exec);
  return {res.value[0], res.error[0], res.evals, res.converged};
}

QuadResult integrate_plane(const Field& f, double r_cut, const QuadSpec& spec, Execution exec) {
  if (!(r_cut > 0.0)) throw InvalidArgument("integrate_plane: r_cut must be positive");
  const VecField g = [&f](double x, double y, std::span<double> out) { out[0] = f(x, y); };
  const auto res = integrate_annulus(g, 1, 0.0, r_cut, spec, exec);
  return {res.value[0], res.error[0], res.evals, res.converged};
}

}  // namespace qloc::quad
