#include "qloc/scene.hpp"

#include <cmath>
#include <numbers>

#include "qloc/error.hpp"

namespace qloc {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void SourceDiskScene::validate() const {
  if (!finite(R) || !finite(b) || !finite(r0) || !finite(phi0))
    throw InvalidArgument("scene fields must be finite");
  if (!(R > 0.0)) throw InvalidArgument("R must be positive");
  if (!(b >= 0.0 && b < 1.0)) throw InvalidArgument("b must lie in [0, 1)");
  if (!(r0 >= 0.0 && r0 <= R)) throw InvalidArgument("r0 must lie in [0, R]");
}

void HoleDiskScene::validate() const {
  if (!finite(R) || !finite(delta0) || !finite(r0) || !finite(phi0) || !finite(contrast))
    throw InvalidArgument("scene fields must be finite");
  if (!(R > 0.0)) throw InvalidArgument("R must be positive");
  if (!(delta0 > 0.0 && delta0 <= R / 10.0)) throw InvalidArgument("delta0 must lie in (0, R/10]");
  if (!(contrast > 0.0 && contrast <= 1.0)) throw InvalidArgument("contrast must lie in (0, 1]");
  if (!(r0 >= 0.0 && r0 <= R - delta0)) throw InvalidArgument("r0 must lie in [0, R - delta0]");
}

EmissionMixture mixture_of(const SourceDiskScene& s) {
  s.validate();
  return {s.R, s.r0, s.phi0, 1.0 - s.b, s.b};
}

EmissionMixture mixture_of(const HoleDiskScene& s) {
  s.validate();
  const double eps = s.epsilon();
  return {s.R, s.r0, s.phi0, -eps / (1.0 - eps), 1.0 / (1.0 - eps)};
}

std::array<double, 2> SymMatrix2::eigenvalues() const {
  const double m = 0.5 * (a11 + a22);
  const double d = std::hypot(0.5 * (a11 - a22), a12);
  return {m - d, m + d};
}

SymMatrix2 rotate_to_lab(const SymMatrix2& m, double phi0) {
  if (m.frame != Frame::SourceAligned) throw InvalidArgument("rotate_to_lab expects a source-aligned matrix");
  // Lab (x, y) from aligned (r, r*phi): H_lab = A^T H A, A = [[c, s], [-s, c]].
  const double c = std::cos(phi0);
  const double s = std::sin(phi0);
  SymMatrix2 out;
  out.a11 = c * c * m.a11 - 2.0 * c * s * m.a12 + s * s * m.a22;
  out.a22 = s * s * m.a11 + 2.0 * c * s * m.a12 + c * c * m.a22;
  out.a12 = c * s * (m.a11 - m.a22) + (c * c - s * s) * m.a12;
  out.frame = Frame::Lab;
  return out;
}

CramerRao crb_from_info(const SymMatrix2& m) {
  const double norm2 = m.a11 * m.a11 + 2.0 * m.a12 * m.a12 + m.a22 * m.a22;
  const double det = m.det();
  if (!(det > 1e-14 * norm2) || !std::isfinite(det))
    throw SingularMatrix("information matrix is singular; a parameter is unidentifiable");
  return {m.a22 / det, m.a11 / det};
}

void require_positive_r0(double r0) {
  if (r0 < 1e-9) throw DegenerateGeometry("r0 must exceed 1e-9: azimuth undefined at the disk center");
}

const char* frame_name(Frame f) { return f == Frame::Lab ? "lab" : "source_aligned"; }

}  // namespace qloc
