#pragma once

#include <array>
#include <string>

namespace qloc {

// All lengths in diffraction units.
struct SourceDiskScene {
  double R = 1.0;
  double b = 0.0;
  double r0 = 0.0;
  double phi0 = 0.0;

  void validate() const;
  double alpha() const { return b / (1.0 - b); }
};

struct HoleDiskScene {
  double R = 1.0;
  double delta0 = 0.05;
  double r0 = 0.0;
  double phi0 = 0.0;
  double contrast = 1.0;

  void validate() const;
  // Area ratio with the contrast folded in.
  double epsilon() const { return contrast * delta0 * delta0 / (R * R); }
};

// Photon emission split between a point term at (r0, phi0) and the uniform disk.
// A source scene gives weights (1-b, b); a hole scene gives (-eps, 1)/(1-eps).
struct EmissionMixture {
  double R = 1.0;
  double r0 = 0.0;
  double phi0 = 0.0;
  double point_weight = 1.0;
  double disk_weight = 0.0;
};

EmissionMixture mixture_of(const SourceDiskScene& s);
EmissionMixture mixture_of(const HoleDiskScene& s);

enum class Frame { SourceAligned, Lab };

struct SymMatrix2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;
  Frame frame = Frame::SourceAligned;

  double trace() const { return a11 + a22; }
  double det() const { return a11 * a22 - a12 * a12; }
  // Ascending eigenvalues.
  std::array<double, 2> eigenvalues() const;
};

SymMatrix2 rotate_to_lab(const SymMatrix2& m, double phi0);

struct CramerRao {
  double var_r = 0.0;
  double var_t = 0.0;
};

// Diagonal of the inverse; throws SingularMatrix when det <= 1e-14 ||m||_F^2.
CramerRao crb_from_info(const SymMatrix2& m);

// Throws DegenerateGeometry when r0 < 1e-9.
void require_positive_r0(double r0);

const char* frame_name(Frame f);

}  // namespace qloc
