#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qloc/quadrature.hpp"
#include "qloc/scene.hpp"

namespace qloc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct ZernikeBasis {
  int p_max = 60;
};

struct FourierBesselBasis {
  int m_max = 20;
  int n_max = 20;
};

struct PpsCache;

// Orthonormalized projection-point-source modes: G = L L^T, coeffs = L^{-1}.
struct PpsBasis {
  double R = 0.0;
  std::vector<Point2> locations;
  Eigen::MatrixXd gram;
  Eigen::MatrixXd cholesky;
  Eigen::MatrixXd coeffs;
  std::shared_ptr<PpsCache> cache;  // background overlaps, filled on first use

  // (1/(pi R^2)) int_B K(|r_i - r|) K(|r - r_j|) dA
  const Eigen::MatrixXd& background_overlaps() const;
};

using ModeBasis = std::variant<ZernikeBasis, FourierBesselBasis, PpsBasis>;

std::string basis_name(const ModeBasis& b);

// A probability and its derivatives along the aligned axes: d/dr0 and (1/r0) d/dphi0.
struct ModeProbability {
  double p = 0.0;
  double d_r = 0.0;
  double d_t = 0.0;
};

struct ProbabilitySet {
  std::vector<ModeProbability> modes;
  ModeProbability unobserved;

  // Observed modes plus the unobserved bucket.
  double total() const;
};

ModeProbability zernike_probability(const EmissionMixture& mix, int p, int m, int sigma);
ModeProbability zernike_probability(const SourceDiskScene& scene, int p, int m, int sigma);

// int_0^1 u J_m(y u) J_m(x u) du for a zero x of J_m, with the y -> x limit, and d/dy.
double fb_overlap_integral(int m, double x, double y);
double fb_overlap_integral_deriv(int m, double x, double y);

ModeProbability fb_probability(const EmissionMixture& mix, int m, int n, int sigma);
ModeProbability fb_probability(const SourceDiskScene& scene, int m, int n, int sigma);

PpsBasis pps_basis(double R, const std::vector<Point2>& locations);
// Centered square grid with spacing 2R/n_a, points strictly inside the disk.
std::vector<Point2> pps_square_grid(double R, int n_a);
// Uniform random points inside the disk from a seeded generator.
std::vector<Point2> pps_random_layout(double R, int count, std::uint64_t seed);

ProbabilitySet mode_probabilities(const EmissionMixture& mix, const ModeBasis& basis);
ProbabilitySet mode_probabilities(const SourceDiskScene& scene, const ModeBasis& basis);
ProbabilitySet mode_probabilities(const HoleDiskScene& scene, const ModeBasis& basis);

// Sum over modes of d_mu P d_nu P / P, including the unobserved bucket.
SymMatrix2 fisher_from_probabilities(const ProbabilitySet& ps);

SymMatrix2 fi_modes(const SourceDiskScene& scene, const ModeBasis& basis);
SymMatrix2 fi_modes(const HoleDiskScene& scene, const ModeBasis& basis);

// Disk-averaged PSF (1/(pi R^2)) int_B h(|r - r'|) dA' as a function of |r|,
// from an exact finite Bessel sum.
class DiskBackground {
 public:
  explicit DiskBackground(double R);
  double operator()(double rho) const;
  double R() const { return R_; }

 private:
  double R_;
  int m_max_;
  Eigen::MatrixXd w_;
};

// Unit-area Airy PSF J1^2(2 pi d)/(pi d^2).
double psf(double d);

double di_intensity(const EmissionMixture& mix, Point2 r);
double di_intensity(const SourceDiskScene& scene, Point2 r);

struct DiOptions {
  quad::QuadSpec spec = [] {
    quad::QuadSpec s;
    s.rel_tol = 1e-7;
    s.max_evals = 20'000'000;
    return s;
  }();
  double rel_change = 1e-4;
  double r_cut_start = 0.0;  // 0 selects R + 10
  double r_cut_max = 1e5;
  quad::Execution exec = quad::Execution::Parallel;
};

struct DiResult {
  SymMatrix2 info;
  double r_cut = 0.0;
  std::size_t evals = 0;
};

DiResult fi_direct_imaging_detail(const EmissionMixture& mix, const DiOptions& opts = {});
SymMatrix2 fi_direct_imaging(const SourceDiskScene& scene, const DiOptions& opts = {});
SymMatrix2 fi_direct_imaging(const HoleDiskScene& scene, const DiOptions& opts = {});

}  // namespace qloc
