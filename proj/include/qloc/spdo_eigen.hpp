#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qloc/quadrature.hpp"
#include "qloc/scene.hpp"

namespace qloc {

enum class Parity { Even, Odd };
enum class Axis { Radial = 0, Azimuthal = 1 };

const char* parity_name(Parity p);

// Complex-Zernike index (m, n), n = -m, -m+2, ..., m.
struct BasisIndex {
  int m = 0;
  int n = 0;
};

// B_m(r) = J_{m+1}(2 pi r)/(2 pi r) for m = 0..m_max, and its r-derivative.
std::vector<double> aperture_radial(int m_max, double r);
std::vector<double> aperture_radial_deriv(int m_max, double r);

// Lexicographic order: m ascending, then n ascending.
std::vector<BasisIndex> zernike_indices(int m_max);
std::size_t zernike_index_of(int m, int n);

// SPDO matrix in the aperture basis (lexicographic order). r0 below 1e-9 uses
// the limit J_{m+1}(2 pi r0)/r0 -> pi delta_{m0}.
Eigen::MatrixXd build_m_matrix(const SourceDiskScene& scene, int m_max);

struct EigenOptions {
  int m_max = 0;  // 0 selects ceil(2 pi R) + 20
  int m_max_step = 10;
  int m_max_limit = 120;
  double lambda_floor = 1e-12;
  double eigensum_tol = 1e-9;
  double eigensum_hard_tol = 1e-6;
};

// Truncated SPDO spectrum. States are stored in the parity-adapted basis:
// even functions cos(n(phi - phi0)) with n >= 0, odd functions sin(n(phi - phi0))
// with n > 0, each of unit norm in the aperture space.
class EigenSystem {
 public:
  double R = 0.0;
  double b = 0.0;
  double r0 = 0.0;
  double phi0 = 0.0;
  int m_max = 0;
  std::size_t dimension = 0;    // full basis size
  double eigensum = 0.0;        // all computed eigenvalues, including discarded ones
  double lambda_floor = 0.0;

  std::vector<double> eigenvalues;  // retained, non-increasing, even listed first on ties
  std::vector<Parity> parity;
  std::vector<std::size_t> column;  // column of the state in its parity block

  std::vector<BasisIndex> even_basis;  // (m, n >= 0)
  std::vector<BasisIndex> odd_basis;   // (m, n > 0)
  Eigen::MatrixXd even_vectors;        // even_basis.size() x retained even states
  Eigen::MatrixXd odd_vectors;

  std::size_t n_retained() const { return eigenvalues.size(); }

  // Unit eigenvector in the full lexicographic aperture basis.
  Eigen::VectorXd unit_vector(std::size_t i) const;
  // Fourier-Bessel coefficient C_mn = 2 v_mn / lambda.
  double coefficient(std::size_t i, int m, int n) const;
};

EigenSystem solve_eigensystem(const SourceDiskScene& scene, const EigenOptions& opts = {});
EigenSystem disk_eigensystem(double R, const EigenOptions& opts = {});

// C_i(r, phi). Finite at r = 0.
double eigenfunction_value(const EigenSystem& es, std::size_t i, double r, double phi);

// a_i = <lambda_i|K_r> = lambda_i C_i(r) at (r, phi0), for every retained state.
std::vector<double> state_overlaps(const EigenSystem& es, double r);

// Q_{i mu} = <lambda_i| d_mu |K_0> for a point at (r, phi0), aligned axes,
// from the closed-form aperture coefficients. Row i, column mu.
Eigen::MatrixXd q_matrix(const EigenSystem& es, double r);

// Area-integral route: (2 w/(pi R^2)) int_B C_i g(|r - r0|) (x_mu - x0_mu) dA,
// w = b for the source problem and 1 for the pure disk.
double q_matrix_element(const EigenSystem& es, std::size_t i, Axis mu, const SourceDiskScene& scene,
                        const quad::QuadSpec& spec = quad::default_spec_2d());
double q_matrix_element(const EigenSystem& es, std::size_t i, Axis mu, const HoleDiskScene& scene,
                        const quad::QuadSpec& spec = quad::default_spec_2d());
// Same integral for all states at once; background weight w as above.
Eigen::MatrixXd q_matrix_quadrature(const EigenSystem& es, double r0, double phi0, double weight,
                                    std::size_t n_states, const quad::QuadSpec& spec,
                                    quad::Execution exec = quad::Execution::Parallel);

}  // namespace qloc
