#pragma once

#include <array>
#include <cstddef>

#include "qloc/quadrature.hpp"
#include "qloc/scene.hpp"
#include "qloc/spdo_eigen.hpp"

namespace qloc {

// Background-disk matrix elements in the source-aligned frame; index 0 is the
// radial axis and 1 the azimuthal axis.
//   s0    = <K0|rho_B|K0>
//   s1[mu] = <K0|rho_B d_mu|K0>
//   s2[mu] = d_mu<K0|rho_B d_mu|K0>
//   s3[mu] = d_mu<K0|rho_B^2 d_mu|K0>
struct RhoBElements {
  double s0 = 0.0;
  std::array<double, 2> s1{};
  std::array<double, 2> s2{};
  std::array<double, 2> s3{};
};

enum class RhoBRoute {
  Quadrature,  // area integrals (4D for s3)
  Spectral,    // exact sums over the aperture basis
};

struct RhoBOptions {
  RhoBRoute route = RhoBRoute::Quadrature;
  quad::QuadSpec spec2d = quad::default_spec_2d();
  quad::QuadSpec spec4d = quad::default_spec_4d();
  quad::Execution exec = quad::Execution::Parallel;
};

RhoBElements rho_b_elements(const SourceDiskScene& scene, const RhoBOptions& opts = {});

struct PerturbativeTerms {
  SymMatrix2 k0;
  SymMatrix2 k1;
  SymMatrix2 k2;
  // Im(d_mu<K0|rho_B|K0>) Im(d_nu<K0|rho_B|K0>) contribution to K2; zero here.
  double imag_cross = 0.0;
};

PerturbativeTerms perturbative_terms(const RhoBElements& e);

// H = (1-b)(K0 + alpha K1 + alpha^2 K2) truncated at `order`.
SymMatrix2 qfi_perturbative_source(const SourceDiskScene& scene, int order = 2, const RhoBOptions& opts = {});
SymMatrix2 qfi_perturbative_source(const SourceDiskScene& scene, int order, const RhoBElements& e);

struct QfiOptions {
  std::size_t max_states = 0;  // 0 uses every retained state
  double null_warn_ratio = 1e-4;
};

struct QfiResult {
  SymMatrix2 H;
  SymMatrix2 null_term;  // contribution of the null-space projector, included in H
  bool null_warning = false;
  double eigensum = 0.0;
  int m_max = 0;
  std::size_t n_states = 0;
};

QfiResult qfi_exact_source(const EigenSystem& es, const SourceDiskScene& scene, const QfiOptions& opts = {});

// Leading-order hole QFI against the pure-disk eigenbasis.
QfiResult qfi_hole(const EigenSystem& disk, const HoleDiskScene& scene, const QfiOptions& opts = {});

// Independent route: complex Hermitian diagonalization in the lab frame with
// the general SLD formula sum 2 Re(<i|d rho|j><j|d rho|i>)/(l_i + l_j).
// The result is returned in the requested frame.
SymMatrix2 qfi_exact_source_generic(const SourceDiskScene& scene, Frame frame, const EigenOptions& opts = {});

}  // namespace qloc
