#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace qloc::quad {

struct QuadSpec {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  std::size_t max_evals = 4'000'000;

  void validate() const;
};

QuadSpec default_spec_2d();
QuadSpec default_spec_4d();

enum class Execution { Serial, Parallel };

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
  bool converged = false;

  // Throws NonConvergence naming `what` when the tolerance was not met.
  double value_or_throw(std::string_view what) const;
};

struct VecQuadResult {
  std::vector<double> value;
  std::vector<double> error;
  std::size_t evals = 0;
  bool converged = false;

  const std::vector<double>& value_or_throw(std::string_view what) const;
};

// Axis-aligned box [lo, hi] in up to four dimensions.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

// f(x, out): x has the box dimension, out has fdim entries.
using VecIntegrand = std::function<void(std::span<const double>, std::span<double>)>;

// h-adaptive cubature over a union of boxes: Gauss-Kronrod 7/15 in 1D,
// Genz-Malik 7/5 in 2D and above. Regions are split in deterministic batches;
// Parallel evaluates each batch with OpenMP and gives the same bits as Serial.
// Convergence: max_k err_k <= max(abs_tol, rel_tol * max_k |I_k|).
VecQuadResult cubature(const VecIntegrand& f, std::size_t fdim, const std::vector<Box>& boxes,
                       const QuadSpec& spec, Execution exec = Execution::Parallel);

// Uniform grid of n[0] x n[1] x ... boxes covering [lo, hi].
std::vector<Box> grid_boxes(const std::vector<double>& lo, const std::vector<double>& hi,
                            const std::vector<int>& n);

using Field = std::function<double(double x, double y)>;
using PairField = std::function<double(double x, double y, double xp, double yp)>;
// f(x, y, out) for vector-valued fields on the plane.
using VecField = std::function<void(double x, double y, std::span<double>)>;

QuadResult integrate_radial(const std::function<double(double)>& f, double a, double b,
                            const QuadSpec& spec, int pieces = 1);

// Polar mapping with Jacobian r; adaptive in both r and phi.
QuadResult integrate_disk(const Field& f, double R, const QuadSpec& spec,
                          Execution exec = Execution::Parallel);
VecQuadResult integrate_disk(const VecField& f, std::size_t fdim, double R, const QuadSpec& spec,
                             Execution exec = Execution::Parallel);

QuadResult integrate_disk_pair(const PairField& f, double R, const QuadSpec& spec,
                               Execution exec = Execution::Parallel);
using VecPairField = std::function<void(double x, double y, double xp, double yp, std::span<double>)>;
VecQuadResult integrate_disk_pair(const VecPairField& f, std::size_t fdim, double R,
                                  const QuadSpec& spec, Execution exec = Execution::Parallel);

// Integral over |r| <= r_cut.
QuadResult integrate_plane(const Field& f, double r_cut, const QuadSpec& spec,
                           Execution exec = Execution::Parallel);

// Integral over r_in <= |r| <= r_out.
VecQuadResult integrate_annulus(const VecField& f, std::size_t fdim, double r_in, double r_out,
                                const QuadSpec& spec, Execution exec = Execution::Parallel);

}  // namespace qloc::quad
