#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tracelab/geometry.hpp"
#include "tracelab/grid.hpp"

namespace tracelab::sobolev {

/// Cut-cell weights of the discrete W^{1,p} norm on a grid:
///   ‖w‖^p = Σ_i cell_i |w_i|^p + Σ_e edge_e |(w_j - w_i)/h|^p.
/// cell_i is |cell ∩ Ω|. An edge joins horizontally or vertically adjacent
/// cells; its weight is |dual box ∩ Ω| for the h-by-h box centered on the
/// shared face, and 0 when either cell misses Ω or the segment joining the
/// centers meets the cut set.
struct Weights {
  GridSpec grid;
  std::vector<double> cell;
  std::vector<double> edge_x;  // slot i joins i and i+1; 0 on the last column
  std::vector<double> edge_y;  // slot i joins i and i+nx; 0 on the last row

  bool active(std::size_t i) const { return cell[i] > 0.0; }
};

Weights build_weights(const geometry::RectDomain& dom, const geometry::BoundarySet& cut,
                      const GridSpec& grid);

/// |x|^p with integer exponents done by multiplication.
class Power {
 public:
  explicit Power(double p);
  double p() const { return p_; }
  double operator()(double x) const;             // |x|^p
  double derivative(double x) const;             // p |x|^{p-2} x
  double curvature(double x, double eps) const;  // p(p-1) (x² + eps²)^{(p-2)/2}

 private:
  double p_;
  int ip_;
  bool integral_;
};

struct EnergyParts {
  double zero_order = 0.0;
  double gradient = 0.0;
  double total() const { return zero_order + gradient; }
};

EnergyParts energy(const Weights& wt, std::span<const double> w, double p);
/// Serial edge-scatter reference for `energy`.
EnergyParts energy_serial(const Weights& wt, std::span<const double> w, double p);

/// Gradient of the total energy with respect to every cell value.
void gradient(const Weights& wt, std::span<const double> w, double p, std::span<double> g);
void gradient_serial(const Weights& wt, std::span<const double> w, double p,
                     std::span<double> g);

/// Sparse symmetric operator on a grid in matrix form:
///   (A v)_i = diag_i v_i - cx_{i-1} v_{i-1} - cx_i v_{i+1} - cy_{i-nx} v_{i-nx} - cy_i v_{i+nx}
/// restricted to `free` cells. Couplings to non-free cells must be zero.
struct GraphOperator {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> diag;
  std::vector<double> cx;
  std::vector<double> cy;
  std::vector<std::uint8_t> free;

  void apply(std::span<const double> v, std::span<double> out) const;
};

/// Hessian of the energy at w over the free cells, with |·|^{p-2} regularized
/// by eps.
GraphOperator hessian(const Weights& wt, std::span<const double> w, double p,
                      std::span<const std::uint8_t> free, double eps);

/// Aggregation multigrid V-cycle (2x2 piecewise-constant aggregates,
/// Galerkin coarse operators, symmetric Gauss-Seidel smoothing).
class Multigrid {
 public:
  explicit Multigrid(GraphOperator fine, int smoothing_sweeps = 2);
  void apply(std::span<const double> r, std::span<double> z) const;
  std::size_t levels() const { return levels_.size(); }

 private:
  void cycle(std::size_t level, std::span<const double> b, std::span<double> x) const;
  std::vector<GraphOperator> levels_;
  int sweeps_;
};

struct PcgResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients for A x = b on the free cells; x holds
/// the initial guess.
PcgResult pcg(const GraphOperator& a, const Multigrid& m, std::span<const double> b,
              std::span<double> x, double rtol, int max_iterations);

}  // namespace tracelab::sobolev
