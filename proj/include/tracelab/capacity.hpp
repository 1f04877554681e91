#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "tracelab/geometry.hpp"
#include "tracelab/grid.hpp"

namespace tracelab::capacity {

/// G₁(r) for the first-order Bessel kernel in the plane, by trapezoidal
/// quadrature of the heat-kernel subordination integral
///   G₁(r) = (4π^{3/2})^{-1} ∫_0^∞ e^{-t - r²/(4t)} t^{-3/2} dt.
/// Throws DomainError at r = 0.
double bessel_g1(double r);
double bessel_g1(Point x);

/// Radial mass ∫_0^ρ G₁(s) s ds, so that ∫_{|y|<ρ} G₁ = 2π · radial_mass(ρ),
/// from the same subordination integral.
double bessel_radial_mass(double rho);

/// Log-spaced samples of G₁ and its radial mass with cubic interpolation in
/// log-log coordinates.
class BesselKernelTable {
 public:
  BesselKernelTable(double r_min, double r_max, std::size_t n);

  /// Shared table on [1e-7, 60].
  static const BesselKernelTable& standard();

  double r_min() const { return radii_.front(); }
  double r_max() const { return radii_.back(); }
  std::span<const double> radii() const { return radii_; }
  std::span<const double> values() const { return g_; }
  std::span<const double> masses() const { return m_; }

  /// Interpolated G₁(r); r must lie in [r_min, r_max].
  double g(double r) const;
  /// Interpolated radial mass; linear below r_min and constant above r_max.
  double mass(double rho) const;

  /// 2π ∫ G₁(r) r dr over the table by the trapezoid rule in log r, plus the
  /// small-radius piece.
  double total_mass() const;

  /// CSV with columns r, g1, radial_mass.
  void write_csv(std::ostream& os) const;

 private:
  double interpolate(const std::vector<double>& logv, double r) const;

  std::vector<double> radii_;
  std::vector<double> g_;
  std::vector<double> m_;
  std::vector<double> log_g_;
  std::vector<double> log_m_;
  double log_r0_ = 0.0;
  double dlog_ = 0.0;
};

/// ∫_cell G₁(e - y) dy: polar decomposition about e near the cell, 2x2 Gauss
/// far from it.
double cell_kernel(Point e, const Rect& cell);

struct CapacityProblem {
  std::vector<Point> points;  // E
  GridSpec grid;              // support of f
  double p = 2.0;
  double tol = 1e-3;
  int iteration_cap = 200;

  /// Grid of spacing h covering E padded by `margin` on every side.
  static CapacityProblem around(std::vector<Point> points, double h, double p,
                                double margin = 4.0, double tol = 1e-3);
  /// Throws ParameterError unless E is nonempty, p in (1, inf) and tol > 0.
  void validate() const;
};

struct CapacityEstimate {
  double value = 0.0;        // Σ f_i^p h² of the scaled feasible iterate
  double lower_bound = 0.0;  // dual objective
  double gap = 0.0;          // value - lower_bound
  double residual = 0.0;     // max_j (1 - (K f)_j)_+ before the final scaling
  int iterations = 0;
  std::vector<double> f;  // returned density on the grid
};

/// Minimizes Σ f_i^p h² over f >= 0 with Σ_i K_ji f_i >= 1 for every e_j,
/// K_ji = ∫_{cell i} G₁(e_j - y) dy, by projected Newton ascent on the dual.
/// Throws ConvergenceError carrying the best certified value when the
/// iteration cap is hit.
CapacityEstimate estimate_capacity(const CapacityProblem& prob);

/// 2n+1 equispaced points on {0} x [-1, 1].
std::vector<Point> segment_cloud(int n);

/// estimate_capacity for the segment cloud on grids of spacing hs[k] with
/// margin 4.
std::vector<CapacityEstimate> capacity_of_segment_refinement_study(
    double p, std::span<const double> hs, int cloud_half_count = 16, double tol = 1e-3);

}  // namespace tracelab::capacity
