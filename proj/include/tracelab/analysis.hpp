#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "tracelab/geometry.hpp"
#include "tracelab/grid.hpp"

namespace tracelab::analysis {

using ScalarField = std::function<double(Point)>;

struct Estimate {
  double value = 0.0;
  double err = 0.0;
};

struct AverageEntry {
  double r = 0.0;
  double value = 0.0;
  double err = 0.0;
};

/// Ball averages at one boundary point over a decreasing radius ladder.
struct AverageSeries {
  Point x;
  std::vector<AverageEntry> entries;

  /// Throws ParameterError unless radii strictly decrease and values, errs are >= 0.
  void validate() const;
};

struct TraceVerdict {
  bool vanishing = false;
  /// Least-squares slope of log value against log r. +inf when some value is 0.
  double slope = 0.0;
  double smallest_value = 0.0;
  bool slope_is_sentinel = false;
};

/// (1/(π r²)) ∫_{B(x,r) ∩ Ω} |u| dy with error at most tol. Note the full ball
/// measure in the normalizer.
Estimate interior_average(const geometry::RectDomain& dom, const ScalarField& u, Point x,
                          double r, double tol,
                          std::size_t cell_budget = geometry::default_cell_budget());
/// Same for a piecewise-constant grid function; each grid cell is integrated
/// separately so the jumps between cells cost nothing.
Estimate interior_average(const geometry::RectDomain& dom, const GridFunction& u, Point x,
                          double r, double tol,
                          std::size_t cell_budget = geometry::default_cell_budget());

/// Average of v (or |v|) over the whole ball B(x,r), computed exactly cell by
/// cell. Throws CoverageError when the ball leaves the grid.
Estimate full_ball_average(const GridFunction& v, Point x, double r, bool signed_average);

AverageSeries average_series(const geometry::RectDomain& dom, const ScalarField& u, Point x,
                             std::span<const double> radii, double tol);
AverageSeries average_series(const geometry::RectDomain& dom, const GridFunction& u, Point x,
                             std::span<const double> radii, double tol);

/// vanishing := slope >= slope_min and smallest value < tol_value. Needs at
/// least 4 entries.
TraceVerdict trace_verdict(const AverageSeries& series, double tol_value, double slope_min);

struct HardyResult {
  double value = 0.0;        // estimate, or the partial sum when diverging
  double err = 0.0;          // error bound of the estimate
  double lower_bound = 0.0;  // certified for |u| constant on each cell
  bool diverging = false;    // lower bound passed the ceiling
  std::size_t cells = 0;
};

struct HardyOptions {
  double tol = 1e-3;  // relative
  double ceiling = std::numeric_limits<double>::infinity();
  std::size_t cell_budget = geometry::default_cell_budget();
};

/// ∫_Ω |u / dist(·, D)|^p dy by subdivision quadrature. Throws PrecisionError
/// when neither the tolerance nor the ceiling is reached within the budget.
HardyResult hardy_functional(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                             const ScalarField& u, double p, const HardyOptions& opt = {});
HardyResult hardy_functional(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                             const GridFunction& u, double p, const HardyOptions& opt = {});

struct HardyRatio {
  double value = 0.0;  // +inf when the numerator diverges
  HardyResult numerator;
  double denominator = 0.0;  // discrete ‖u‖_p^p + ‖∇u‖_p^p
};

/// Hardy functional over the discrete W^{1,p} norm of u. Throws DomainError
/// when u has zero norm.
HardyRatio hardy_ratio(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                       const GridFunction& u, double p, const HardyOptions& opt = {});
/// Numerator from the callable, denominator from its samples on `grid`.
HardyRatio hardy_ratio(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                       const ScalarField& u, const GridSpec& grid, double p,
                       const HardyOptions& opt = {});

}  // namespace tracelab::analysis
