#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tracelab/geometry.hpp"

namespace tracelab::quadrature {

using geometry::Point;
using geometry::Rect;
using ScalarField = std::function<double(Point)>;

/// Exact area of the closed disk B(c, radius) intersected with `box`.
double disk_rect_area(const Rect& box, Point c, double radius);

/// Exact area of the union of `rects[idx]` clipped to `clip`.
double union_area(std::span<const Rect> rects, std::span<const std::uint32_t> idx,
                  const Rect& clip);

/// Exact area of Ω ∩ box by recursive splitting down to small candidate sets.
double area_in_box(const geometry::RectDomain& dom, const Rect& box);

/// Splits Ω ∩ box into disjoint rectangles (vertical slabs times merged
/// intervals). Returns false, leaving `out` empty, when more than
/// `max_candidates` rectangles meet the box.
bool disjoint_pieces(const geometry::RectDomain& dom, const Rect& box, std::vector<Rect>& out,
                     std::size_t max_candidates = 48);

/// Area of the points of `box` whose whole fiber through the box, vertical
/// when `vertical` is set and horizontal otherwise, lies in Ω.
double fiber_area(const geometry::RectDomain& dom, const Rect& box, bool vertical);

/// Smallest and largest distance from `c` to points of the closed box.
double min_distance(const Rect& box, Point c);
double max_distance(const Rect& box, Point c);

struct QuadratureResult {
  double value = 0.0;
  double err = 0.0;
  std::size_t cells = 0;
};

/// ∫_{B(c,r) ∩ Ω} f dy by quadtree subdivision of the ball's bounding square.
/// A null `f` integrates the constant 1, in which case every resolved cell is
/// exact and only the cells left straddling at the end contribute to `err`.
/// Throws PrecisionError when `tol` cannot be reached within `cell_budget`.
/// A non-null `clip` restricts the integration region to that box.
QuadratureResult integrate_over_ball(const geometry::RectDomain& dom, Point c, double r,
                                     const ScalarField* f, double tol,
                                     std::size_t cell_budget, const Rect* clip = nullptr);

/// Area of Ω inside each cell of the nx-by-ny grid with lower-left corner
/// `origin` and spacing h, row-major with x fastest. Parallel over cells.
std::vector<double> coverage_raster(const geometry::RectDomain& dom, Point origin, double h,
                                    std::size_t nx, std::size_t ny);

/// Serial reference for coverage_raster: brute force over every rectangle.
std::vector<double> coverage_raster_serial(const geometry::RectDomain& dom, Point origin,
                                           double h, std::size_t nx, std::size_t ny);

}  // namespace tracelab::quadrature
