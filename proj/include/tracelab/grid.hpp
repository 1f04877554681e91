#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "tracelab/geometry.hpp"

namespace tracelab {

using geometry::Point;
using geometry::Rect;

/// Uniform cell-centered grid: nx * ny square cells of side h, row-major with
/// x fastest, lower-left corner at `origin`.
struct GridSpec {
  Point origin;
  double h = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;

  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }
  Point center(std::size_t ix, std::size_t iy) const {
    return {origin.x + (static_cast<double>(ix) + 0.5) * h,
            origin.y + (static_cast<double>(iy) + 0.5) * h};
  }
  Point center(std::size_t i) const { return center(i % nx, i / nx); }
  Rect cell(std::size_t ix, std::size_t iy) const {
    return Rect{{origin.x + static_cast<double>(ix) * h, origin.y + static_cast<double>(iy) * h},
                {h, h}};
  }
  Rect extent() const {
    return Rect{origin, {h * static_cast<double>(nx), h * static_cast<double>(ny)}};
  }

  /// Smallest grid with spacing h, corners on multiples of h, containing
  /// `box` grown by `pad` on every side.
  static GridSpec covering(const Rect& box, double h, double pad = 0.0);
};

/// Cell-centered samples of a function on Ω. `mask` marks the cells that meet
/// Ω in positive measure; unmasked cells hold 0.
struct GridFunction {
  GridSpec grid;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  /// Samples f at the centers of the cells meeting Ω.
  static GridFunction sample(const GridSpec& grid, const geometry::RectDomain& dom,
                             const std::function<double(Point)>& f);
  /// Samples f at every cell center (whole-space function).
  static GridFunction sample(const GridSpec& grid, const std::function<double(Point)>& f);

  /// Throws ParameterError if shapes disagree, h <= 0, or an unmasked cell is nonzero.
  void validate() const;

  /// Piecewise-constant value at y; 0 outside the grid or on unmasked cells.
  double operator()(Point y) const;

  GridFunction abs() const;
  GridFunction scaled(double c) const;
};

}  // namespace tracelab
