#include "tracelab/grid.hpp"

#include <cmath>

#include "tracelab/errors.hpp"
#include "tracelab/quadrature.hpp"

namespace tracelab {

GridSpec GridSpec::covering(const Rect& box, double h, double pad) {
  if (!(h > 0.0)) throw ParameterError("grid spacing must be positive");
  const double x0 = std::floor((box.x0() - pad) / h) * h;
  const double y0 = std::floor((box.y0() - pad) / h) * h;
  const double x1 = std::ceil((box.x1() + pad) / h) * h;
  const double y1 = std::ceil((box.y1() + pad) / h) * h;
  return GridSpec{{x0, y0}, h, static_cast<std::size_t>(std::llround((x1 - x0) / h)),
                  static_cast<std::size_t>(std::llround((y1 - y0) / h))};
}

GridFunction GridFunction::sample(const GridSpec& grid, const geometry::RectDomain& dom,
                                  const std::function<double(Point)>& f) {
  GridFunction g{grid, std::vector<double>(grid.size(), 0.0),
                 std::vector<std::uint8_t>(grid.size(), 0)};
  const auto cover = quadrature::coverage_raster(dom, grid.origin, grid.h, grid.nx, grid.ny);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (cover[i] > 0.0) {
      g.mask[i] = 1;
      g.values[i] = f(grid.center(i));
    }
  }
  return g;
}

GridFunction GridFunction::sample(const GridSpec& grid, const std::function<double(Point)>& f) {
  GridFunction g{grid, std::vector<double>(grid.size(), 0.0),
                 std::vector<std::uint8_t>(grid.size(), 1)};
  for (std::size_t i = 0; i < grid.size(); ++i) g.values[i] = f(grid.center(i));
  return g;
}

void GridFunction::validate() const {
  if (!(grid.h > 0.0)) throw ParameterError("grid spacing must be positive");
  if (values.size() != grid.size() || mask.size() != grid.size()) {
    throw ParameterError("grid function arrays do not match the grid shape");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i] && values[i] != 0.0) throw ParameterError("unmasked cell carries a value");
  }
}

double GridFunction::operator()(Point y) const {
  const double fx = (y.x - grid.origin.x) / grid.h;
  const double fy = (y.y - grid.origin.y) / grid.h;
  if (fx < 0.0 || fy < 0.0) return 0.0;
  const auto ix = static_cast<std::size_t>(fx);
  const auto iy = static_cast<std::size_t>(fy);
  if (ix >= grid.nx || iy >= grid.ny) return 0.0;
  return values[grid.index(ix, iy)];
}

GridFunction GridFunction::abs() const {
  GridFunction g = *this;
  for (double& v : g.values) v = std::abs(v);
  return g;
}

GridFunction GridFunction::scaled(double c) const {
  GridFunction g = *this;
  for (double& v : g.values) v *= c;
  return g;
}

}  // namespace tracelab
