#include "tracelab/sobolev.hpp"

#include <algorithm>
#include <cmath>

#include "tracelab/errors.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/quadrature.hpp"

namespace tracelab::sobolev {

namespace {

double ipow(double a, int n) {
  double r = 1.0;
  while (n > 0) {
    if (n & 1) r *= a;
    a *= a;
    n >>= 1;
  }
  return r;
}

double dot(std::span<const double> a, std::span<const double> b,
           std::span<const std::uint8_t> free) {
  return parallel::block_sum(a.size(), [&](std::size_t i) { return free[i] ? a[i] * b[i] : 0.0; });
}

GraphOperator coarsen(const GraphOperator& f) {
  GraphOperator c;
  c.nx = (f.nx + 1) / 2;
  c.ny = (f.ny + 1) / 2;
  const std::size_t n = c.nx * c.ny;
  c.diag.assign(n, 0.0);
  c.cx.assign(n, 0.0);
  c.cy.assign(n, 0.0);
  c.free.assign(n, 0);
  for (std::size_t iy = 0; iy < f.ny; ++iy) {
    for (std::size_t ix = 0; ix < f.nx; ++ix) {
      const std::size_t i = iy * f.nx + ix;
      if (!f.free[i]) continue;
      const std::size_t I = (iy / 2) * c.nx + ix / 2;
      c.free[I] = 1;
      c.diag[I] += f.diag[i];
      if (ix + 1 < f.nx) {
        if (ix % 2 == 0) {
          c.diag[I] -= 2.0 * f.cx[i];
        } else {
          c.cx[I] += f.cx[i];
        }
      }
      if (iy + 1 < f.ny) {
        if (iy % 2 == 0) {
          c.diag[I] -= 2.0 * f.cy[i];
        } else {
          c.cy[I] += f.cy[i];
        }
      }
    }
  }
  for (std::size_t I = 0; I < n; ++I) {
    if (!c.free[I]) c.diag[I] = 1.0;
  }
  return c;
}

double neighbor_sum(const GraphOperator& a, std::span<const double> x, std::size_t i) {
  const std::size_t ix = i % a.nx;
  double s = 0.0;
  if (ix + 1 < a.nx) s += a.cx[i] * x[i + 1];
  if (ix > 0) s += a.cx[i - 1] * x[i - 1];
  if (i + a.nx < x.size()) s += a.cy[i] * x[i + a.nx];
  if (i >= a.nx) s += a.cy[i - a.nx] * x[i - a.nx];
  return s;
}

void gauss_seidel(const GraphOperator& a, std::span<const double> b, std::span<double> x,
                  bool forward) {
  const std::size_t n = a.diag.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = forward ? k : n - 1 - k;
    if (!a.free[i]) continue;
    x[i] = (b[i] + neighbor_sum(a, x, i)) / a.diag[i];
  }
}

}  // namespace

Weights build_weights(const geometry::RectDomain& dom, const geometry::BoundarySet& cut,
                      const GridSpec& grid) {
  const std::size_t nx = grid.nx, ny = grid.ny;
  const double h = grid.h;
  Weights wt{grid, quadrature::coverage_raster(dom, grid.origin, h, nx, ny),
             std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), 0.0)};
  if (nx > 1) {
    const auto dual = quadrature::coverage_raster(
        dom, {grid.origin.x + 0.5 * h, grid.origin.y}, h, nx - 1, ny);
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t ix = 0; ix + 1 < nx; ++ix)
        wt.edge_x[iy * nx + ix] = dual[iy * (nx - 1) + ix];
  }
  if (ny > 1) {
    const auto dual = quadrature::coverage_raster(
        dom, {grid.origin.x, grid.origin.y + 0.5 * h}, h, nx, ny - 1);
    std::copy(dual.begin(), dual.end(), wt.edge_y.begin());
  }
  // Partially covered dual boxes keep only the fibers joining the two centers
  // inside Ω, so cells separated by a gap narrower than h stay decoupled.
  const double full = h * h * (1.0 - 1e-12);
  parallel::for_each_index(grid.size(), [&](std::size_t i) {
    const std::size_t ix = i % nx;
    if (wt.edge_x[i] > 0.0) {
      const std::size_t j = i + 1;
      if (ix + 1 >= nx || !wt.active(i) || !wt.active(j) ||
          (!cut.empty() && cut.intersects_segment(grid.center(i), grid.center(j)))) {
        wt.edge_x[i] = 0.0;
      } else if (wt.edge_x[i] < full) {
        const Point a = grid.center(i);
        wt.edge_x[i] = quadrature::fiber_area(dom, Rect{{a.x, a.y - 0.5 * h}, {h, h}}, false);
      }
    }
    if (wt.edge_y[i] > 0.0) {
      const std::size_t j = i + nx;
      if (j >= grid.size() || !wt.active(i) || !wt.active(j) ||
          (!cut.empty() && cut.intersects_segment(grid.center(i), grid.center(j)))) {
        wt.edge_y[i] = 0.0;
      } else if (wt.edge_y[i] < full) {
        const Point a = grid.center(i);
        wt.edge_y[i] = quadrature::fiber_area(dom, Rect{{a.x - 0.5 * h, a.y}, {h, h}}, true);
      }
    }
  });
  return wt;
}

Power::Power(double p) : p_(p), ip_(static_cast<int>(std::lround(p))) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("exponent must be finite and >= 1");
  integral_ = std::abs(p - ip_) < 1e-12 && ip_ <= 32;
}

double Power::operator()(double x) const {
  const double a = std::abs(x);
  return integral_ ? ipow(a, ip_) : std::pow(a, p_);
}

double Power::derivative(double x) const {
  if (x == 0.0) return 0.0;
  const double a = std::abs(x);
  if (integral_ && ip_ >= 2) return p_ * ipow(a, ip_ - 2) * x;
  return p_ * std::pow(a, p_ - 1.0) * (x > 0.0 ? 1.0 : -1.0);
}

double Power::curvature(double x, double eps) const {
  const double s = x * x + eps * eps;
  if (integral_ && ip_ >= 2 && ip_ % 2 == 0) return p_ * (p_ - 1.0) * ipow(s, (ip_ - 2) / 2);
  return p_ * (p_ - 1.0) * std::pow(s, 0.5 * (p_ - 2.0));
}

EnergyParts energy(const Weights& wt, std::span<const double> w, double p) {
  const Power pw(p);
  const std::size_t nx = wt.grid.nx;
  const double inv_h = 1.0 / wt.grid.h;
  EnergyParts e;
  e.zero_order = parallel::block_sum(w.size(), [&](std::size_t i) {
    return wt.cell[i] > 0.0 ? wt.cell[i] * pw(w[i]) : 0.0;
  });
  e.gradient = parallel::block_sum(w.size(), [&](std::size_t i) {
    double s = 0.0;
    if (wt.edge_x[i] > 0.0) s += wt.edge_x[i] * pw((w[i + 1] - w[i]) * inv_h);
    if (wt.edge_y[i] > 0.0) s += wt.edge_y[i] * pw((w[i + nx] - w[i]) * inv_h);
    return s;
  });
  return e;
}

EnergyParts energy_serial(const Weights& wt, std::span<const double> w, double p) {
  const std::size_t nx = wt.grid.nx, ny = wt.grid.ny;
  const double h = wt.grid.h;
  EnergyParts e;
  for (std::size_t i = 0; i < w.size(); ++i) e.zero_order += wt.cell[i] * std::pow(std::abs(w[i]), p);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
      const std::size_t i = iy * nx + ix;
      e.gradient += wt.edge_x[i] * std::pow(std::abs(w[i + 1] - w[i]) / h, p);
    }
  }
  for (std::size_t iy = 0; iy + 1 < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const std::size_t i = iy * nx + ix;
      e.gradient += wt.edge_y[i] * std::pow(std::abs(w[i + nx] - w[i]) / h, p);
    }
  }
  return e;
}

void gradient(const Weights& wt, std::span<const double> w, double p, std::span<double> g) {
  const Power pw(p);
  const std::size_t nx = wt.grid.nx;
  const double inv_h = 1.0 / wt.grid.h;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(w.size()); ++s) {
    const auto i = static_cast<std::size_t>(s);
    double gi = wt.cell[i] > 0.0 ? wt.cell[i] * pw.derivative(w[i]) : 0.0;
    if (wt.edge_x[i] > 0.0) gi -= wt.edge_x[i] * pw.derivative((w[i + 1] - w[i]) * inv_h) * inv_h;
    if (wt.edge_y[i] > 0.0) gi -= wt.edge_y[i] * pw.derivative((w[i + nx] - w[i]) * inv_h) * inv_h;
    if (i >= 1 && wt.edge_x[i - 1] > 0.0)
      gi += wt.edge_x[i - 1] * pw.derivative((w[i] - w[i - 1]) * inv_h) * inv_h;
    if (i >= nx && wt.edge_y[i - nx] > 0.0)
      gi += wt.edge_y[i - nx] * pw.derivative((w[i] - w[i - nx]) * inv_h) * inv_h;
    g[i] = gi;
  }
}

void gradient_serial(const Weights& wt, std::span<const double> w, double p,
                     std::span<double> g) {
  const std::size_t nx = wt.grid.nx;
  const double h = wt.grid.h;
  auto dpow = [p](double x) {
    return x == 0.0 ? 0.0 : p * std::pow(std::abs(x), p - 1.0) * (x > 0 ? 1.0 : -1.0);
  };
  std::fill(g.begin(), g.end(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) g[i] += wt.cell[i] * dpow(w[i]);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (wt.edge_x[i] > 0.0) {
      const double t = wt.edge_x[i] * dpow((w[i + 1] - w[i]) / h) / h;
      g[i] -= t;
      g[i + 1] += t;
    }
    if (wt.edge_y[i] > 0.0) {
      const double t = wt.edge_y[i] * dpow((w[i + nx] - w[i]) / h) / h;
      g[i] -= t;
      g[i + nx] += t;
    }
  }
}

void GraphOperator::apply(std::span<const double> v, std::span<double> out) const {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(diag.size()); ++s) {
    const auto i = static_cast<std::size_t>(s);
    out[i] = free[i] ? diag[i] * v[i] - neighbor_sum(*this, v, i) : 0.0;
  }
}

GraphOperator hessian(const Weights& wt, std::span<const double> w, double p,
                      std::span<const std::uint8_t> free, double eps) {
  const Power pw(p);
  const std::size_t n = w.size(), nx = wt.grid.nx;
  const double inv_h = 1.0 / wt.grid.h;
  GraphOperator a;
  a.nx = nx;
  a.ny = wt.grid.ny;
  a.diag.assign(n, 0.0);
  a.cx.assign(n, 0.0);
  a.cy.assign(n, 0.0);
  a.free.assign(free.begin(), free.end());
  // Edge couplings first, then gather per cell to keep the writes disjoint.
  std::vector<double> ex(n, 0.0), ey(n, 0.0);
  parallel::for_each_index(n, [&](std::size_t i) {
    if (wt.edge_x[i] > 0.0)
      ex[i] = wt.edge_x[i] * pw.curvature((w[i + 1] - w[i]) * inv_h, eps) * inv_h * inv_h;
    if (wt.edge_y[i] > 0.0)
      ey[i] = wt.edge_y[i] * pw.curvature((w[i + nx] - w[i]) * inv_h, eps) * inv_h * inv_h;
  });
  parallel::for_each_index(n, [&](std::size_t i) {
    if (!free[i]) {
      a.diag[i] = 1.0;
      return;
    }
    double d = wt.cell[i] * pw.curvature(w[i], eps) + ex[i] + ey[i];
    if (i >= 1) d += ex[i - 1];
    if (i >= nx) d += ey[i - nx];
    a.diag[i] = d;
    if (ex[i] > 0.0 && free[i + 1]) a.cx[i] = ex[i];
    if (ey[i] > 0.0 && free[i + nx]) a.cy[i] = ey[i];
  });
  return a;
}

Multigrid::Multigrid(GraphOperator fine, int smoothing_sweeps) : sweeps_(smoothing_sweeps) {
  levels_.push_back(std::move(fine));
  while (levels_.back().diag.size() > 64 && levels_.size() < 20) {
    levels_.push_back(coarsen(levels_.back()));
  }
}

void Multigrid::apply(std::span<const double> r, std::span<double> z) const {
  std::fill(z.begin(), z.end(), 0.0);
  cycle(0, r, z);
}

void Multigrid::cycle(std::size_t level, std::span<const double> b, std::span<double> x) const {
  const GraphOperator& a = levels_[level];
  if (level + 1 == levels_.size()) {
    for (int s = 0; s < 50; ++s) {
      gauss_seidel(a, b, x, true);
      gauss_seidel(a, b, x, false);
    }
    return;
  }
  for (int s = 0; s < sweeps_; ++s) gauss_seidel(a, b, x, true);
  const std::size_t n = a.diag.size();
  std::vector<double> r(n);
  a.apply(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = a.free[i] ? b[i] - r[i] : 0.0;
  const GraphOperator& c = levels_[level + 1];
  std::vector<double> rc(c.diag.size(), 0.0), xc(c.diag.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!a.free[i]) continue;
    const std::size_t I = ((i / a.nx) / 2) * c.nx + (i % a.nx) / 2;
    rc[I] += r[i];
  }
  cycle(level + 1, rc, xc);
  // Piecewise-constant prolongation undershoots smooth errors; scale the
  // correction to minimize the energy of the updated error.
  std::vector<double> e(n, 0.0), ae(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (a.free[i]) e[i] = xc[((i / a.nx) / 2) * c.nx + (i % a.nx) / 2];
  }
  a.apply(e, ae);
  const double num = dot(e, r, a.free), den = dot(e, ae, a.free);
  const double scale = den > 0.0 && num > 0.0 ? num / den : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a.free[i]) x[i] += scale * e[i];
  }
  for (int s = 0; s < sweeps_; ++s) gauss_seidel(a, b, x, false);
}

PcgResult pcg(const GraphOperator& a, const Multigrid& m, std::span<const double> b,
              std::span<double> x, double rtol, int max_iterations) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), q(n);
  a.apply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = a.free[i] ? b[i] - q[i] : 0.0;
  const double bnorm = std::sqrt(dot(b, b, a.free));
  PcgResult res;
  if (bnorm == 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      if (a.free[i]) x[i] = 0.0;
    return res;
  }
  m.apply(r, z);
  p = z;
  std::vector<double> z_old = z;
  double rz = dot(r, z, a.free);
  for (int it = 1; it <= max_iterations; ++it) {
    a.apply(p, q);
    const double pq = dot(p, q, a.free);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      if (!a.free[i]) continue;
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    res.iterations = it;
    res.relative_residual = std::sqrt(dot(r, r, a.free)) / bnorm;
    if (res.relative_residual <= rtol) break;
    // The scaled coarse correction makes the preconditioner mildly nonlinear,
    // so beta uses the flexible (Polak-Ribiere) form.
    m.apply(r, z);
    const double rz_new = dot(r, z, a.free);
    const double rz_old = parallel::block_sum(
        n, [&](std::size_t i) { return a.free[i] ? r[i] * z_old[i] : 0.0; });
    const double beta = std::max(0.0, (rz_new - rz_old) / rz);
    rz = rz_new;
    z_old = z;
    for (std::size_t i = 0; i < n; ++i) p[i] = a.free[i] ? z[i] + beta * p[i] : 0.0;
  }
  return res;
}

}  // namespace tracelab::sobolev
