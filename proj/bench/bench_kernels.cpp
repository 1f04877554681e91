#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <vector>

#include "tracelab/geometry.hpp"
#include "tracelab/membership.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/quadrature.hpp"
#include "tracelab/sobolev.hpp"

using namespace tracelab;
using namespace tracelab::geometry;

namespace {

double best_of(int reps, const std::function<void()>& f) {
  double best = 1e300;
  for (int k = 0; k < reps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double threaded) {
  std::printf("%-20s reference %9.4f s   kernel %9.4f s   ratio %6.2f\n", name, serial, threaded,
              serial / threaded);
}

}  // namespace

int main(int argc, char** argv) {
  const int level = argc > 1 ? std::atoi(argv[1]) : 10;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
  const RectDomain dom = build_fractal_domain(FractalParams{2.0, level, FractalRule::Example1, {}, {}});
  const GridSpec grid = GridSpec::covering(dom.bbox(), std::ldexp(1.0, -level));
  std::printf("domain depth %d: %zu rects, grid %zu x %zu, %d threads\n", level, dom.size(), grid.nx,
              grid.ny, parallel::threads());

  volatile double sink = 0.0;
  row("coverage_raster",
      best_of(reps, [&] { sink = quadrature::coverage_raster_serial(dom, grid.origin, grid.h, grid.nx, grid.ny)[0]; }),
      best_of(reps, [&] { sink = quadrature::coverage_raster(dom, grid.origin, grid.h, grid.nx, grid.ny)[0]; }));

  const auto wt = sobolev::build_weights(dom, fractal_dirichlet_part(), grid);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> w(grid.size()), g(grid.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = wt.active(i) ? unif(rng) : 0.0;
  for (double p : {2.0, 3.0}) {
    std::printf("p = %g\n", p);
    row("  energy", best_of(reps, [&] { sink = sobolev::energy_serial(wt, w, p).total(); }),
        best_of(reps, [&] { sink = sobolev::energy(wt, w, p).total(); }));
    row("  gradient", best_of(reps, [&] { sobolev::gradient_serial(wt, w, p, g); }),
        best_of(reps, [&] { sobolev::gradient(wt, w, p, g); }));
  }

  const auto u = GridFunction::sample(grid, dom, [](Point) { return 1.0; });
  const membership::MembershipSolver solver(dom, fractal_dirichlet_part(), u, 2.0);
  const double delta = std::ldexp(1.0, -4);
  const int threads = parallel::threads();
  parallel::set_threads(1);
  const double one = best_of(1, [&] { sink = solver.solve(delta).distance; });
  parallel::set_threads(threads);
  const double many = best_of(1, [&] { sink = solver.solve(delta).distance; });
  row("membership 1 vs N", one, many);
  return 0;
}
