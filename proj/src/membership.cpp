#include "tracelab/membership.hpp"

#include <algorithm>
#include <cmath>

#include "tracelab/errors.hpp"
#include "tracelab/parallel.hpp"

namespace tracelab::membership {

namespace {

constexpr double kCurvatureStart = 1.0;
constexpr double kCurvatureDecay = 0.25;
constexpr double kCurvatureFloor = 0.1;
constexpr double kQuadraticRtol = 1e-9;

}  // namespace

MembershipSolver::MembershipSolver(const geometry::RectDomain& dom,
                                   geometry::BoundarySet dirichlet, GridFunction u, double p,
                                   double tol, int iteration_cap)
    : dirichlet_(std::move(dirichlet)),
      u_(std::move(u)),
      p_(p),
      tol_(tol),
      iteration_cap_(iteration_cap) {
  if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("exponent p must lie in (1, inf)");
  if (!(tol > 0.0)) throw ParameterError("solver tolerance must be positive");
  u_.validate();
  weights_ = sobolev::build_weights(dom, dirichlet_, u_.grid);
  // Samples on cells that meet Ω but were not masked by the caller count as 0.
  for (std::size_t i = 0; i < u_.values.size(); ++i) {
    if (!u_.mask[i]) u_.values[i] = 0.0;
  }
}

std::vector<std::uint8_t> MembershipSolver::zone(double delta) const {
  const GridSpec& g = u_.grid;
  std::vector<std::uint8_t> z(g.size(), 0);
  if (dirichlet_.empty()) return z;
  parallel::for_each_index(g.size(), [&](std::size_t i) {
    if (weights_.active(i) && dirichlet_.distance(g.center(i)) < delta) z[i] = 1;
  });
  return z;
}

double MembershipSolver::energy_of(std::span<const double> v) const {
  std::vector<double> w(u_.values.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = u_.values[i] - v[i];
  return sobolev::energy(weights_, w, p_).total();
}

DistanceReport MembershipSolver::solve(double delta, std::vector<double>* residual) const {
  if (!(delta > 0.0)) throw ParameterError("support gap delta must be positive");
  if (u_.grid.h > 0.25 * delta) throw ParameterError("grid does not resolve delta (need h <= delta/4)");

  const std::size_t n = u_.values.size();
  const auto fixed = zone(delta);
  std::vector<std::uint8_t> free(n, 0);
  for (std::size_t i = 0; i < n; ++i) free[i] = weights_.active(i) && !fixed[i];

  // Starting points: v = 0, v = u off the zone, and an optional warm start.
  std::vector<double> w = u_.values;
  double energy = sobolev::energy(weights_, w, p_).total();
  {
    std::vector<double> t(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) t[i] = fixed[i] ? u_.values[i] : 0.0;
    const double e = sobolev::energy(weights_, t, p_).total();
    if (e < energy) {
      energy = e;
      w = std::move(t);
    }
  }
  if (residual != nullptr && residual->size() == n) {
    std::vector<double> t = *residual;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) t[i] = u_.values[i];
      if (!weights_.active(i)) t[i] = 0.0;
    }
    const double e = sobolev::energy(weights_, t, p_).total();
    if (e < energy) {
      energy = e;
      w = std::move(t);
    }
  }

  DistanceReport rep;
  rep.delta = delta;
  const bool quadratic = std::abs(p_ - 2.0) < 1e-12;
  std::vector<double> g(n), d(n), trial(n);
  // The curvature floor starts wide and tightens so that flat regions, where
  // |x|^{p-2} vanishes, do not produce huge rejected steps.
  double eps = quadratic ? kCurvatureFloor : kCurvatureStart;
  for (int it = 0; it < iteration_cap_ && energy > 0.0; ++it) {
    sobolev::gradient(weights_, w, p_, g);
    for (std::size_t i = 0; i < n; ++i) {
      if (!free[i]) g[i] = 0.0;
    }
    const auto hess = sobolev::hessian(weights_, w, p_, free, eps);
    const sobolev::Multigrid mg(hess);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
    std::fill(d.begin(), d.end(), 0.0);
    const auto cg = sobolev::pcg(hess, mg, rhs, d, quadratic ? kQuadraticRtol : 1e-2, 500);

    const double slope = parallel::block_sum(n, [&](std::size_t i) { return g[i] * d[i]; });
    rep.iterations = it + 1;
    if (eps <= kCurvatureFloor && -slope <= tol_ * energy) {
      rep.converged = true;
      break;
    }
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + step * d[i];
      const double e = sobolev::energy(weights_, trial, p_).total();
      if (e <= energy + 1e-4 * step * slope) {
        w.swap(trial);
        energy = e;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    eps = std::max(kCurvatureFloor, eps * kCurvatureDecay);
    if (moved && quadratic && step == 1.0 && cg.relative_residual <= kQuadraticRtol) {
      // A full step on an accurately solved quadratic lands on the minimizer.
      rep.converged = true;
      break;
    }
    if (!moved) {
      // No further decrease is representable; the iterate is optimal to rounding.
      rep.converged = true;
      break;
    }
  }
  if (energy == 0.0) rep.converged = true;

  rep.energy = energy;
  rep.distance = std::pow(energy, 1.0 / p_);
  if (residual != nullptr) *residual = std::move(w);
  return rep;
}

DistanceReport distance_to_test_space(const MembershipProblem& prob) {
  const MembershipSolver solver(prob.dom, prob.dirichlet, prob.u, prob.p, prob.tol,
                                prob.iteration_cap);
  return solver.solve(prob.delta);
}

std::vector<DistanceReport> membership_sweep(const MembershipProblem& prob,
                                             std::span<const double> deltas) {
  for (std::size_t k = 1; k < deltas.size(); ++k) {
    if (!(deltas[k] < deltas[k - 1])) throw ParameterError("deltas must be strictly decreasing");
  }
  const MembershipSolver solver(prob.dom, prob.dirichlet, prob.u, prob.p, prob.tol,
                                prob.iteration_cap);
  std::vector<DistanceReport> out;
  std::vector<double> w;
  for (double delta : deltas) out.push_back(solver.solve(delta, &w));
  return out;
}

}  // namespace tracelab::membership
