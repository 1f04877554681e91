#pragma once

#include <span>
#include <vector>

#include "tracelab/geometry.hpp"
#include "tracelab/grid.hpp"
#include "tracelab/sobolev.hpp"

namespace tracelab::membership {

/// Distance from u to the grid functions forced to zero within `delta` of D.
struct MembershipProblem {
  geometry::RectDomain dom;
  geometry::BoundarySet dirichlet;
  GridFunction u;
  double p = 2.0;
  double delta = 0.125;
  /// Stop once the Newton decrement falls below tol times the energy.
  double tol = 1e-6;
  int iteration_cap = 60;
};

struct DistanceReport {
  double distance = 0.0;  // ‖u - v*‖, the p-th root of `energy`
  double energy = 0.0;    // ‖u - v*‖^p
  double delta = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Reusable solver: the cut-cell weights are built once and shared across gaps.
class MembershipSolver {
 public:
  MembershipSolver(const geometry::RectDomain& dom, geometry::BoundarySet dirichlet,
                   GridFunction u, double p, double tol = 1e-6, int iteration_cap = 60);

  /// Minimizes over v vanishing on the delta-zone. `residual` receives
  /// w = u - v*; when it already holds a field of the right size that agrees
  /// with u on the zone it is used as an additional starting point.
  DistanceReport solve(double delta, std::vector<double>* residual = nullptr) const;

  /// Energy of u - v for a given v (v must vanish on the zone to be feasible).
  double energy_of(std::span<const double> v) const;
  /// Cells whose center lies within delta of D.
  std::vector<std::uint8_t> zone(double delta) const;

  const sobolev::Weights& weights() const { return weights_; }
  const GridFunction& u() const { return u_; }
  double p() const { return p_; }

 private:
  geometry::BoundarySet dirichlet_;
  GridFunction u_;
  double p_;
  double tol_;
  int iteration_cap_;
  sobolev::Weights weights_;
};

DistanceReport distance_to_test_space(const MembershipProblem& prob);

/// One report per gap, warm-starting each solve from the previous one.
std::vector<DistanceReport> membership_sweep(const MembershipProblem& prob,
                                             std::span<const double> deltas);

}  // namespace tracelab::membership
