// Implicit finite-difference solver for the degenerate equation
//
//     dY/dt = rho1 * Lap( Phi(rho2) * Phi_delta(Y) ),   Phi(r) = |r|^m sgn(r),
//
// on a uniform grid with strongly imposed Dirichlet data. Each step is
// backward Euler with the coefficients frozen at the new time level; the
// resulting cellwise-monotone system is solved by damped Newton iteration
// (tridiagonal solve in 1D, sparse LU in 2D).
//
// For rho2 >= 0 we have Phi(rho2 * Y) = Phi(rho2) * Phi(Y), so with
// delta = 0 this is exactly dY/dt = rho1 Lap Phi(rho2 Y).
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spme/grid.hpp"

namespace spme {

class NoiseField;

using Field = std::vector<double>;

/// Fills `out` (one value per grid node) with a coefficient at time t.
using NodalCoefficient = std::function<void(double t, std::span<double> out)>;
/// Dirichlet value at a pinned node.
using BoundaryData = std::function<double(double t, const Point& x)>;

NodalCoefficient constant_coefficient(double value);
BoundaryData constant_boundary(double value);

struct SolverParams {
  double m = 2.0;
  /// Regularization Phi_delta(r) = Phi(r) + delta r. Defaults to
  /// 1e-6 * ||Y0||_inf^(m-1) when unset.
  std::optional<double> delta_reg;
  double dt = 1e-3;
  double t_start = 0.0;
  double t_end = 1.0;
  double newton_tol = 1e-10;
  int newton_max = 50;
  /// Support threshold; defaults to 10 * delta_reg^(1/(m-1)).
  std::optional<double> support_threshold;
  /// Keep every k-th step (the first and last snapshot are always kept).
  std::size_t snapshot_stride = 1;
};

/// Time-indexed sequence of nodal fields on a fixed grid.
struct Trajectory {
  Grid grid;
  std::vector<double> times;
  std::vector<Field> snapshots;
  BoundaryData boundary;
  double delta_reg = 0.0;
  double support_threshold = 0.0;
  std::size_t newton_iterations = 0;

  std::size_t size() const { return times.size(); }
  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  /// Index of the snapshot whose time matches t (within 1e-9 relative).
  std::optional<std::size_t> find(double t) const;
  /// Linear interpolation between bracketing snapshots.
  Field at(double t) const;
};

double phi(double r, double m);
double phi_reg(double r, double m, double delta);

Trajectory solve_general(const NodalCoefficient& rho1, const NodalCoefficient& rho2,
                         const Field& y0, const BoundaryData& g, const Grid& grid,
                         const SolverParams& params);

/// Solves the stochastic porous-medium equation with multiplicative noise
/// field mu and linear drift lambda through Y = exp(mu - lambda t) X. The
/// returned trajectory holds X, and its boundary data is g.
Trajectory solve_spme(const Field& x0, const NoiseField& field, double lambda,
                      const BoundaryData& g, const Grid& grid, const SolverParams& params);

struct LinfMonitor {
  std::vector<double> sup;
  bool violated = false;
  std::optional<std::size_t> first_violation;
};

/// Per-snapshot sup norms; flags ||Y_t|| > c_monitor * ||Y_0||.
LinfMonitor monitor_linf(const Trajectory& traj, double c_monitor);

double sup_norm(std::span<const double> f);
/// Sum |f| h^d over all nodes.
double l1_norm(const Grid& grid, std::span<const double> f);

}  // namespace spme
