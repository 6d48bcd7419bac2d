// Explicit barriers W(t, xi; xi1) and their numerical certification.
//
//   space-frozen: W = C |xi - xi1|^{2/(m-1)} (F(T) - F(t))^{-1/(m-1)}
//   time-frozen:  W = C e^{mu_{t0}(xi)} |xi - xi1|^{2/(m-1)} (T - t)^{-1/(m-1)}
//
// Both are candidate supersolutions of dY/dt = e^{mu} Lap (e^{-mu} Y)^m.
#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "spme/grid.hpp"
#include "spme/noise_field.hpp"
#include "spme/solver.hpp"
#include "spme/transforms.hpp"

namespace spme {

enum class BarrierKind { space_frozen, time_frozen };

struct Barrier {
  BarrierKind kind = BarrierKind::space_frozen;
  Point center{0.0, 0.0};
  double horizon = 1.0;   ///< absolute time at which W blows up
  double constant = 1.0;  ///< C
  double m = 2.0;
  int dim = 1;
  /// Space-frozen: F (absolute times). Unset means F(t) = t.
  std::shared_ptr<const TimeChange> tc;
  /// Noise in the equation; null means mu = 0.
  std::shared_ptr<const NoiseField> field;
  /// Time-frozen reference time.
  double t_ref = 0.0;

  double operator()(double t, const Point& xi) const;
  /// Analytic dW/dt.
  double time_derivative(double t, const Point& xi) const;
};

double eval_barrier_space(double t, const Point& xi, const Point& xi1, double horizon, double c,
                          const TimeChange* tc, double m, int dim);
double eval_barrier_time(double t, const Point& xi, const Point& xi1, double horizon, double c,
                         const NoiseField* field, double m, double t_ref = 0.0);

/// C^{m-1} = C_det C_R.
double space_barrier_constant(double m, int d, double c_r);
/// C^{m-1} = (C_det / C_T) e^{(m-1) dev}.
double time_barrier_constant(double m, int d, double c_t, double dev);

struct CertificationReport {
  double min_residual = 0.0;
  double tolerance = 0.0;
  std::size_t evaluations = 0;
  std::size_t violations = 0;
  /// (t, x, y, residual) of the first few violations
  std::vector<std::array<double, 4>> failing;
  bool passed() const { return violations == 0; }
  nlohmann::json to_json() const;
};

/// Checks dW/dt >= e^{mu} Lap_k (e^{-mu} W)^m on grid nodes of B_r(center)
/// and the given times cut at 95% of the horizon, where Lap_k is the
/// centred difference with step k = h / refine. Violations are residuals
/// below -tol_factor * h^2.
CertificationReport certify_supersolution(const Barrier& w, const Grid& grid, double r,
                                          std::span<const double> times, int refine = 4,
                                          double tol_factor = 10.0);

struct DominationReport {
  /// Boundary data of Y dominated by W on the region boundary.
  bool applicable = true;
  bool dominated = true;
  double max_boundary_excess = 0.0;
  double max_excess = 0.0;
  double worst_t = 0.0;
  Point worst_point{0.0, 0.0};
  std::size_t checked = 0;
  nlohmann::json to_json() const;
};

/// Y = e^{mu - lambda t} X from `traj` against W on region x window. Only
/// times before 95% of the horizon are compared.
DominationReport certify_domination(const Trajectory& traj, const Barrier& w, const Ball& region,
                                    TimeWindow window, double lambda = 0.0, double eps = 1e-8);

}  // namespace spme
