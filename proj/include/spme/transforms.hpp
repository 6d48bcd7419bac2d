// Changes of variables: the exponential spatial transform Y = exp(mu - lambda t) X,
// the homogeneous time change F(t) = int_0^t exp(-(m-1) mu_r) dr and the
// exponential rescaling F(t) = exp(delta t) / delta used for the attractor.
#pragma once

#include <span>
#include <vector>

#include "spme/geometry.hpp"
#include "spme/noise_field.hpp"
#include "spme/solver.hpp"

namespace spme {

enum class TimeChangeKind { homogeneous, attractor };

class TimeChange {
 public:
  /// Sampled F on increasing times t (F(t.front()) = 0).
  TimeChange(std::vector<double> t, std::vector<double> f, Point xi0, double m);
  /// Closed form F(t) = exp(delta t) / delta.
  static TimeChange attractor(double delta);

  TimeChangeKind kind() const { return kind_; }
  const Point& xi0() const { return xi0_; }
  double m() const { return m_; }
  double delta() const { return delta_; }
  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return f_; }

  /// Domain of F and its range.
  TimeWindow domain() const;
  TimeWindow range() const;

  double forward(double t) const;
  /// G = F^{-1}; throws OutOfRange outside the range of F.
  double inverse(double s) const;

 private:
  TimeChange() = default;
  TimeChangeKind kind_ = TimeChangeKind::homogeneous;
  Point xi0_{0.0, 0.0};
  double m_ = 2.0;
  double delta_ = 0.0;
  std::vector<double> t_, f_;
};

/// Composite trapezoid on the union of `times` and the signal knots inside
/// [times.front(), times.back()].
TimeChange time_change_homogeneous(const NoiseField& field, const Point& xi0, double m,
                                   std::span<const double> times);

double invert_time_change(const TimeChange& tc, double s);

/// X_t = exp(-mu_t) u(u.t_begin() + F(t)) on `times`, for noise that is
/// constant in space. u is a deterministic solution whose clock starts at
/// u.t_begin(); F is built from `times` (which must start at 0).
Trajectory homogeneous_solution_map(const Trajectory& u, const NoiseField& field, double m,
                                    std::span<const double> times);

enum class Direction { forward, inverse };

/// Multiplies every snapshot by exp(+-(mu_t - lambda t)); forward maps X to Y.
Trajectory spatial_transform(const Trajectory& x, const NoiseField& field, Direction direction,
                             double lambda);

struct AttractorRescaling {
  double T = 0.0;    ///< 1 / delta
  double eta = 0.0;  ///< ((m-1) lambda - delta) / (m+1)
  TimeChange tc;     ///< F(t) = exp(delta t) / delta on (-inf, 0]
  double F(double t) const { return tc.forward(t); }
  double G(double s) const { return tc.inverse(s); }
};

AttractorRescaling attractor_rescaling(double delta, double lambda, double m);

}  // namespace spme
