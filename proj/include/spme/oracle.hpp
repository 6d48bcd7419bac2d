// Closed-form reference solutions for the deterministic porous-medium
// equation du/dt = Lap(|u|^m sgn u).
#pragma once

#include <functional>
#include <vector>

#include "spme/geometry.hpp"

namespace spme {

class Grid;

/// Zel'dovich-Kompaneets-Barenblatt source-type solution
///   u(t,x) = t^-alpha (C_B - k |x - c|^2 t^(-2 beta))_+^(1/(m-1)),
/// alpha = d/(d(m-1)+2), beta = alpha/d, k = alpha(m-1)/(2dm).
class BarenblattProfile {
 public:
  BarenblattProfile(double m, int dim, double c_b, double t0, Point center = {0.0, 0.0});

  double m() const { return m_; }
  int dim() const { return dim_; }
  double c_b() const { return c_b_; }
  double t0() const { return t0_; }
  const Point& center() const { return center_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double k() const { return k_; }

  /// Front radius (C_B/k)^(1/2) t^beta.
  double radius(double t) const;
  /// Peak value t^-alpha C_B^(1/(m-1)).
  double peak(double t) const;
  /// Exact mass of the profile.
  double mass() const;
  double eval(double t, const Point& x) const;
  /// Radius of the set {u(t, .) > tau}.
  double level_radius(double t, double tau) const;

 private:
  void check_time(double t) const;

  double m_;
  int dim_;
  double c_b_, t0_;
  Point center_;
  double alpha_, beta_, k_;
};

/// Samples the profile at every grid node at time t.
std::vector<double> sample(const BarenblattProfile& profile, const Grid& grid, double t);

struct WeakResidualReport {
  double residual = 0.0;  ///< |discrete weak-form defect|
  double scale = 0.0;     ///< sum of |u d_t eta| over the quadrature
  long quadrature_nodes = 0;
};

/// Smooth test function with compact support inside `support` x `window`.
struct TestFunction {
  std::function<double(double, const Point&)> value;
  Ball support;
  TimeWindow window;
};

/// exp(-1/(1-s^2)) bump in space (ball `support`) times a bump over `window`.
TestFunction bump_test_function(const Ball& support, TimeWindow window, int dim,
                                double amplitude = 1.0);

/// Substitutes the profile into the discrete weak form
///   sum_{n,i} [ u D_t eta + Phi(u) Lap_h eta ] h^d h = 0,
/// where D_t and Lap_h are central differences with step h and the sum is
/// the midpoint rule with spacing h on the support of eta. The defect is
/// O(h^2) whenever the test function is supported where u is smooth.
WeakResidualReport barenblatt_weak_residual(const BarenblattProfile& profile,
                                            const TestFunction& eta, double h);

}  // namespace spme
