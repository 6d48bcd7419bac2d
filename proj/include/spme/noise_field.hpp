// Multiplicative noise field mu_t(x) = -sum_k f_k(x) z^(k)_t.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "spme/expression.hpp"
#include "spme/geometry.hpp"
#include "spme/signals.hpp"

namespace spme {

/// Value, gradient and Hessian (xx, xy, yy) of a scalar at one point.
struct Jet {
  double value = 0.0;
  Point grad{0.0, 0.0};
  std::array<double, 3> hess{0.0, 0.0, 0.0};

  double laplacian() const { return hess[0] + hess[2]; }
  double grad_norm() const { return std::hypot(grad[0], grad[1]); }
  double hess_norm() const {
    return std::sqrt(hess[0] * hess[0] + 2.0 * hess[1] * hess[1] + hess[2] * hess[2]);
  }
};

/// Spatial coefficient functions f_k with symbolic first and second
/// derivatives.
class CoefficientSet {
 public:
  CoefficientSet(int dim, std::vector<Expression> f);
  static CoefficientSet parse(int dim, const std::vector<std::string>& expressions);

  int dim() const { return dim_; }
  std::size_t size() const { return f_.size(); }
  const Expression& expression(std::size_t k) const { return f_.at(k); }
  Jet jet(std::size_t k, const Point& p) const;
  double value(std::size_t k, const Point& p) const { return f_.at(k).eval(p); }
  bool spatially_constant() const;

 private:
  int dim_;
  std::vector<Expression> f_;
  std::vector<std::array<Expression, 2>> grad_;
  std::vector<std::array<Expression, 3>> hess_;
};

class NoiseField {
 public:
  NoiseField(CoefficientSet coefficients, Signal signal, Box domain);
  /// mu = 0 with a single silent channel on [0, t_end].
  static NoiseField zero(const Box& domain, double t_end, double dt);

  const CoefficientSet& coefficients() const { return coeffs_; }
  const Signal& signal() const { return signal_; }
  const Box& domain() const { return domain_; }
  int dim() const { return domain_.dim; }
  TimeWindow window() const { return {signal_.t_begin(), signal_.t_end()}; }
  bool spatially_constant() const { return coeffs_.spatially_constant(); }

  double mu(double t, const Point& p) const;
  Point grad(double t, const Point& p) const;
  double laplacian(double t, const Point& p) const;
  std::array<double, 3> hessian(double t, const Point& p) const;
  /// mu and its spatial derivatives at (t, p).
  Jet jet(double t, const Point& p) const;
  /// Combines precomputed coefficient jets with the channel values z.
  static Jet combine(std::span<const Jet> f, std::span<const double> z);

 private:
  void check_point(const Point& p) const;

  CoefficientSet coeffs_;
  Signal signal_;
  Box domain_;
};

/// Sup-norms of the noise field over a time window and a spatial region.
/// dev_space is measured from the region centre, the dev_time_* family
/// concerns mu_{t_ref} - mu_t with t_ref the window start.
struct MuNorms {
  double c0 = 0.0;
  double grad = 0.0;
  double lap = 0.0;
  double hess = 0.0;  ///< Frobenius norm of the Hessian
  double c01 = 0.0;   ///< c0 + grad
  double c02 = 0.0;   ///< c0 + grad + hess
  double dev_space = 0.0;
  double dev_time = 0.0;
  double dev_time_grad = 0.0;
  double dev_time_lap = 0.0;
  double dev_time_hess = 0.0;
  double dev_time_c02 = 0.0;

  void merge(const MuNorms& o);
  void finish();
};

/// Lattice points of spacing `spacing` (anchored at the domain corner) that
/// lie in the closed ball, plus its centre.
std::vector<Point> region_points(const Box& domain, const Ball& region, double spacing);

/// Evaluates MuNorms over sub-windows of a fixed time window. Sup-norms in
/// time are exact at signal knots since mu is piecewise linear in t.
class NormSampler {
 public:
  NormSampler(const NoiseField& field, std::vector<Point> points, Point center, double t_ref);

  /// Spatial sups at a single time.
  MuNorms at(double t) const;
  /// Sups over the window w; the dev_time family stays relative to t_ref.
  MuNorms over(TimeWindow w) const;

 private:
  const NoiseField& field_;
  std::vector<Point> points_;
  std::vector<std::vector<Jet>> jets_;  // per point, per channel
  std::vector<Jet> center_jets_;
  std::vector<double> z_ref_;
  double t_ref_;
  mutable std::map<std::size_t, MuNorms> knot_cache_;
};

/// mu at a fixed set of points (typically grid nodes) for many times.
class PointwiseNoise {
 public:
  PointwiseNoise(const NoiseField& field, const std::vector<Point>& points);
  void mu(double t, std::span<double> out) const;
  std::size_t size() const { return n_; }

 private:
  const NoiseField& field_;
  std::size_t n_;
  std::vector<std::vector<double>> f_;  // per channel, per point
};

/// Sup-norm record over window x closed ball, sampled on a lattice of
/// spacing h / refine.
MuNorms mu_norms(const NoiseField& field, TimeWindow window, const Ball& region, double h,
                 int refine = 4);

}  // namespace spme
