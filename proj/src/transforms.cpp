#include "spme/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "spme/errors.hpp"

namespace spme {

TimeChange::TimeChange(std::vector<double> t, std::vector<double> f, Point xi0, double m)
    : kind_(TimeChangeKind::homogeneous), xi0_(xi0), m_(m), t_(std::move(t)), f_(std::move(f)) {
  if (t_.size() < 2 || t_.size() != f_.size())
    throw InvalidArgument("time change: need at least two matching samples");
  for (std::size_t k = 1; k < t_.size(); ++k)
    if (!(t_[k] > t_[k - 1]) || !(f_[k] > f_[k - 1]))
      throw InvalidArgument("time change: samples must be strictly increasing");
}

TimeChange TimeChange::attractor(double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("time change: delta must be positive");
  TimeChange tc;
  tc.kind_ = TimeChangeKind::attractor;
  tc.delta_ = delta;
  return tc;
}

TimeWindow TimeChange::domain() const {
  if (kind_ == TimeChangeKind::attractor) return {-INFINITY, 0.0};
  return {t_.front(), t_.back()};
}

TimeWindow TimeChange::range() const {
  if (kind_ == TimeChangeKind::attractor) return {0.0, 1.0 / delta_};
  return {f_.front(), f_.back()};
}

namespace {

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double v) {
  // Bisection for the bracketing interval.
  std::size_t lo = 0, hi = x.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (x[mid] <= v ? lo : hi) = mid;
  }
  const double w = (v - x[lo]) / (x[hi] - x[lo]);
  return y[lo] + w * (y[hi] - y[lo]);
}

}  // namespace

double TimeChange::forward(double t) const {
  if (kind_ == TimeChangeKind::attractor) {
    if (t > 0.0) throw OutOfRange("time change: attractor F is defined for t <= 0");
    return std::exp(delta_ * t) / delta_;
  }
  const double tol = 1e-12 * (1.0 + std::abs(t_.back()));
  if (t < t_.front() - tol || t > t_.back() + tol)
    throw OutOfRange("time change: t = " + std::to_string(t) + " outside the sampled window");
  return interpolate(t_, f_, std::clamp(t, t_.front(), t_.back()));
}

double TimeChange::inverse(double s) const {
  if (kind_ == TimeChangeKind::attractor) {
    if (!(s > 0.0) || s > (1.0 + 1e-15) / delta_)
      throw OutOfRange("time change: s outside (0, 1/delta]");
    return std::min(0.0, std::log(delta_ * s) / delta_);
  }
  const double tol = 1e-12 * (1.0 + std::abs(f_.back()));
  if (s < f_.front() - tol || s > f_.back() + tol)
    throw OutOfRange("time change: s = " + std::to_string(s) + " outside the range of F");
  return interpolate(f_, t_, std::clamp(s, f_.front(), f_.back()));
}

TimeChange time_change_homogeneous(const NoiseField& field, const Point& xi0, double m,
                                   std::span<const double> times) {
  if (!(m > 1.0)) throw InvalidArgument("time change: m must exceed 1");
  if (times.size() < 2) throw InvalidArgument("time change: need at least two times");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw InvalidArgument("time change: times must increase");
  const double a = times.front(), b = times.back();
  const Signal& sig = field.signal();
  if (a < sig.t_begin() - 1e-12 || b > sig.t_end() + 1e-12)
    throw OutOfRange("time change: times exceed the signal window");

  std::vector<double> nodes(times.begin(), times.end());
  for (std::size_t k = 0; k < sig.samples(); ++k) {
    const double t = sig.time(k);
    if (t > a && t < b) nodes.push_back(t);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](double x, double y) { return std::abs(x - y) <= 1e-14 * (1.0 + std::abs(x)); }),
              nodes.end());

  std::vector<double> f(nodes.size(), 0.0);
  double prev = std::exp(-(m - 1.0) * field.mu(nodes[0], xi0));
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double cur = std::exp(-(m - 1.0) * field.mu(nodes[k], xi0));
    f[k] = f[k - 1] + 0.5 * (nodes[k] - nodes[k - 1]) * (prev + cur);
    prev = cur;
  }
  return TimeChange(std::move(nodes), std::move(f), xi0, m);
}

double invert_time_change(const TimeChange& tc, double s) { return tc.inverse(s); }

Trajectory homogeneous_solution_map(const Trajectory& u, const NoiseField& field, double m,
                                    std::span<const double> times) {
  if (!field.spatially_constant())
    throw InvalidArgument("homogeneous_solution_map: noise must be constant in space");
  if (field.dim() != u.grid.dim())
    throw InvalidArgument("homogeneous_solution_map: dimension mismatch");
  const Box& box = field.domain();
  Point c{0.0, 0.0};
  for (int i = 0; i < box.dim; ++i) c[i] = 0.5 * (box.lo[i] + box.hi[i]);
  auto tc = std::make_shared<TimeChange>(time_change_homogeneous(field, c, m, times));
  const double s0 = u.t_begin();
  if (s0 + tc->range().end > u.t_end() * (1.0 + 1e-12) + 1e-12)
    throw OutOfHorizon("homogeneous_solution_map: u does not reach F(T)");

  Trajectory x{u.grid, {}, {}, {}};
  x.delta_reg = u.delta_reg;
  x.support_threshold = u.support_threshold;
  for (double t : times) {
    const double s = std::min(s0 + tc->forward(t), u.t_end());
    Field f = u.at(s);
    const double scale = std::exp(-field.mu(t, c));
    for (double& v : f) v *= scale;
    x.times.push_back(t);
    x.snapshots.push_back(std::move(f));
  }
  auto noise = std::make_shared<NoiseField>(field);
  BoundaryData gu = u.boundary;
  if (gu) {
    x.boundary = [noise, tc, gu, s0, c](double t, const Point& p) {
      return std::exp(-noise->mu(t, c)) * gu(s0 + tc->forward(t), p);
    };
  }
  return x;
}

Trajectory spatial_transform(const Trajectory& x, const NoiseField& field, Direction direction,
                             double lambda) {
  const Grid& grid = x.grid;
  if (field.dim() != grid.dim()) throw InvalidArgument("spatial_transform: dimension mismatch");
  for (int i = 0; i < grid.dim(); ++i)
    if (std::abs(field.domain().lo[i] - grid.box().lo[i]) > 1e-12 ||
        std::abs(field.domain().hi[i] - grid.box().hi[i]) > 1e-12)
      throw InvalidArgument("spatial_transform: grid and noise domain differ");
  std::vector<Point> nodes(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) nodes[i] = grid.point(i);
  PointwiseNoise noise(field, nodes);

  const double sign = direction == Direction::forward ? 1.0 : -1.0;
  Trajectory y = x;
  std::vector<double> mu(grid.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double t = y.times[k];
    noise.mu(t, mu);
    for (std::size_t i = 0; i < grid.size(); ++i)
      y.snapshots[k][i] *= std::exp(sign * (mu[i] - lambda * t));
  }
  if (x.boundary) {
    auto f = std::make_shared<NoiseField>(field);
    BoundaryData g = x.boundary;
    y.boundary = [f, g, sign, lambda](double t, const Point& p) {
      return std::exp(sign * (f->mu(t, p) - lambda * t)) * g(t, p);
    };
  }
  return y;
}

AttractorRescaling attractor_rescaling(double delta, double lambda, double m) {
  if (!(m > 1.0)) throw InvalidArgument("attractor_rescaling: m must exceed 1");
  if (!(delta > 0.0)) throw InvalidArgument("attractor_rescaling: delta must be positive");
  if (!((m - 1.0) * lambda - delta > 0.0))
    throw InvalidArgument("attractor_rescaling: need (m-1) lambda > delta");
  return {1.0 / delta, ((m - 1.0) * lambda - delta) / (m + 1.0), TimeChange::attractor(delta)};
}

}  // namespace spme
