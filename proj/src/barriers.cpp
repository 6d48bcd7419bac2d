#include "spme/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spme/bounds.hpp"
#include "spme/errors.hpp"

namespace spme {

namespace {

double radial(const Point& xi, const Point& xi1, double m, int dim) {
  const double r = distance(xi, xi1, dim);
  if (m == 2.0) return r * r;
  return std::pow(r, 2.0 / (m - 1.0));
}

void check_horizon(double t, double horizon) {
  if (!(t < horizon))
    throw OutOfHorizon("barrier: t = " + std::to_string(t) + " not before the horizon " +
                       std::to_string(horizon));
}

}  // namespace

double eval_barrier_space(double t, const Point& xi, const Point& xi1, double horizon, double c,
                          const TimeChange* tc, double m, int dim) {
  check_horizon(t, horizon);
  const double gap = tc ? tc->forward(horizon) - tc->forward(t) : horizon - t;
  return c * radial(xi, xi1, m, dim) * std::pow(gap, -1.0 / (m - 1.0));
}

double eval_barrier_time(double t, const Point& xi, const Point& xi1, double horizon, double c,
                         const NoiseField* field, double m, double t_ref) {
  check_horizon(t, horizon);
  const int dim = field ? field->dim() : 2;
  const double e = field ? std::exp(field->mu(t_ref, xi)) : 1.0;
  return c * e * radial(xi, xi1, m, dim) * std::pow(horizon - t, -1.0 / (m - 1.0));
}

double Barrier::operator()(double t, const Point& xi) const {
  if (kind == BarrierKind::space_frozen)
    return eval_barrier_space(t, xi, center, horizon, constant, tc.get(), m, dim);
  check_horizon(t, horizon);
  const double e = field ? std::exp(field->mu(t_ref, xi)) : 1.0;
  return constant * e * radial(xi, center, m, dim) * std::pow(horizon - t, -1.0 / (m - 1.0));
}

double Barrier::time_derivative(double t, const Point& xi) const {
  const double w = (*this)(t, xi);
  if (kind == BarrierKind::time_frozen) return w / ((m - 1.0) * (horizon - t));
  // dW/dt = W F'(t) / ((m-1)(F(T) - F(t))), F' = e^{-(m-1) mu_t(xi0)}.
  double gap = horizon - t, fprime = 1.0;
  if (tc) {
    gap = tc->forward(horizon) - tc->forward(t);
    if (field) fprime = std::exp(-(m - 1.0) * field->mu(t, tc->xi0()));
  }
  return w * fprime / ((m - 1.0) * gap);
}

double space_barrier_constant(double m, int d, double c_r) {
  return std::pow(c_det(m, d) * c_r, 1.0 / (m - 1.0));
}

double time_barrier_constant(double m, int d, double c_t, double dev) {
  return std::pow(c_det(m, d) / c_t * std::exp((m - 1.0) * dev), 1.0 / (m - 1.0));
}

nlohmann::json CertificationReport::to_json() const {
  return {{"min_residual", min_residual},
          {"tolerance", tolerance},
          {"evaluations", evaluations},
          {"violations", violations},
          {"failing", failing},
          {"passed", passed()}};
}

CertificationReport certify_supersolution(const Barrier& w, const Grid& grid, double r,
                                          std::span<const double> times, int refine,
                                          double tol_factor) {
  if (refine < 1) throw InvalidArgument("certify_supersolution: refine must be >= 1");
  if (w.dim != grid.dim()) throw InvalidArgument("certify_supersolution: dimension mismatch");
  const double h = grid.h();
  const double k = h / refine;
  const int d = grid.dim();
  const Box& box = w.field ? w.field->domain() : grid.box();
  const double t_cut = w.t_ref + 0.95 * (w.horizon - w.t_ref);

  CertificationReport rep;
  rep.tolerance = tol_factor * h * h;
  rep.min_residual = std::numeric_limits<double>::infinity();

  auto mu = [&](double t, const Point& p) { return w.field ? w.field->mu(t, p) : 0.0; };
  // (e^{-mu} W)^m
  auto flux = [&](double t, const Point& p) { return phi(std::exp(-mu(t, p)) * w(t, p), w.m); };

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point xi = grid.point(i);
    if (distance(xi, w.center, d) > r * (1.0 + 1e-12)) continue;
    bool inside = true;
    for (int a = 0; a < d; ++a)
      if (xi[a] - k < box.lo[a] - 1e-12 || xi[a] + k > box.hi[a] + 1e-12) inside = false;
    if (!inside) continue;
    for (double t : times) {
      if (t > t_cut) continue;
      const double c = flux(t, xi);
      double lap = 0.0;
      for (int a = 0; a < d; ++a) {
        Point lo = xi, hi = xi;
        lo[a] -= k;
        hi[a] += k;
        lap += flux(t, lo) + flux(t, hi) - 2.0 * c;
      }
      lap /= k * k;
      const double res = w.time_derivative(t, xi) - std::exp(mu(t, xi)) * lap;
      ++rep.evaluations;
      rep.min_residual = std::min(rep.min_residual, res);
      if (res < -rep.tolerance) {
        ++rep.violations;
        if (rep.failing.size() < 16) rep.failing.push_back({t, xi[0], xi[1], res});
      }
    }
  }
  if (rep.evaluations == 0) rep.min_residual = 0.0;
  return rep;
}

nlohmann::json DominationReport::to_json() const {
  return {{"applicable", applicable},
          {"dominated", dominated},
          {"max_boundary_excess", max_boundary_excess},
          {"max_excess", max_excess},
          {"worst_t", worst_t},
          {"worst_point", worst_point},
          {"checked", checked}};
}

DominationReport certify_domination(const Trajectory& traj, const Barrier& w, const Ball& region,
                                    TimeWindow window, double lambda, double eps) {
  const Grid& grid = traj.grid;
  const int d = grid.dim();
  const double t_cut = w.t_ref + 0.95 * (w.horizon - w.t_ref);

  // Region nodes; those with a neighbour outside the region form its boundary layer.
  std::vector<std::size_t> interior, boundary;
  const double rr = region.radius * (1.0 + 1e-12);
  auto in_region = [&](int ix, int iy) {
    if (ix < 0 || iy < 0 || ix >= grid.nodes_along(0) || (d == 2 && iy >= grid.nodes_along(1)))
      return false;
    return distance(grid.point(grid.index(ix, iy)), region.center, d) <= rr;
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto c = grid.coords(i);
    if (!in_region(c[0], c[1])) continue;
    bool edge = !in_region(c[0] - 1, c[1]) || !in_region(c[0] + 1, c[1]);
    if (d == 2) edge = edge || !in_region(c[0], c[1] - 1) || !in_region(c[0], c[1] + 1);
    (edge ? boundary : interior).push_back(i);
  }

  DominationReport rep;
  auto excess = [&](std::size_t k, std::size_t i) {
    const double t = traj.times[k];
    const Point p = grid.point(i);
    const double mu = w.field ? w.field->mu(t, p) : 0.0;
    const double y = std::exp(mu - lambda * t) * traj.snapshots[k][i];
    return y - w(t, p);
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (t < window.begin - 1e-12 || t > window.end + 1e-12 || t > t_cut) continue;
    for (std::size_t i : boundary) {
      const double e = excess(k, i);
      rep.max_boundary_excess = std::max(rep.max_boundary_excess, e);
      if (e > eps) rep.applicable = false;
    }
    for (std::size_t i : interior) {
      const double e = excess(k, i);
      ++rep.checked;
      if (e > rep.max_excess) {
        rep.max_excess = e;
        rep.worst_t = t;
        rep.worst_point = grid.point(i);
      }
    }
  }
  rep.dominated = rep.max_excess <= eps;
  return rep;
}

}  // namespace spme
