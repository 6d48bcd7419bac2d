#include "spme/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spme/errors.hpp"
#include "spme/grid.hpp"
#include "spme/solver.hpp"

namespace spme {

BarenblattProfile::BarenblattProfile(double m, int dim, double c_b, double t0, Point center)
    : m_(m), dim_(dim), c_b_(c_b), t0_(t0), center_(center) {
  if (!(m > 1.0)) throw InvalidArgument("barenblatt: m must exceed 1");
  if (dim < 1 || dim > 2) throw InvalidArgument("barenblatt: dimension must be 1 or 2");
  if (!(c_b > 0.0)) throw InvalidArgument("barenblatt: C_B must be positive");
  if (!(t0 > 0.0)) throw InvalidArgument("barenblatt: t0 must be positive");
  alpha_ = dim / (dim * (m - 1.0) + 2.0);
  beta_ = alpha_ / dim;
  k_ = alpha_ * (m - 1.0) / (2.0 * dim * m);
}

void BarenblattProfile::check_time(double t) const {
  if (t < t0_ * (1.0 - 1e-14)) throw InvalidArgument("barenblatt: t precedes the time offset");
}

double BarenblattProfile::radius(double t) const {
  check_time(t);
  return std::sqrt(c_b_ / k_) * std::pow(t, beta_);
}

double BarenblattProfile::peak(double t) const {
  check_time(t);
  return std::pow(t, -alpha_) * std::pow(c_b_, 1.0 / (m_ - 1.0));
}

double BarenblattProfile::eval(double t, const Point& x) const {
  check_time(t);
  double r2 = 0.0;
  for (int i = 0; i < dim_; ++i) r2 += (x[i] - center_[i]) * (x[i] - center_[i]);
  const double inner = c_b_ - k_ * r2 * std::pow(t, -2.0 * beta_);
  if (inner <= 0.0) return 0.0;
  return std::pow(t, -alpha_) * std::pow(inner, 1.0 / (m_ - 1.0));
}

double BarenblattProfile::level_radius(double t, double tau) const {
  check_time(t);
  // t^-alpha (C_B - k r^2 t^-2beta)^(1/(m-1)) = tau
  const double inner = std::pow(tau * std::pow(t, alpha_), m_ - 1.0);
  if (inner >= c_b_) return 0.0;
  return std::sqrt((c_b_ - inner) / k_) * std::pow(t, beta_);
}

double BarenblattProfile::mass() const {
  // int (C_B - k |y|^2)_+^p dy with p = 1/(m-1), self-similar in t.
  const double p = 1.0 / (m_ - 1.0);
  const double a = std::sqrt(c_b_ / k_);
  if (dim_ == 1) {
    // 2 a C_B^p int_0^1 (1-s^2)^p ds = a C_B^p B(1/2, p+1)
    return a * std::pow(c_b_, p) * std::beta(0.5, p + 1.0);
  }
  // 2 pi a^2 C_B^p int_0^1 (1-s^2)^p s ds = pi a^2 C_B^p / (p+1)
  return std::numbers::pi * a * a * std::pow(c_b_, p) / (p + 1.0);
}

std::vector<double> sample(const BarenblattProfile& profile, const Grid& grid, double t) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = profile.eval(t, grid.point(i));
  return out;
}

namespace {

double bump(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

}  // namespace

TestFunction bump_test_function(const Ball& support, TimeWindow window, int dim,
                                double amplitude) {
  const double tm = 0.5 * (window.begin + window.end);
  const double tr = 0.5 * (window.end - window.begin);
  if (!(tr > 0.0) || !(support.radius > 0.0))
    throw InvalidArgument("test function: empty support");
  TestFunction eta;
  eta.support = support;
  eta.window = window;
  eta.value = [=](double t, const Point& x) {
    return amplitude * bump((t - tm) / tr) * bump(distance(x, support.center, dim) / support.radius);
  };
  return eta;
}

WeakResidualReport barenblatt_weak_residual(const BarenblattProfile& profile,
                                            const TestFunction& eta, double h) {
  if (!(h > 0.0)) throw InvalidArgument("weak residual: h must be positive");
  if (eta.window.begin - h < profile.t0())
    throw InvalidArgument("weak residual: test window must start after the time offset");
  const int d = profile.dim();
  const double m = profile.m();
  const double span_t = eta.window.end - eta.window.begin;
  const auto nt = static_cast<int>(std::ceil(span_t / h));
  const double r = eta.support.radius;
  const auto nx = static_cast<int>(std::ceil(2.0 * r / h));
  const int ny = d == 2 ? nx : 1;
  const Point& c = eta.support.center;
  const double w = h * std::pow(h, d);
  WeakResidualReport rep;
  double sum = 0.0;
  for (int it = 0; it < nt; ++it) {
    const double t = eta.window.begin + (it + 0.5) * h;
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy < ny; ++iy) {
        Point x{c[0] - r + (ix + 0.5) * h, 0.0};
        if (d == 2) x[1] = c[1] - r + (iy + 0.5) * h;
        const double e0 = eta.value(t, x);
        const double dt_eta = (eta.value(t + 0.5 * h, x) - eta.value(t - 0.5 * h, x)) / h;
        double lap = -2.0 * d * e0;
        for (int a = 0; a < d; ++a) {
          Point xp = x, xm = x;
          xp[a] += h;
          xm[a] -= h;
          lap += eta.value(t, xp) + eta.value(t, xm);
        }
        lap /= h * h;
        if (e0 == 0.0 && dt_eta == 0.0 && lap == 0.0) continue;
        const double u = profile.eval(t, x);
        sum += (u * dt_eta + phi(u, m) * lap) * w;
        rep.scale += std::abs(u * dt_eta) * w;
        ++rep.quadrature_nodes;
      }
    }
  }
  rep.residual = std::abs(sum);
  return rep;
}

}  // namespace spme
