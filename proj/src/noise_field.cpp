#include "spme/noise_field.hpp"

#include <algorithm>
#include <cmath>

#include "spme/errors.hpp"

namespace spme {

CoefficientSet::CoefficientSet(int dim, std::vector<Expression> f) : dim_(dim), f_(std::move(f)) {
  if (dim < 1 || dim > 2) throw InvalidArgument("coefficients: dimension must be 1 or 2");
  if (f_.empty()) throw InvalidArgument("coefficients: at least one function required");
  for (const auto& e : f_) {
    if (e.max_axis() >= dim)
      throw InvalidArgument("coefficients: '" + e.str() + "' uses a coordinate beyond dimension " +
                            std::to_string(dim));
    const Expression dx = e.derivative(0), dy = e.derivative(1);
    grad_.push_back({dx, dy});
    hess_.push_back({dx.derivative(0), dx.derivative(1), dy.derivative(1)});
  }
}

CoefficientSet CoefficientSet::parse(int dim, const std::vector<std::string>& expressions) {
  std::vector<Expression> f;
  for (const auto& s : expressions) f.push_back(Expression::parse(s));
  return CoefficientSet(dim, std::move(f));
}

Jet CoefficientSet::jet(std::size_t k, const Point& p) const {
  Jet j;
  j.value = f_.at(k).eval(p);
  j.grad[0] = grad_[k][0].eval(p);
  j.hess[0] = hess_[k][0].eval(p);
  if (dim_ == 2) {
    j.grad[1] = grad_[k][1].eval(p);
    j.hess[1] = hess_[k][1].eval(p);
    j.hess[2] = hess_[k][2].eval(p);
  }
  return j;
}

bool CoefficientSet::spatially_constant() const {
  return std::all_of(f_.begin(), f_.end(), [](const Expression& e) { return e.is_constant(); });
}

NoiseField::NoiseField(CoefficientSet coefficients, Signal signal, Box domain)
    : coeffs_(std::move(coefficients)), signal_(std::move(signal)), domain_(domain) {
  if (coeffs_.dim() != domain_.dim) throw InvalidArgument("noise field: dimension mismatch");
  if (coeffs_.size() != signal_.channels())
    throw InvalidArgument("noise field: " + std::to_string(coeffs_.size()) + " coefficients but " +
                          std::to_string(signal_.channels()) + " signal channels");
}

NoiseField NoiseField::zero(const Box& domain, double t_end, double dt) {
  const auto n = static_cast<long>(std::max(1.0, std::ceil(t_end / dt - 1e-9)));
  return NoiseField(CoefficientSet(domain.dim, {Expression::constant(0.0)}),
                    zero_signal(n, t_end / static_cast<double>(n)), domain);
}

void NoiseField::check_point(const Point& p) const {
  if (!domain_.contains(p, 1e-9 * std::max(domain_.diameter(), 1.0)))
    throw InvalidArgument("noise field: point outside the domain");
}

Jet NoiseField::combine(std::span<const Jet> f, std::span<const double> z) {
  Jet out;
  for (std::size_t k = 0; k < f.size(); ++k) {
    out.value -= f[k].value * z[k];
    for (int a = 0; a < 2; ++a) out.grad[a] -= f[k].grad[a] * z[k];
    for (int a = 0; a < 3; ++a) out.hess[a] -= f[k].hess[a] * z[k];
  }
  return out;
}

Jet NoiseField::jet(double t, const Point& p) const {
  check_point(p);
  const auto z = signal_.values_at(t);
  std::vector<Jet> f(coeffs_.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = coeffs_.jet(k, p);
  return combine(f, z);
}

double NoiseField::mu(double t, const Point& p) const {
  check_point(p);
  const auto z = signal_.values_at(t);
  double s = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) s -= coeffs_.value(k, p) * z[k];
  return s;
}

Point NoiseField::grad(double t, const Point& p) const { return jet(t, p).grad; }

double NoiseField::laplacian(double t, const Point& p) const { return jet(t, p).laplacian(); }

std::array<double, 3> NoiseField::hessian(double t, const Point& p) const { return jet(t, p).hess; }

PointwiseNoise::PointwiseNoise(const NoiseField& field, const std::vector<Point>& points)
    : field_(field), n_(points.size()) {
  const auto& c = field.coefficients();
  f_.resize(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    f_[k].resize(n_);
    for (std::size_t i = 0; i < n_; ++i) f_[k][i] = c.value(k, points[i]);
  }
}

void PointwiseNoise::mu(double t, std::span<double> out) const {
  const auto z = field_.signal().values_at(t);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < f_.size(); ++k) {
    if (z[k] == 0.0) continue;
    for (std::size_t i = 0; i < n_; ++i) out[i] -= f_[k][i] * z[k];
  }
}

void MuNorms::merge(const MuNorms& o) {
  c0 = std::max(c0, o.c0);
  grad = std::max(grad, o.grad);
  lap = std::max(lap, o.lap);
  hess = std::max(hess, o.hess);
  dev_space = std::max(dev_space, o.dev_space);
  dev_time = std::max(dev_time, o.dev_time);
  dev_time_grad = std::max(dev_time_grad, o.dev_time_grad);
  dev_time_lap = std::max(dev_time_lap, o.dev_time_lap);
  dev_time_hess = std::max(dev_time_hess, o.dev_time_hess);
  finish();
}

void MuNorms::finish() {
  c01 = c0 + grad;
  c02 = c01 + hess;
  dev_time_c02 = dev_time + dev_time_grad + dev_time_hess;
}

std::vector<Point> region_points(const Box& domain, const Ball& region, double spacing) {
  if (!(spacing > 0.0)) throw InvalidArgument("region_points: spacing must be positive");
  std::vector<Point> pts{region.center};
  const int d = domain.dim;
  std::array<long, 2> lo{0, 0}, hi{0, 0};
  for (int a = 0; a < d; ++a) {
    lo[a] = static_cast<long>(std::ceil((region.center[a] - region.radius - domain.lo[a]) / spacing - 1e-9));
    hi[a] = static_cast<long>(std::floor((region.center[a] + region.radius - domain.lo[a]) / spacing + 1e-9));
  }
  const double r2 = region.radius * region.radius * (1.0 + 1e-12) + 1e-300;
  for (long j = lo[1]; j <= hi[1]; ++j) {
    for (long i = lo[0]; i <= hi[0]; ++i) {
      Point p{domain.lo[0] + static_cast<double>(i) * spacing, 0.0};
      if (d == 2) p[1] = domain.lo[1] + static_cast<double>(j) * spacing;
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += (p[a] - region.center[a]) * (p[a] - region.center[a]);
      if (s <= r2 && domain.contains(p)) pts.push_back(p);
    }
  }
  return pts;
}

NormSampler::NormSampler(const NoiseField& field, std::vector<Point> points, Point center, double t_ref)
    : field_(field), points_(std::move(points)), t_ref_(t_ref) {
  const auto& c = field.coefficients();
  jets_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    jets_[i].resize(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) jets_[i][k] = c.jet(k, points_[i]);
  }
  center_jets_.resize(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) center_jets_[k] = c.jet(k, center);
  z_ref_ = field.signal().values_at(t_ref);
}

MuNorms NormSampler::at(double t) const {
  const auto z = field_.signal().values_at(t);
  std::vector<double> dz(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) dz[k] = z_ref_[k] - z[k];
  const double mu_c = NoiseField::combine(center_jets_, z).value;
  MuNorms n;
  for (const auto& jets : jets_) {
    const Jet m = NoiseField::combine(jets, z);
    n.c0 = std::max(n.c0, std::abs(m.value));
    n.grad = std::max(n.grad, m.grad_norm());
    n.lap = std::max(n.lap, std::abs(m.laplacian()));
    n.hess = std::max(n.hess, m.hess_norm());
    n.dev_space = std::max(n.dev_space, std::abs(mu_c - m.value));
    const Jet v = NoiseField::combine(jets, dz);
    n.dev_time = std::max(n.dev_time, std::abs(v.value));
    n.dev_time_grad = std::max(n.dev_time_grad, v.grad_norm());
    n.dev_time_lap = std::max(n.dev_time_lap, std::abs(v.laplacian()));
    n.dev_time_hess = std::max(n.dev_time_hess, v.hess_norm());
  }
  n.finish();
  return n;
}

MuNorms NormSampler::over(TimeWindow w) const {
  if (w.end < w.begin) throw InvalidArgument("mu_norms: empty time window");
  const Signal& s = field_.signal();
  MuNorms n = at(w.begin);
  n.merge(at(w.end));
  const double first = std::ceil((w.begin - s.t_begin()) / s.dt() + 1e-9);
  const double last = std::floor((w.end - s.t_begin()) / s.dt() - 1e-9);
  for (double j = std::max(first, 0.0); j <= last; j += 1.0) {
    const auto k = static_cast<std::size_t>(j);
    auto it = knot_cache_.find(k);
    if (it == knot_cache_.end()) it = knot_cache_.emplace(k, at(s.time(k))).first;
    n.merge(it->second);
  }
  return n;
}

MuNorms mu_norms(const NoiseField& field, TimeWindow window, const Ball& region, double h, int refine) {
  if (window.end < window.begin) throw InvalidArgument("mu_norms: empty time window");
  if (region.radius < 0.0) throw InvalidArgument("mu_norms: empty region");
  if (refine < 1) throw InvalidArgument("mu_norms: refinement factor must be >= 1");
  const Box& dom = field.domain();
  const double tol = 1e-12 * std::max(dom.diameter(), 1.0);
  for (int a = 0; a < dom.dim; ++a)
    if (region.center[a] - region.radius < dom.lo[a] - tol || region.center[a] + region.radius > dom.hi[a] + tol)
      throw InvalidArgument("mu_norms: region leaves the domain");
  const auto sw = field.window();
  if (window.begin < sw.begin - 1e-12 || window.end > sw.end + 1e-12)
    throw InvalidArgument("mu_norms: window outside the signal support");
  NormSampler sampler(field, region_points(dom, region, h / refine), region.center, window.begin);
  return sampler.over(window);
}

}  // namespace spme
