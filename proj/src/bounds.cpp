#include "spme/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spme/errors.hpp"

namespace spme {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_mH(double m, double H) {
  if (!(m > 1.0)) throw InvalidArgument("bounds: m must exceed 1");
  if (!(H > 0.0)) throw InvalidArgument("bounds: H must be positive");
}

void check_ball(const Box& dom, const Point& xi0, double R) {
  if (!(R > 0.0)) throw InvalidArgument("bounds: R must be positive");
  if (!dom.contains(xi0) || dom.distance_to_boundary(xi0) < R * (1.0 - 1e-12))
    throw InvalidArgument("bounds: ball B_R(xi0) leaves the domain");
}

// (H^{m-1} / C_det)^{1/2}
double rate(double H, double m, int d) { return std::sqrt(std::pow(H, m - 1.0) / c_det(m, d)); }

}  // namespace

double c_det(double m, int d) {
  if (!(m > 1.0) || d < 1) throw InvalidArgument("c_det: need m > 1 and d >= 1");
  return (m - 1.0) / (2.0 * d * m * (m - 1.0) + 4.0 * m);
}

double general_constant(double m, int d) {
  return m * (m - 1.0) * std::max(1.0, 1.0 / c_det(m, d)) * (1.0 + 2.0 * m / (d * (m - 1.0) + 2.0));
}

double bracket(double m, int d, double R, double g, double l) {
  return 1.0 + 2.0 * m * (m - 1.0) / (d * (m - 1.0) + 2.0) * g * R +
         m * (m - 1.0) * c_det(m, d) * R * R * (m * g * g + l);
}

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::deterministic: return "deterministic";
    case BoundKind::homogeneous: return "homogeneous";
    case BoundKind::small_ball: return "small-ball";
    case BoundKind::small_time: return "small-time";
    case BoundKind::general: return "general";
  }
  return "unknown";
}

double HoleFillingBound::radius(double t) const { return std::max(0.0, schedule(t)); }

std::vector<double> HoleFillingBound::sample(std::span<const double> t) const {
  std::vector<double> out;
  out.reserve(t.size());
  for (double v : t) out.push_back(radius(v));
  return out;
}

namespace {

nlohmann::json norms_json(const MuNorms& n) {
  return {{"c0", n.c0},
          {"grad", n.grad},
          {"lap", n.lap},
          {"hess", n.hess},
          {"c01", n.c01},
          {"c02", n.c02},
          {"dev_space", n.dev_space},
          {"dev_time", n.dev_time},
          {"dev_time_grad", n.dev_time_grad},
          {"dev_time_lap", n.dev_time_lap},
          {"dev_time_hess", n.dev_time_hess},
          {"dev_time_c02", n.dev_time_c02}};
}

}  // namespace

nlohmann::json HoleFillingBound::to_json() const {
  return {{"kind", spme::to_string(kind)},
          {"formula_version", 1},
          {"R", R},
          {"H", H},
          {"m", m},
          {"d", d},
          {"c_det", c_det},
          {"modulation", modulation},
          {"t_star", t_star},
          {"clamped", clamped},
          {"window", {window.begin, window.end}},
          {"norms", norms_json(norms)}};
}

HoleFillingBound det_hole_bound(double R, double H, double m, int d) {
  check_mH(m, H);
  if (!(R > 0.0)) throw InvalidArgument("bounds: R must be positive");
  HoleFillingBound b;
  b.kind = BoundKind::deterministic;
  b.R = R;
  b.H = H;
  b.m = m;
  b.d = d;
  b.c_det = c_det(m, d);
  b.t_star = R * R * b.c_det / std::pow(H, m - 1.0);
  b.window = {0.0, kInf};
  const double a = rate(H, m, d);
  b.schedule = [R, a](double t) { return R - std::sqrt(std::max(t, 0.0)) * a; };
  return b;
}

namespace {

// Shared by the homogeneous and small-ball kinds: T* = G(target), the
// schedule R - sqrt(F(t)) a.
void fill_from_time_change(HoleFillingBound& b, const TimeChange& tc, double target, double a) {
  const TimeWindow dom = tc.domain();
  const TimeWindow rng = tc.range();
  b.window = dom;
  if (target >= rng.end) {
    b.clamped = target > rng.end;
    b.t_star = dom.end - dom.begin;
  } else {
    b.t_star = tc.inverse(std::max(target, rng.begin)) - dom.begin;
  }
  auto f = std::make_shared<TimeChange>(tc);
  const double R = b.R;
  b.schedule = [f, R, a, dom](double t) {
    const double tt = std::clamp(dom.begin + t, dom.begin, dom.end);
    return R - std::sqrt(std::max(f->forward(tt), 0.0)) * a;
  };
}

}  // namespace

HoleFillingBound homog_hole_bound(double R, double H, double m, int d, const TimeChange& tc) {
  check_mH(m, H);
  if (!(R > 0.0)) throw InvalidArgument("bounds: R must be positive");
  if (tc.kind() != TimeChangeKind::homogeneous)
    throw InvalidArgument("homog_hole_bound: needs a homogeneous time change");
  HoleFillingBound b;
  b.kind = BoundKind::homogeneous;
  b.R = R;
  b.H = H;
  b.m = m;
  b.d = d;
  b.c_det = c_det(m, d);
  fill_from_time_change(b, tc, R * R * b.c_det / std::pow(H, m - 1.0), rate(H, m, d));
  return b;
}

double small_ball_constant(double R, const Point& xi0, const NoiseField& field, TimeWindow window,
                           double m, int d, double h, int refine, MuNorms* norms) {
  if (!(m > 1.0)) throw InvalidArgument("bounds: m must exceed 1");
  check_ball(field.domain(), xi0, R);
  const MuNorms n = mu_norms(field, window, Ball{xi0, R}, h, refine);
  if (norms) *norms = n;
  return std::exp(-(m - 1.0) * n.dev_space) / bracket(m, d, R, n.grad, n.lap);
}

HoleFillingBound small_ball_bound(double R, const Point& xi0, const NoiseField& field, double H,
                                  double m, int d, TimeWindow window, double h, int refine) {
  check_mH(m, H);
  HoleFillingBound b;
  b.kind = BoundKind::small_ball;
  b.R = R;
  b.H = H;
  b.m = m;
  b.d = d;
  b.c_det = c_det(m, d);
  b.modulation = small_ball_constant(R, xi0, field, window, m, d, h, refine, &b.norms);
  const std::vector<double> times{window.begin, window.end};
  const TimeChange tc = time_change_homogeneous(field, xi0, m, times);
  fill_from_time_change(b, tc, R * R * b.c_det / std::pow(H, m - 1.0) * b.modulation,
                        rate(H, m, d) / std::sqrt(b.modulation));
  return b;
}

double sup_bisect(const std::function<double(double)>& p, double a, double b, double target,
                  bool* clamped) {
  if (clamped) *clamped = false;
  if (p(b) <= target) {
    if (clamped) *clamped = true;
    return b;
  }
  if (p(a) > target) return a;
  double lo = a, hi = b;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (p(mid) <= target ? lo : hi) = mid;
    if (hi - lo <= 1e-8 * std::max(std::abs(lo), 1e-300)) break;
  }
  return lo;
}

HoleFillingBound small_time_bound(double R, const Point& xi0, const NoiseField& field, double H,
                                  double m, int d, TimeWindow window, double h, int refine) {
  check_mH(m, H);
  check_ball(field.domain(), xi0, R);
  if (refine < 1) throw InvalidArgument("bounds: refine must be >= 1");
  const auto sw = field.window();
  if (window.begin < sw.begin - 1e-12 || window.end > sw.end + 1e-12 || !(window.end > window.begin))
    throw InvalidArgument("small_time_bound: window outside the signal support");

  HoleFillingBound b;
  b.kind = BoundKind::small_time;
  b.R = R;
  b.H = H;
  b.m = m;
  b.d = d;
  b.c_det = c_det(m, d);
  b.window = window;

  auto f = std::make_shared<NoiseField>(field);
  auto sampler = std::make_shared<NormSampler>(
      *f, region_points(f->domain(), Ball{xi0, R}, h / refine), xi0, window.begin);
  const double t0 = window.begin;
  // C_t = B(nu) e^{2(m-1) |mu_0 - mu_t|}, nu = mu_0 - mu_t, sups over [t0, t0 + t].
  auto ct = [f, sampler, t0, m, d, R](double t) {
    const MuNorms n = sampler->over({t0, t0 + std::max(t, 0.0)});
    return bracket(m, d, R, n.dev_time_grad, n.dev_time_lap) * std::exp(2.0 * (m - 1.0) * n.dev_time);
  };
  const double target = R * R * b.c_det / std::pow(H, m - 1.0);
  const double len = window.end - window.begin;
  b.t_star = sup_bisect([&ct](double t) { return t * ct(t); }, 0.0, len, target, &b.clamped);
  b.modulation = ct(b.t_star);
  b.norms = sampler->over({t0, t0 + b.t_star});
  const double a = rate(H, m, d);
  b.schedule = [ct, R, a, len](double t) {
    const double tt = std::clamp(t, 0.0, len);
    return R - std::sqrt(tt) * a * std::sqrt(ct(tt));
  };
  return b;
}

nlohmann::json PropagationBound::to_json() const {
  return {{"h", h},
          {"H", H},
          {"s", s},
          {"c_h", c_h},
          {"c_bar_h", c_bar_h},
          {"t_h", t_h},
          {"t_bar_h", t_bar_h},
          {"clamped", clamped},
          {"boundary_points", boundary_points}};
}

PropagationBound propagation_bound(const Grid& grid, const CellSet& support_at_s, double s, double h,
                                   const NoiseField& field, double H, double m, double t_end,
                                   int refine) {
  check_mH(m, H);
  if (!(h > 0.0)) throw InvalidArgument("propagation_bound: h must be positive");
  if (support_at_s.empty()) throw InvalidArgument("propagation_bound: empty support");
  if (!(t_end > s)) throw InvalidArgument("propagation_bound: empty time window");
  const int d = grid.dim();
  const Box& box = grid.box();
  for (std::size_t i : support_at_s.cells)
    if (box.distance_to_boundary(grid.point(i)) <= 2.0 * h)
      throw DomainMarginError("propagation_bound: B_2h(supp) touches the domain boundary");

  PropagationBound pb;
  pb.h = h;
  pb.H = H;
  pb.s = s;

  // Discrete boundary of B_h(supp): the outermost layer of nodes of the dilation.
  const auto dist = distance_field(grid, support_at_s);
  const double eps = 1e-12 * grid.h();
  std::vector<Point> ring;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] > h - grid.h() + eps && dist[i] <= h + eps) ring.push_back(grid.point(i));
  if (ring.empty()) throw InvalidArgument("propagation_bound: h below the grid resolution");
  pb.boundary_points = ring.size();

  const TimeWindow window{s, t_end};
  pb.c_h = 1.0;
  for (const Point& xi0 : ring)
    pb.c_h = std::min(pb.c_h, small_ball_constant(h, xi0, field, window, m, d, grid.h(), refine));

  // F_h(t) = int_s^{s+t} exp(-(m-1) inf_ring mu_r) dr on the signal knots.
  const Signal& sig = field.signal();
  std::vector<double> times{s};
  for (std::size_t k = 0; k < sig.samples(); ++k)
    if (sig.time(k) > s + 1e-14 && sig.time(k) < t_end - 1e-14) times.push_back(sig.time(k));
  times.push_back(t_end);
  PointwiseNoise noise(field, ring);
  std::vector<double> mu(ring.size());
  auto integrand = [&](double t) {
    noise.mu(t, mu);
    return std::exp(-(m - 1.0) * *std::min_element(mu.begin(), mu.end()));
  };
  std::vector<double> f(times.size(), 0.0);
  double prev = integrand(times[0]);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double cur = integrand(times[k]);
    f[k] = f[k - 1] + 0.5 * (times[k] - times[k - 1]) * (prev + cur);
    prev = cur;
  }
  const TimeChange fh(times, f, ring.front(), m);

  // Printed uniform variant over O minus supp(X_s).
  std::vector<Point> outside;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!support_at_s.contains(i)) outside.push_back(grid.point(i));
  NormSampler sampler(field, outside, outside.front(), s);
  const MuNorms n = sampler.over(window);
  pb.c_bar_h = std::exp(-h * n.c01) /
               std::pow(1.0 + general_constant(m, d) * h * (1.0 + h) * n.c02, 1.0 / (m - 1.0));

  const double base = h * h * c_det(m, d) / std::pow(H, m - 1.0);
  auto invert = [&](double target, bool* clamped) {
    if (target >= fh.range().end) {
      if (clamped) *clamped = true;
      return t_end - s;
    }
    return fh.inverse(target) - s;
  };
  pb.t_h = invert(base * pb.c_h, &pb.clamped);
  pb.t_bar_h = invert(base * pb.c_bar_h, nullptr);
  return pb;
}

PropagationRadius::PropagationRadius(const NoiseField& field, std::vector<Point> points, double s,
                                     double H, double m)
    : field_(std::make_shared<NoiseField>(field)), s_(s), H_(H), m_(m) {
  check_mH(m, H);
  if (points.empty()) throw InvalidArgument("propagation_radius: empty region");
  D_ = field.domain().diameter();
  d_ = field.dim();
  const Point c = points.front();
  sampler_ = std::make_unique<NormSampler>(*field_, std::move(points), c, s);
}

double PropagationRadius::constant(double t) const {
  const MuNorms n = sampler_->over({s_, s_ + std::max(t, 0.0)});
  return bracket(m_, d_, D_, n.dev_time_grad, n.dev_time_lap) * std::exp(2.0 * (m_ - 1.0) * n.dev_time);
}

double PropagationRadius::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  return std::sqrt(t) * rate(H_, m_, d_) * std::sqrt(constant(t));
}

double propagation_radius(double t, double H, double m, const NoiseField& field,
                          const std::vector<Point>& points, double s) {
  return PropagationRadius(field, points, s, H, m)(t);
}

RhoNorms constant_rho_norms(double rho1_c0, double rho2_c02) {
  return {[rho1_c0](double) { return rho1_c0; }, [rho2_c02](double) { return rho2_c02; }};
}

RhoNorms rho_norms(const NoiseField& field, double lambda, TimeWindow window,
                   const std::vector<Point>& points) {
  if (points.empty()) throw InvalidArgument("rho_norms: empty region");
  const Signal& sig = field.signal();
  std::vector<double> times{window.begin};
  for (std::size_t k = 0; k < sig.samples(); ++k)
    if (sig.time(k) > window.begin && sig.time(k) < window.end) times.push_back(sig.time(k));
  times.push_back(window.end);

  const auto& coeffs = field.coefficients();
  std::vector<std::vector<Jet>> jets(points.size(), std::vector<Jet>(coeffs.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t k = 0; k < coeffs.size(); ++k) jets[i][k] = coeffs.jet(k, points[i]);

  auto elapsed = std::make_shared<std::vector<double>>();
  auto r1 = std::make_shared<std::vector<double>>();
  auto r2 = std::make_shared<std::vector<double>>();
  double m1 = 0.0, m2c0 = 0.0, m2g = 0.0, m2h = 0.0;
  for (double t : times) {
    const auto z = sig.values_at(t);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Jet j = NoiseField::combine(jets[i], z);
      const double e = j.value - lambda * t;
      const double rho2 = std::exp(-e);
      m1 = std::max(m1, std::exp(e));
      m2c0 = std::max(m2c0, rho2);
      m2g = std::max(m2g, rho2 * j.grad_norm());
      // D^2 rho2 = rho2 (grad mu grad mu^T - D^2 mu)
      const double a = j.grad[0] * j.grad[0] - j.hess[0];
      const double b = j.grad[0] * j.grad[1] - j.hess[1];
      const double c = j.grad[1] * j.grad[1] - j.hess[2];
      m2h = std::max(m2h, rho2 * std::sqrt(a * a + 2.0 * b * b + c * c));
    }
    elapsed->push_back(t - window.begin);
    r1->push_back(m1);
    r2->push_back(m2c0 + m2g + m2h);
  }
  // Running sups; between knots take the next knot (an upper bound).
  auto lookup = [elapsed](const std::shared_ptr<std::vector<double>>& v, double t) {
    auto it = std::lower_bound(elapsed->begin(), elapsed->end(), t - 1e-14);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - elapsed->begin()), v->size() - 1);
    return (*v)[k];
  };
  return {[lookup, r1](double t) { return lookup(r1, t); },
          [lookup, r2](double t) { return lookup(r2, t); }};
}

GeneralBounds general_bounds(const RhoNorms& rho, double R, double H, double m, int d,
                             double t_max) {
  check_mH(m, H);
  if (!(R > 0.0)) throw InvalidArgument("bounds: R must be positive");
  if (!(t_max > 0.0)) throw InvalidArgument("general_bounds: t_max must be positive");
  const double cdm = general_constant(m, d);
  auto ct = [rho, cdm, R](double t) {
    const double a = rho.rho1_c0(t), b = rho.rho2_c02(t);
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw DegenerateCoefficient("general_bounds: coefficient norms must be positive and finite");
    return cdm * (1.0 + R) * (1.0 + R) * a * b;
  };
  ct(0.0);
  GeneralBounds g;
  HoleFillingBound& b = g.hole;
  b.kind = BoundKind::general;
  b.R = R;
  b.H = H;
  b.m = m;
  b.d = d;
  b.c_det = c_det(m, d);
  b.window = {0.0, t_max};
  const double target = R * R / std::pow(H, m - 1.0);
  b.t_star = sup_bisect([&ct](double t) { return t * ct(t); }, 0.0, t_max, target, &b.clamped);
  b.modulation = ct(b.t_star);
  const double hr = std::pow(H, 0.5 * (m - 1.0));
  b.schedule = [ct, R, hr, t_max](double t) {
    const double tt = std::clamp(t, 0.0, t_max);
    return R - std::sqrt(tt) * std::sqrt(ct(tt)) * hr;
  };
  g.expansion_radius = [ct, hr, t_max](double t) {
    if (t <= 0.0) return 0.0;
    return std::sqrt(t) * std::sqrt(ct(std::min(t, t_max))) * hr;
  };
  return g;
}

double l1_lower_bound(double t, double y0_l1, double H, double C, double m) {
  if (t < 0.0 || y0_l1 < 0.0 || H < 0.0 || C < 0.0)
    throw InvalidArgument("l1_lower_bound: inputs must be non-negative");
  if (t == 0.0 || H == 0.0) return y0_l1;
  return std::exp(-C * t * std::pow(H, m - 1.0)) * y0_l1;
}

double l1_constant(double rho1_c02, double rho2m_c0) { return rho1_c02 + rho2m_c0; }

}  // namespace spme
