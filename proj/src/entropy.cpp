#include "spme/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spme/errors.hpp"
#include "spme/support.hpp"

namespace spme {

BumpGrid build_bump_grid(double eps, const Box& domain, double kappa, double m) {
  if (!(eps > 0.0)) throw InvalidArgument("bump grid: eps must be positive");
  if (!(kappa > 0.0)) throw InvalidArgument("bump grid: kappa must be positive");
  if (!(m > 1.0)) throw InvalidArgument("bump grid: m must exceed 1");
  BumpGrid g;
  g.eps = eps;
  g.domain = domain;
  g.kappa = kappa;
  g.m = m;
  g.M = std::pow(kappa * eps, 2.0 / (m - 1.0));
  std::array<std::vector<double>, 2> axis;
  for (int a = 0; a < domain.dim; ++a) {
    const double L = domain.hi[a] - domain.lo[a];
    const int n = static_cast<int>(std::ceil(L / (2.0 * eps) - 1e-12)) - 1;
    const double first = domain.lo[a] + 0.5 * (L - 2.0 * eps * (n - 1));
    for (int j = 0; j < n; ++j) axis[a].push_back(first + 2.0 * eps * j);
  }
  if (domain.dim == 1) {
    for (double x : axis[0]) g.centers.push_back({x, 0.0});
  } else {
    for (double y : axis[1])
      for (double x : axis[0]) g.centers.push_back({x, y});
  }
  if (g.centers.size() < 2)
    throw TooFewCenters("bump grid: eps = " + std::to_string(eps) + " leaves fewer than two centres");
  return g;
}

void rescaled_coefficients(const PointwiseNoise& noise, const AttractorRescaling& r, double t,
                           std::span<double> rho1, std::span<double> rho2) {
  const double g = r.G(t);
  noise.mu(g, rho1);
  for (std::size_t i = 0; i < rho1.size(); ++i) {
    const double mu = rho1[i];
    rho1[i] = std::exp(mu + r.eta * g);
    rho2[i] = std::exp(-mu + r.eta * g);
  }
}

namespace {

struct Local {
  Grid grid;
  std::vector<std::size_t> to_global;
};

Local local_grid(const Grid& global, const Point& c, double half) {
  const int d = global.dim();
  const double h = global.h();
  std::array<int, 2> i0{0, 0}, i1{0, 0};
  for (int a = 0; a < d; ++a) {
    const double lo = global.box().lo[a];
    i0[a] = std::max(0, static_cast<int>(std::floor((c[a] - half - lo) / h)));
    i1[a] = std::min(global.nodes_along(a) - 1, static_cast<int>(std::ceil((c[a] + half - lo) / h)));
  }
  const Point glo = global.box().lo;
  Point lo{glo[0] + h * i0[0], glo[1] + h * i0[1]};
  Point hi{glo[0] + h * i1[0], glo[1] + h * i1[1]};
  Grid g = d == 1 ? Grid::line(lo[0], hi[0], i1[0] - i0[0]) : Grid::square(lo, hi, i1[0] - i0[0]);
  Local out{g, std::vector<std::size_t>(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto lc = g.coords(i);
    out.to_global[i] = global.index(lc[0] + i0[0], lc[1] + i0[1]);
  }
  return out;
}

}  // namespace

BumpRun evolve_bumps(const BumpGrid& bumps, const NoiseField& field, const EntropyParams& params) {
  const Box& dom = bumps.domain;
  if (field.dim() != dom.dim) throw InvalidArgument("evolve_bumps: dimension mismatch");
  if (params.cells_per_eps < 4) throw InvalidArgument("evolve_bumps: cells_per_eps must be >= 4");
  if (params.steps < 1) throw InvalidArgument("evolve_bumps: steps must be >= 1");
  if (!(params.t_start_fraction > 0.0 && params.t_start_fraction < 1.0))
    throw InvalidArgument("evolve_bumps: t_start_fraction must lie in (0, 1)");

  const AttractorRescaling resc0 = attractor_rescaling(params.delta, params.lambda, params.m);
  const double eps = bumps.eps;
  const double L = dom.hi[0] - dom.lo[0];
  const int cells = static_cast<int>(std::ceil(L * params.cells_per_eps / eps - 1e-9));
  BumpRun run(bumps,
              dom.dim == 1 ? Grid::line(dom.lo[0], dom.hi[0], cells) : Grid::square(dom.lo, dom.hi, cells),
              resc0);
  run.T = run.rescaling.T;
  run.t_start = params.t_start_fraction * run.T;
  if (run.rescaling.G(run.t_start) < field.window().begin - 1e-12 || field.window().end < -1e-12)
    throw OutOfRange("evolve_bumps: signal window must cover [G(t_start), 0]");

  SolverParams sp = params.solver;
  sp.m = params.m;
  sp.t_start = run.t_start;
  sp.t_end = run.T;
  sp.dt = (run.T - run.t_start) / static_cast<double>(params.steps);

  std::vector<Local> locals;
  for (const Point& c : bumps.centers) locals.push_back(local_grid(run.grid, c, params.local_halfwidth * eps));

  double kappa = bumps.kappa;
  for (int shrink = 0;; ++shrink) {
    run.bumps = build_bump_grid(eps, dom, kappa, params.m);
    run.traj.clear();
    run.to_global.clear();
    run.l1_initial.clear();
    run.l1_final.clear();
    double worst = 0.0;
    bool ok = true;
    for (std::size_t b = 0; b < bumps.count() && ok; ++b) {
      const Local& loc = locals[b];
      const Point& c = bumps.centers[b];
      std::vector<Point> nodes(loc.grid.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = loc.grid.point(i);
      auto noise = std::make_shared<PointwiseNoise>(field, nodes);
      const AttractorRescaling resc = run.rescaling;
      auto cache = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>();
      auto fill = [noise, resc, cache](double t) {
        cache->first.resize(noise->size());
        cache->second.resize(noise->size());
        rescaled_coefficients(*noise, resc, t, cache->first, cache->second);
      };
      NodalCoefficient rho1 = [fill, cache](double t, std::span<double> out) {
        fill(t);
        std::copy(cache->first.begin(), cache->first.end(), out.begin());
      };
      NodalCoefficient rho2 = [noise, resc](double t, std::span<double> out) {
        std::vector<double> tmp(out.size());
        rescaled_coefficients(*noise, resc, t, tmp, out);
      };
      Field u0(loc.grid.size(), 0.0);
      for (std::size_t i = 0; i < u0.size(); ++i)
        if (distance(nodes[i], c, dom.dim) < 0.5 * eps) u0[i] = run.bumps.M;
      Trajectory tr = solve_general(rho1, rho2, u0, constant_boundary(0.0), loc.grid, sp);

      for (const auto& snap : tr.snapshots) {
        const CellSet s = support_of(loc.grid, snap, tr.support_threshold);
        for (std::size_t i : s.cells) {
          const double r = distance(nodes[i], c, dom.dim);
          worst = std::max(worst, r);
          if (!(r < eps)) ok = false;
        }
      }
      run.l1_initial.push_back(l1_norm(loc.grid, tr.snapshots.front()));
      run.l1_final.push_back(l1_norm(loc.grid, tr.snapshots.back()));
      run.traj.push_back(std::move(tr));
      run.to_global.push_back(loc.to_global);
    }
    run.margin = eps - worst;
    run.shrinks = shrink;
    if (ok) {
      run.certified = true;
      return run;
    }
    if (shrink >= params.max_shrink)
      throw ContainmentFailure("evolve_bumps: support left B_eps after " + std::to_string(shrink) +
                               " halvings of kappa (eps = " + std::to_string(eps) +
                               ", kappa = " + std::to_string(kappa) + ", margin = " +
                               std::to_string(run.margin) + ")");
    kappa *= 0.5;
  }
}

Field superposition(const BumpRun& run, const std::vector<int>& codeword, double t) {
  if (codeword.size() != run.traj.size()) throw InvalidArgument("superposition: codeword length");
  Field out(run.grid.size(), 0.0);
  for (std::size_t b = 0; b < codeword.size(); ++b) {
    if (codeword[b] == 0) continue;
    const Field f = run.traj[b].at(t);
    for (std::size_t i = 0; i < f.size(); ++i) out[run.to_global[b][i]] += codeword[b] * f[i];
  }
  return out;
}

double l1_separation(const BumpRun& run, const std::vector<int>& a, const std::vector<int>& b) {
  if (!run.certified) throw InvalidArgument("l1_separation: disjoint supports not certified");
  const Field fa = superposition(run, a, run.T);
  const Field fb = superposition(run, b, run.T);
  Field diff(fa.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = fa[i] - fb[i];
  return l1_norm(run.grid, diff);
}

EntropyPoint entropy_point(const BumpRun& run) {
  if (!run.certified) throw InvalidArgument("entropy_point: run not certified");
  EntropyPoint p;
  p.eps = run.bumps.eps;
  p.count = run.bumps.count();
  p.bits = static_cast<double>(p.count);
  p.kappa = run.bumps.kappa;
  // Distinct codewords differ in at least one bump; with disjoint supports
  // their distance is at least the smallest single-bump mass.
  p.delta = 0.5 * *std::min_element(run.l1_final.begin(), run.l1_final.end());
  return p;
}

double theoretical_exponent(int d, double m) { return d * (m - 1.0) / (2.0 + d * (m - 1.0)); }

nlohmann::json EntropyFit::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points)
    pts.push_back({{"eps", p.eps}, {"count", p.count}, {"delta", p.delta}, {"bits", p.bits}, {"kappa", p.kappa}});
  return {{"points", pts}, {"slope", slope}, {"intercept", intercept}, {"theoretical_exponent", theoretical}};
}

EntropyFit entropy_estimate(const std::vector<EntropyPoint>& points, int d, double m) {
  if (points.size() < 4) throw InsufficientData("entropy_estimate: need at least 4 points");
  EntropyFit fit;
  fit.points = points;
  fit.theoretical = theoretical_exponent(d, m);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(points.size());
  for (const auto& p : points) {
    if (!(p.delta > 0.0) || !(p.bits > 0.0)) throw InvalidArgument("entropy_estimate: degenerate point");
    const double x = -std::log2(p.delta), y = std::log2(p.bits);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw InsufficientData("entropy_estimate: all deltas coincide");
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

}  // namespace spme
