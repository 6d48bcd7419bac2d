#include "spme/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "spme/barriers.hpp"
#include "spme/bounds.hpp"
#include "spme/entropy.hpp"
#include "spme/errors.hpp"
#include "spme/oracle.hpp"
#include "spme/rng.hpp"
#include "spme/support.hpp"
#include "spme/transforms.hpp"

namespace spme {

namespace {

using nlohmann::json;
constexpr double kInf = std::numeric_limits<double>::infinity();

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json provenance(const ExperimentConfig& cfg) {
  return {{"schema_version", 1},
          {"experiment", to_string(cfg.kind)},
          {"config_hash", config_hash(cfg.raw)},
          {"config", cfg.raw},
          {"seeds", cfg.seeds}};
}

SolverParams solver_params(const ExperimentConfig& cfg) {
  SolverParams p = cfg.solver;
  p.m = cfg.m;
  return p;
}

bool field_is_zero(const NoiseField& field) {
  const CoefficientSet& c = field.coefficients();
  for (std::size_t k = 0; k < c.size(); ++k) {
    const Expression& e = c.expression(k);
    if (!(e.is_constant() && e.eval({0.0, 0.0}) == 0.0)) {
      const auto z = field.signal().channel(k);
      if (std::any_of(z.begin(), z.end(), [](double v) { return v != 0.0; })) return false;
    }
  }
  return true;
}

// Points of the sphere of radius R around c that lie in the domain.
std::vector<Point> sphere_points(const Point& c, double R, int dim) {
  if (dim == 1) return {{c[0] - R, 0.0}, {c[0] + R, 0.0}};
  std::vector<Point> pts;
  const int n = 128;
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * M_PI * k / n;
    pts.push_back({c[0] + R * std::cos(a), c[1] + R * std::sin(a)});
  }
  return pts;
}

// sup of op(mu) over the points and [t0, t1]. mu is linear in t between
// knots, so for convex op the knots and the endpoints suffice.
double sup_over_knots(const NoiseField& field, const std::vector<Point>& pts, double t0, double t1,
                      double (*op)(double)) {
  PointwiseNoise pn(field, pts);
  std::vector<double> mu(pts.size());
  const Signal& s = field.signal();
  std::vector<double> ts{t0, t1};
  for (std::size_t k = 0; k < s.samples(); ++k)
    if (s.time(k) > t0 && s.time(k) < t1) ts.push_back(s.time(k));
  double best = 0.0;
  for (double t : ts) {
    pn.mu(t, mu);
    for (double v : mu) best = std::max(best, op(v));
  }
  return best;
}

double sup_exp_mu(const NoiseField& field, const std::vector<Point>& pts, double t0, double t1) {
  return sup_over_knots(field, pts, t0, t1, [](double v) { return std::exp(v); });
}

std::vector<Point> grid_points(const Grid& grid) {
  std::vector<Point> pts(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pts[i] = grid.point(i);
  return pts;
}

// sup over snapshots of |e^{mu - lambda t} X|.
double sup_transformed(const Trajectory& traj, const NoiseField& field, double lambda) {
  PointwiseNoise pn(field, grid_points(traj.grid));
  std::vector<double> mu(traj.grid.size());
  double best = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    pn.mu(traj.times[k], mu);
    for (std::size_t i = 0; i < mu.size(); ++i)
      best = std::max(best, std::abs(traj.snapshots[k][i]) * std::exp(mu[i] - lambda * traj.times[k]));
  }
  return best;
}

double sup_all(const Trajectory& traj) {
  double best = 0.0;
  for (const auto& s : traj.snapshots) best = std::max(best, sup_norm(s));
  return best;
}

void check_ball_inside(const ExperimentConfig& cfg) {
  if (cfg.domain.distance_to_boundary(cfg.center) < cfg.radius - 1e-12)
    throw ConfigError("config: hole_fill ball must lie inside the domain");
}

Ball whole_domain(const Box& dom) {
  Point c{0.5 * (dom.lo[0] + dom.hi[0]), 0.5 * (dom.lo[1] + dom.hi[1])};
  return {c, 0.5 * dom.diameter()};
}

std::string csv_row(std::initializer_list<double> vals) {
  std::string s;
  for (double v : vals) {
    if (!s.empty()) s += ',';
    s += format_double(v);
  }
  return s + '\n';
}

// ---------------------------------------------------------------- hole-fill

struct BoundCheck {
  explicit BoundCheck(HoleFillingBound b) : bound(std::move(b)) {}
  HoleFillingBound bound;
  bool asserted = true;
  std::string note;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double min_slack = kInf;
  double worst_t = 0.0;
};

json check_json(const BoundCheck& c) {
  json j = c.bound.to_json();
  j["asserted"] = c.asserted;
  if (!c.note.empty()) j["note"] = c.note;
  j["checked"] = c.checked;
  j["violations"] = c.violations;
  j["min_slack"] = num_or_null(c.min_slack);
  j["worst_t"] = c.worst_t;
  return j;
}

struct SeedOutcome {
  json report;
  std::map<std::string, std::string> files;
  bool violated = false;
};

SeedOutcome hole_fill_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  const SolverParams sp = solver_params(cfg);
  Grid grid = make_grid(cfg);
  grid.pin_outside_ball(cfg.center, cfg.radius);
  const double h = grid.h();
  const NoiseField field = make_field(cfg, seed, sp.t_end);
  const Trajectory traj =
      solve_spme(Field(grid.size(), 0.0), field, 0.0, constant_boundary(cfg.H), grid, sp);
  const double tau = traj.support_threshold;
  const int d = cfg.dim;
  const TimeWindow window{traj.t_begin(), traj.t_end()};
  const double H_trans =
      cfg.H * sup_exp_mu(field, sphere_points(cfg.center, cfg.radius, d), window.begin, window.end);

  std::vector<BoundCheck> checks;
  const bool zero = field_is_zero(field);
  // Scaling C_det by s is the same as scaling H^{m-1} by 1/s in every formula.
  const double H_det = cfg.H * std::pow(cfg.c_det_scale, -1.0 / (cfg.m - 1.0));
  BoundCheck det(det_hole_bound(cfg.radius, H_det, cfg.m, d));
  det.bound.H = cfg.H;
  det.bound.c_det *= cfg.c_det_scale;
  det.asserted = zero;
  if (!zero) det.note = "reference only: the noise field is not zero";
  checks.push_back(det);
  if (field.spatially_constant()) {
    const TimeChange tc = time_change_homogeneous(field, cfg.center, cfg.m, traj.times);
    checks.emplace_back(homog_hole_bound(cfg.radius, H_trans, cfg.m, d, tc));
  }
  checks.emplace_back(small_ball_bound(cfg.radius, cfg.center, field, H_trans, cfg.m, d, window, h, cfg.refine));
  checks.emplace_back(small_time_bound(cfg.radius, cfg.center, field, cfg.H, cfg.m, d, window, h, cfg.refine));

  std::vector<double> measured(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) measured[k] = vanish_radius(traj, cfg.center, traj.times[k], tau);

  const bool inconclusive = tau <= 0.0;
  for (auto& c : checks) {
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const double t = traj.times[k] - window.begin;
      if (t > c.bound.t_star) break;
      const double slack = measured[k] - (c.bound.radius(t) - 2.0 * h);
      ++c.checked;
      if (slack < c.min_slack) {
        c.min_slack = slack;
        c.worst_t = traj.times[k];
      }
      if (slack < 0.0) ++c.violations;
    }
  }

  // First time the node nearest the centre exceeds tau.
  const std::size_t ic = grid.nearest(cfg.center);
  double first_exceed = kInf;
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (std::abs(traj.snapshots[k][ic]) > tau) {
      first_exceed = traj.times[k] - window.begin;
      break;
    }

  SeedOutcome out;
  json bounds = json::array();
  bool violated = false;
  for (const auto& c : checks) {
    bounds.push_back(check_json(c));
    if (c.asserted && c.violations > 0) violated = true;
  }
  // Centre check for the deterministic case: the centre stays below tau
  // until T_det up to one step and the O(h) radius slack converted to time.
  json centre = {{"node", ic}, {"first_exceed", num_or_null(first_exceed)}};
  if (zero) {
    const double t_det = checks.front().bound.t_star;
    const double slack = sp.dt + 2.0 * h * (2.0 * t_det / cfg.radius);
    centre["t_det"] = t_det;
    centre["slack"] = slack;
    centre["passed"] = first_exceed >= t_det - slack;
    if (first_exceed < t_det - slack) violated = true;
  }
  out.violated = !inconclusive && violated;
  out.report = {{"seed", seed},
                {"h", h},
                {"tau", tau},
                {"H", cfg.H},
                {"H_transformed", H_trans},
                {"verdict", inconclusive ? "inconclusive" : (violated ? "violation" : "pass")},
                {"centre", centre},
                {"bounds", bounds},
                {"newton_iterations", traj.newton_iterations}};
  if (inconclusive) out.report["note"] = "support threshold is zero; regularization tails make supports unreliable";

  std::ostringstream csv;
  csv << "t,measured";
  for (const auto& c : checks) csv << ',' << to_string(c.bound.kind);
  csv << '\n';
  std::vector<Series> series{{"measured", {}, {}}};
  for (const auto& c : checks) series.push_back({to_string(c.bound.kind), {}, {}});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k] - window.begin;
    csv << format_double(traj.times[k]) << ',' << format_double(measured[k]);
    series[0].x.push_back(t);
    series[0].y.push_back(measured[k]);
    for (std::size_t b = 0; b < checks.size(); ++b) {
      const double r = checks[b].bound.radius(t);
      csv << ',' << format_double(r);
      series[b + 1].x.push_back(t);
      series[b + 1].y.push_back(r);
    }
    csv << '\n';
  }
  const std::string tag = "seed" + std::to_string(seed);
  out.files["hole_fill_" + tag + ".csv"] = csv.str();
  if (cfg.svg) out.files["hole_fill_" + tag + ".svg"] = svg_plot("hole filling, seed " + std::to_string(seed), "t", "radius", series);
  return out;
}

// ---------------------------------------------------------------- propagation

SeedOutcome propagation_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  const SolverParams sp = solver_params(cfg);
  const Grid grid = make_grid(cfg);
  const double hg = grid.h();
  const NoiseField field = make_field(cfg, seed, sp.t_end);
  const Trajectory traj =
      solve_spme(make_initial(cfg, grid), field, cfg.lambda, constant_boundary(0.0), grid, sp);
  const double tau = traj.support_threshold;
  const SupportRecord rec = SupportRecord::from(traj, tau);
  const double H_y = std::max(sup_transformed(traj, field, cfg.lambda), 1e-300);
  const double H_x = std::max(sup_all(traj), 1e-300);

  // The support touching the boundary ends all containment checks.
  double touch = kInf;
  for (std::size_t k = 0; k < traj.size() && !std::isfinite(touch); ++k)
    for (std::size_t i : rec.sets[k].cells)
      if (grid.box().distance_to_boundary(grid.point(i)) <= 2.0 * hg + 1e-12) {
        touch = traj.times[k];
        break;
      }

  // At most ~64 comparison times per s keep the radius checks affordable.
  const std::size_t stride = std::max<std::size_t>(1, traj.size() / 64);
  const std::vector<Point> pts = region_points(cfg.domain, whole_domain(cfg.domain), hg);

  json entries = json::array();
  std::size_t violations = 0;
  for (double s_req : cfg.s_ladder) {
    const std::size_t ks = static_cast<std::size_t>(
        std::lower_bound(traj.times.begin(), traj.times.end(), s_req - 1e-12) - traj.times.begin());
    if (ks >= traj.size()) continue;
    const double s = traj.times[ks];
    const CellSet& S = rec.sets[ks];
    json entry = {{"s", s}, {"support_size", S.size()}};
    if (s >= touch) {
      entry["suspended"] = "support reached the boundary";
      entries.push_back(entry);
      continue;
    }
    json hs = json::array();
    for (double h : cfg.h_ladder) {
      json e = {{"h", h}};
      if (S.empty()) {
        std::size_t bad = 0;
        for (std::size_t k = ks; k < traj.size(); ++k) bad += rec.sets[k].empty() ? 0 : 1;
        e["empty_support"] = true;
        e["violations"] = bad;
        violations += bad;
        hs.push_back(e);
        continue;
      }
      try {
        const PropagationBound pb = propagation_bound(grid, S, s, h, field, H_y, cfg.m, traj.t_end());
        e["bound"] = pb.to_json();
        std::size_t checked = 0, bad = 0;
        double min_margin = kInf;
        for (std::size_t k = ks + 1; k < traj.size(); ++k) {
          const double t = traj.times[k] - s;
          if (t > pb.t_h || traj.times[k] >= touch) break;
          const double margin = containment_margin(traj, s, t, h, tau);
          min_margin = std::min(min_margin, margin);
          ++checked;
          if (margin < -2.0 * hg) ++bad;
        }
        e["checked"] = checked;
        e["violations"] = bad;
        e["min_margin"] = num_or_null(min_margin);
        violations += bad;
      } catch (const DomainMarginError& ex) {
        e["suspended"] = ex.what();
      }
      hs.push_back(e);
    }
    entry["horizon_checks"] = hs;

    if (!S.empty()) {
      const PropagationRadius radius(field, pts, s, H_x, cfg.m);
      std::size_t checked = 0, bad = 0;
      double min_slack = kInf;
      for (std::size_t k = ks + stride; k < traj.size(); k += stride) {
        if (traj.times[k] >= touch) break;
        const double t = traj.times[k] - s;
        const double grown = rec.sets[k].empty() ? 0.0 : max_distance(grid, rec.sets[k], S);
        const double slack = radius(t) + 2.0 * hg - grown;
        min_slack = std::min(min_slack, slack);
        ++checked;
        if (slack < 0.0) ++bad;
      }
      entry["radius_check"] = {{"checked", checked}, {"violations", bad}, {"min_slack", num_or_null(min_slack)}};
      violations += bad;
    } else {
      entry["radius_check"] = {{"checked", 0}, {"violations", 0}};
    }
    entries.push_back(entry);
  }

  SeedOutcome out;
  const bool inconclusive = tau <= 0.0;
  out.violated = !inconclusive && violations > 0;
  out.report = {{"seed", seed},
                {"h_grid", hg},
                {"tau", tau},
                {"H_transformed", H_y},
                {"H", H_x},
                {"boundary_touch", num_or_null(touch)},
                {"violations", violations},
                {"verdict", inconclusive ? "inconclusive" : (violations ? "violation" : "pass")},
                {"checks", entries}};
  std::ostringstream csv;
  rec.write_front_csv(grid, csv);
  out.files["front_seed" + std::to_string(seed) + ".csv"] = csv.str();
  if (cfg.svg && cfg.dim == 1) {
    Series lo{"front lo", {}, {}}, hi{"front hi", {}, {}};
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (rec.sets[k].empty()) continue;
      lo.x.push_back(traj.times[k]);
      hi.x.push_back(traj.times[k]);
      lo.y.push_back(grid.point(rec.sets[k].cells.front())[0]);
      hi.y.push_back(grid.point(rec.sets[k].cells.back())[0]);
    }
    out.files["front_seed" + std::to_string(seed) + ".svg"] = svg_plot("support front", "t", "x", {lo, hi});
  }
  return out;
}

Report collect(const ExperimentConfig& cfg, const std::function<SeedOutcome(std::uint64_t)>& one) {
  std::vector<SeedOutcome> outs(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), cfg.workers, [&](std::size_t i) { outs[i] = one(cfg.seeds[i]); });
  Report r;
  r.json = provenance(cfg);
  r.json["runs"] = json::array();
  std::size_t failed = 0;
  for (auto& o : outs) {
    r.json["runs"].push_back(o.report);
    for (auto& [k, v] : o.files) r.files[k] = std::move(v);
    if (o.violated) ++failed;
  }
  r.json["failed_runs"] = failed;
  r.exit_code = failed ? kExitViolation : kExitPass;
  return r;
}

}  // namespace

// ---------------------------------------------------------------- runners

Report run_hole_fill(const ExperimentConfig& cfg) {
  if (cfg.lambda != 0.0) throw ConfigError("config: hole-fill needs lambda = 0");
  check_ball_inside(cfg);
  if (!(cfg.c_det_scale > 0.0)) throw ConfigError("config: validate.c_det_scale must be positive");
  return collect(cfg, [&](std::uint64_t s) { return hole_fill_seed(cfg, s); });
}

Report run_propagation(const ExperimentConfig& cfg) {
  for (double h : cfg.h_ladder)
    if (!(h > 0.0)) throw ConfigError("config: propagation.h entries must be positive");
  return collect(cfg, [&](std::uint64_t s) { return propagation_seed(cfg, s); });
}

Report run_simulate(const ExperimentConfig& cfg) {
  return collect(cfg, [&](std::uint64_t seed) {
    const SolverParams sp = solver_params(cfg);
    const Grid grid = make_grid(cfg);
    const NoiseField field = make_field(cfg, seed, sp.t_end);
    const Trajectory traj =
        solve_spme(make_initial(cfg, grid), field, cfg.lambda, constant_boundary(0.0), grid, sp);
    const double mu_c0 =
        sup_over_knots(field, grid_points(grid), traj.t_begin(), traj.t_end(), [](double v) { return std::abs(v); });
    const double c = std::exp(2.0 * mu_c0);
    const LinfMonitor mon = monitor_linf(traj, c);
    SeedOutcome out;
    out.violated = mon.violated;
    out.report = {{"seed", seed},
                  {"h", grid.h()},
                  {"snapshots", traj.size()},
                  {"delta_reg", traj.delta_reg},
                  {"support_threshold", traj.support_threshold},
                  {"newton_iterations", traj.newton_iterations},
                  {"linf_monitor", {{"constant", c}, {"violated", mon.violated}}},
                  {"verdict", mon.violated ? "violation" : "pass"}};
    if (mon.first_violation) out.report["linf_monitor"]["first_violation"] = traj.times[*mon.first_violation];
    std::ostringstream csv;
    csv << "t,sup_x,l1_x\n";
    for (std::size_t k = 0; k < traj.size(); ++k)
      csv << csv_row({traj.times[k], mon.sup[k], l1_norm(grid, traj.snapshots[k])});
    const std::string tag = "seed" + std::to_string(seed);
    out.files["norms_" + tag + ".csv"] = csv.str();
    auto [bin, meta] = trajectory_files(traj);
    json sidecar = json::parse(meta);
    sidecar["provenance"] = {{"seed", seed}, {"config_hash", config_hash(cfg.raw)}, {"m", cfg.m}, {"lambda", cfg.lambda}};
    out.files["trajectory_" + tag + ".bin"] = std::move(bin);
    out.files["trajectory_" + tag + ".json"] = sidecar.dump(1) + "\n";
    return out;
  });
}

Report run_entropy(const ExperimentConfig& cfg) {
  if (cfg.eps_ladder.size() < 4) throw ConfigError("config: entropy.eps needs at least 4 values");
  EntropyParams p;
  p.lambda = cfg.lambda;
  p.delta = cfg.delta;
  p.m = cfg.m;
  p.kappa = cfg.kappa;
  p.max_shrink = cfg.max_shrink;
  p.t_start_fraction = cfg.t_start_fraction;
  p.cells_per_eps = cfg.cells_per_eps;
  p.steps = cfg.entropy_steps;
  p.solver = solver_params(cfg);
  if (!(p.delta > 0.0)) throw ConfigError("config: entropy.delta must be positive");
  const AttractorRescaling r = attractor_rescaling(p.delta, p.lambda, p.m);
  const double span = std::ceil(-r.G(p.t_start_fraction * r.T)) + 1.0;

  return collect(cfg, [&](std::uint64_t seed) {
    const NoiseField field = make_field(cfg, seed, span, true);
    std::vector<EntropyPoint> pts(cfg.eps_ladder.size());
    std::vector<json> runs(cfg.eps_ladder.size());
    parallel_for(pts.size(), 1, [&](std::size_t i) {
      const BumpGrid bg = build_bump_grid(cfg.eps_ladder[i], cfg.domain, p.kappa, p.m);
      const BumpRun run = evolve_bumps(bg, field, p);
      pts[i] = entropy_point(run);
      runs[i] = {{"eps", run.bumps.eps},
                 {"count", run.bumps.count()},
                 {"kappa", run.bumps.kappa},
                 {"shrinks", run.shrinks},
                 {"certified", run.certified},
                 {"margin", run.margin}};
    });
    const EntropyFit fit = entropy_estimate(pts, cfg.dim, cfg.m);
    SeedOutcome out;
    const bool ok = fit.slope >= fit.theoretical - 0.1;
    out.violated = !ok;
    out.report = {{"seed", seed}, {"fit", fit.to_json()}, {"runs", runs}, {"verdict", ok ? "pass" : "violation"}};
    std::ostringstream csv;
    csv << "eps,count,delta,bits,kappa\n";
    for (const auto& e : pts) csv << csv_row({e.eps, double(e.count), e.delta, e.bits, e.kappa});
    out.files["entropy_seed" + std::to_string(seed) + ".csv"] = csv.str();
    return out;
  });
}

Report run_bounds_only(const ExperimentConfig& cfg) {
  check_ball_inside(cfg);
  return collect(cfg, [&](std::uint64_t seed) {
    const SolverParams sp = solver_params(cfg);
    const NoiseField field = make_field(cfg, seed, sp.t_end);
    const Grid grid = make_grid(cfg);
    const double h = grid.h();
    const int d = cfg.dim;
    const TimeWindow window{0.0, sp.t_end};

    std::vector<double> Rs = cfg.R_ladder, ts = cfg.t_ladder;
    std::sort(Rs.begin(), Rs.end(), std::greater<>());
    std::sort(ts.begin(), ts.end(), std::greater<>());
    const double mu_R = mu_norms(field, window, Ball{cfg.center, Rs.front()}, h, cfg.refine).c02;
    const double mu_t = mu_norms(field, {0.0, ts.front()}, Ball{cfg.center, cfg.radius}, h, cfg.refine).c02;

    json cr = json::array(), ct = json::array();
    bool ok = true;
    double prev = kInf;
    for (double R : Rs) {
      MuNorms n;
      const double c = small_ball_constant(R, cfg.center, field, window, cfg.m, d, h, cfg.refine, &n);
      const bool mono = c >= prev * (1.0 - 1e-12) || !std::isfinite(prev);
      const bool limit = std::abs(c - 1.0) <= 5.0 * R * mu_R + 1e-12;
      ok = ok && mono && limit;
      cr.push_back({{"R", R}, {"C_R", c}, {"monotone", mono}, {"within_slack", limit}, {"slack", 5.0 * R * mu_R}});
      prev = c;
    }
    NormSampler sampler(field, region_points(cfg.domain, Ball{cfg.center, cfg.radius}, h / cfg.refine),
                        cfg.center, 0.0);
    prev = -kInf;
    std::reverse(ts.begin(), ts.end());
    for (double t : ts) {
      const MuNorms n = sampler.over({0.0, t});
      const double c = bracket(cfg.m, d, cfg.radius, n.dev_time_grad, n.dev_time_lap) *
                       std::exp(2.0 * (cfg.m - 1.0) * n.dev_time);
      const bool mono = c >= prev * (1.0 - 1e-12);
      const bool limit = std::abs(c - 1.0) <= 5.0 * t * mu_t + 1e-12;
      ok = ok && mono && limit;
      ct.push_back({{"t", t}, {"C_t", c}, {"monotone", mono}, {"within_slack", limit}, {"slack", 5.0 * t * mu_t}});
      prev = c;
    }
    SeedOutcome out;
    out.violated = !ok;
    out.report = {{"seed", seed},
                  {"mu_c02_ball", mu_R},
                  {"mu_c02_window", mu_t},
                  {"C_R", cr},
                  {"C_t", ct},
                  {"formula_source", {{"C_R", to_string(BoundKind::small_ball)}, {"C_t", to_string(BoundKind::small_time)}}},
                  {"verdict", ok ? "pass" : "violation"}};
    return out;
  });
}

// ---------------------------------------------------------------- validate

std::vector<ConvergenceRow> barenblatt_convergence(double m, const std::vector<double>& hs, double c_b,
                                                   double t0, double duration) {
  std::vector<ConvergenceRow> rows;
  const BarenblattProfile u(m, 1, c_b, t0, {0.0, 0.0});
  const double t1 = t0 + duration;
  for (double h : hs) {
    const int cells = static_cast<int>(std::lround(4.0 / h));
    const Grid grid = Grid::line(-2.0, 2.0, cells);
    SolverParams sp;
    sp.m = m;
    sp.dt = h * h;
    sp.t_start = t0;
    sp.t_end = t1;
    sp.snapshot_stride = static_cast<std::size_t>(std::lround(duration / sp.dt)) + 1;
    const Trajectory traj = solve_general(constant_coefficient(1.0), constant_coefficient(1.0),
                                          sample(u, grid, t0), constant_boundary(0.0), grid, sp);
    const Field& last = traj.snapshots.back();
    const double peak = u.peak(t1), r = u.radius(t1);
    ConvergenceRow row;
    row.h = h;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Point x = grid.point(i);
      const double e = std::abs(last[i] - u.eval(t1, x)) / peak;
      row.error = std::max(row.error, e);
      if (std::abs(x[0]) < 0.8 * r) row.interior_error = std::max(row.interior_error, e);
    }
    if (!rows.empty()) {
      row.ratio = rows.back().error / row.error;
      row.interior_ratio = rows.back().interior_error / row.interior_error;
    }
    rows.push_back(row);
  }
  return rows;
}

ComparisonTrial comparison_trial(std::uint64_t seed, std::size_t index, double newton_tol) {
  Rng rng = Rng(seed).split(index);
  ComparisonTrial out;
  out.dim = index % 5 == 4 ? 2 : 1;
  const int d = out.dim;
  const Box dom{d, {0.0, 0.0}, {1.0, d == 2 ? 1.0 : 0.0}};
  const Grid grid = d == 1 ? Grid::line(0.0, 1.0, 64) : Grid::square(dom.lo, dom.hi, 24);
  const double dt = 1e-3, t_end = 0.05;
  const long n = static_cast<long>(std::lround(t_end / dt));
  const std::uint64_t s = rng.split(99).seed();
  Signal sig = zero_signal(n, dt);
  switch (index % 4) {
    case 0: out.noise = "brownian"; sig = gen_brownian(n, dt, s); break;
    case 1: out.noise = "fbm-0.3"; sig = gen_fbm(0.3, n, dt, s); break;
    case 2: out.noise = "fbm-0.7"; sig = gen_fbm(0.7, n, dt, s); break;
    default: out.noise = "linear-drift"; sig = linear_drift(rng.uniform(-2.0, 2.0), n, dt); break;
  }
  const std::string coef = d == 1 ? "sin(pi*x)" : "sin(pi*x)*cos(pi*y)";
  const NoiseField field(CoefficientSet::parse(d, {coef}), sig, dom);

  // Sums of random non-negative bumps; the second datum adds more on top.
  auto bumps = [&](Field& f, int count) {
    for (int b = 0; b < count; ++b) {
      const Point c{rng.uniform(0.2, 0.8), d == 2 ? rng.uniform(0.2, 0.8) : 0.0};
      const double r = rng.uniform(0.05, 0.2), a = rng.uniform(0.1, 1.0);
      for (std::size_t i = 0; i < f.size(); ++i) {
        const double q = distance(grid.point(i), c, d) / r;
        if (q < 1.0) f[i] += a * (1.0 - q * q);
      }
    }
  };
  Field x1(grid.size(), 0.0);
  bumps(x1, 2);
  Field x2 = x1;
  bumps(x2, 1);
  const double g1 = 0.0, g2 = index % 3 == 0 ? rng.uniform(0.0, 0.3) : 0.0;
  const double lambda = rng.uniform(0.0, 1.0);

  SolverParams sp;
  sp.m = 1.5 + static_cast<double>(index % 3) * 0.5;
  sp.dt = dt;
  sp.t_end = t_end;
  sp.newton_tol = newton_tol;
  sp.delta_reg = 1e-8;
  const Trajectory a = solve_spme(x1, field, lambda, constant_boundary(g1), grid, sp);
  const Trajectory b = solve_spme(x2, field, lambda, constant_boundary(g2), grid, sp);
  out.max_violation = -kInf;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < grid.size(); ++i)
      out.max_violation = std::max(out.max_violation, a.snapshots[k][i] - b.snapshots[k][i]);
  return out;
}

namespace {

json suite(const std::string& name, bool passed, json details) {
  return {{"suite", name}, {"passed", passed}, {"details", std::move(details)}};
}

json constants_suite(double scale) {
  // Exact rational check of (m-1)/(2dm(m-1)+4m) for integer m; `scale` is
  // the c_det_scale test hook.
  bool ok = true;
  json rows = json::array();
  for (auto [m, d, den] : {std::tuple{2, 1, 12}, std::tuple{3, 2, 18}}) {
    long num = m - 1, q = 2L * d * m * (m - 1) + 4L * m;
    const long g = std::gcd(num, q);
    const double value = c_det(m, d) * scale;
    const bool exact = num / g == 1 && q / g == den && value == 1.0 / den;
    ok = ok && exact;
    rows.push_back({{"m", m}, {"d", d}, {"c_det", value}, {"expected", "1/" + std::to_string(den)}, {"exact", exact}});
  }
  return suite("constants", ok, rows);
}

json barenblatt_suite() {
  const auto rows = barenblatt_convergence(2.0, {1.0 / 64, 1.0 / 128, 1.0 / 256});
  json j = json::array();
  bool ok = rows.back().error <= 0.05;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    j.push_back({{"h", r.h}, {"error", r.error}, {"ratio", r.ratio}, {"interior_error", r.interior_error},
                 {"interior_ratio", r.interior_ratio}});
    if (i > 0) ok = ok && r.interior_ratio >= 3.0 && r.interior_ratio <= 5.0;
  }
  return suite("barenblatt", ok,
               {{"rows", j}, {"gate", "finest error <= 5%, interior ratios in [3, 5]; full-grid ratios are diagnostic"}});
}

json comparison_suite(std::size_t pairs) {
  const double tol = 1e-10;
  double worst = -kInf;
  json rows = json::array();
  for (std::size_t i = 0; i < pairs; ++i) {
    const ComparisonTrial t = comparison_trial(2024, i, tol);
    worst = std::max(worst, t.max_violation);
    rows.push_back({{"noise", t.noise}, {"dim", t.dim}, {"max_violation", t.max_violation}});
  }
  return suite("comparison", worst <= 10.0 * tol, {{"pairs", rows}, {"worst", worst}, {"tolerance", 10.0 * tol}});
}

json transforms_suite() {
  const Box dom{1, {0.0, 0.0}, {1.0, 0.0}};
  const Signal sig = gen_brownian(200, 1e-3, 7);
  const NoiseField field(CoefficientSet::parse(1, {"sin(pi*x)"}), sig, dom);
  const Grid grid = Grid::line(0.0, 1.0, 32);
  SolverParams sp;
  sp.dt = 1e-3;
  sp.t_end = 0.2;
  Field x0(grid.size());
  for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = std::sin(M_PI * grid.point(i)[0]);
  const Trajectory x = solve_spme(x0, field, 0.5, constant_boundary(0.0), grid, sp);
  const Trajectory back =
      spatial_transform(spatial_transform(x, field, Direction::forward, 0.5), field, Direction::inverse, 0.5);
  double err_space = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    for (std::size_t i = 0; i < grid.size(); ++i)
      err_space = std::max(err_space, std::abs(back.snapshots[k][i] - x.snapshots[k][i]));

  const NoiseField flat(CoefficientSet::parse(1, {"0.7"}), sig, dom);
  const TimeChange tc = time_change_homogeneous(flat, {0.5, 0.0}, 2.0, x.times);
  double err_time = 0.0;
  for (double t : x.times) err_time = std::max(err_time, std::abs(tc.inverse(tc.forward(t)) - t));
  const TimeChange at = TimeChange::attractor(0.5);
  for (double t : {-10.0, -1.0, -0.1, 0.0}) err_time = std::max(err_time, std::abs(at.inverse(at.forward(t)) - t));
  return suite("transforms", err_space <= 1e-12 && err_time <= 1e-8,
               {{"spatial_roundtrip", err_space}, {"time_change_roundtrip", err_time}});
}

json fbm_suite() {
  // Sample covariance of B at (0.25, 1) against 0.5 (s^2H + t^2H - |t-s|^2H).
  json rows = json::array();
  bool ok = true;
  const int paths = 400;
  for (double H : {0.3, 0.5, 0.7}) {
    double c = 0.0, v = 0.0;
    for (int p = 0; p < paths; ++p) {
      const Signal s = gen_fbm(H, 64, 1.0 / 64, 1000 + p);
      const double a = s.value(0, 0.25), b = s.value(0, 1.0);
      c += a * b;
      v += b * b;
    }
    c /= paths;
    v /= paths;
    const double cov = 0.5 * (std::pow(0.25, 2 * H) + 1.0 - std::pow(0.75, 2 * H));
    // 5 standard errors of the sample second moments.
    const bool pass = std::abs(v - 1.0) <= 5.0 * std::sqrt(2.0 / paths) && std::abs(c - cov) <= 5.0 * std::sqrt(2.0 / paths);
    ok = ok && pass;
    rows.push_back({{"hurst", H}, {"var_1", v}, {"cov", c}, {"expected_cov", cov}, {"passed", pass}});
  }
  return suite("fbm", ok, rows);
}

json hole_fill_canary(const ExperimentConfig& base) {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::hole_fill;
  cfg.dim = 1;
  cfg.domain = {1, {-1.0, 0.0}, {1.0, 0.0}};
  cfg.cells = 128;
  cfg.center = {0.0, 0.0};
  cfg.radius = 1.0;
  cfg.H = 1.0;
  cfg.solver.dt = 1e-4;
  cfg.solver.t_end = 0.12;
  cfg.signal_dt = 1e-3;
  cfg.svg = false;
  cfg.c_det_scale = base.c_det_scale;
  cfg.raw = {{"canary", true}};
  const Report r = run_hole_fill(cfg);
  const json& run = r.json["runs"][0];
  return suite("hole_fill", r.exit_code == kExitPass,
               {{"c_det_scale", cfg.c_det_scale}, {"verdict", run["verdict"]}, {"centre", run["centre"]}});
}

}  // namespace

Report run_validate(const ExperimentConfig& cfg) {
  Report r;
  r.json = provenance(cfg);
  json suites = json::array();
  json timings = json::object();
  auto timed = [&](const std::string& name, const std::function<json()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    suites.push_back(fn());
    timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  timed("constants", [&] { return constants_suite(cfg.c_det_scale); });
  timed("barenblatt", barenblatt_suite);
  timed("comparison", [] { return comparison_suite(10); });
  timed("transforms", transforms_suite);
  timed("fbm", fbm_suite);
  timed("hole_fill", [&] { return hole_fill_canary(cfg); });
  bool ok = true;
  for (const auto& s : suites) ok = ok && s["passed"].get<bool>();
  r.json["suites"] = suites;
  r.json["passed"] = ok;
  r.files["timings.json"] = timings.dump(2) + "\n";
  r.exit_code = ok ? kExitPass : kExitViolation;
  return r;
}

Report run_experiment(const ExperimentConfig& cfg) {
  auto failure = [&](int code, const std::string& kind, const std::string& what) {
    Report r;
    r.json = provenance(cfg);
    r.json["error"] = {{"kind", kind}, {"message", what}};
    r.exit_code = code;
    return r;
  };
  try {
    switch (cfg.kind) {
      case ExperimentKind::simulate: return run_simulate(cfg);
      case ExperimentKind::hole_fill: return run_hole_fill(cfg);
      case ExperimentKind::propagation: return run_propagation(cfg);
      case ExperimentKind::entropy: return run_entropy(cfg);
      case ExperimentKind::bounds_only: return run_bounds_only(cfg);
      case ExperimentKind::validate: return run_validate(cfg);
    }
  } catch (const ConfigError& e) {
    return failure(kExitConfig, "config", e.what());
  } catch (const SolverDivergence& e) {
    return failure(kExitSolver, "solver-divergence", e.what() + std::string(" (step ") + std::to_string(e.step()) + ")");
  } catch (const NumericalBlowup& e) {
    return failure(kExitSolver, "numerical-blowup", e.what() + std::string(" (step ") + std::to_string(e.step()) + ")");
  } catch (const ContainmentFailure& e) {
    return failure(kExitViolation, "containment", e.what());
  } catch (const std::invalid_argument& e) {
    return failure(kExitConfig, "invalid-argument", e.what());
  } catch (const std::out_of_range& e) {
    return failure(kExitConfig, "out-of-range", e.what());
  } catch (const TooFewCenters& e) {
    return failure(kExitConfig, "too-few-centers", e.what());
  } catch (const InsufficientData& e) {
    return failure(kExitConfig, "insufficient-data", e.what());
  }
  return failure(kExitConfig, "config", "unknown experiment");
}

}  // namespace spme
