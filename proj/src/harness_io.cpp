#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <atomic>
#include <exception>

#include "spme/errors.hpp"
#include "spme/harness.hpp"
#include "spme/oracle.hpp"
#include "spme/rng.hpp"

namespace spme {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::hole_fill: return "hole-fill";
    case ExperimentKind::propagation: return "propagation";
    case ExperimentKind::entropy: return "entropy";
    case ExperimentKind::bounds_only: return "bounds-only";
    case ExperimentKind::validate: return "validate";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::simulate, ExperimentKind::hole_fill, ExperimentKind::propagation,
                 ExperimentKind::entropy, ExperimentKind::bounds_only, ExperimentKind::validate})
    if (to_string(k) == s) return k;
  throw ConfigError("config: unknown experiment '" + s + "'");
}

namespace {

using nlohmann::json;

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double num(const json& j, const char* key, double def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return v->get<double>();
}

long integer(const json& j, const char* key, long def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number_integer()) throw ConfigError(std::string("config: '") + key + "' must be an integer");
  return v->get<long>();
}

std::vector<double> numbers(const json& j, const char* key, std::vector<double> def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_array() || v->empty()) throw ConfigError(std::string("config: '") + key + "' must be a non-empty array");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) throw ConfigError(std::string("config: '") + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Point point(const json& j, const char* key, Point def, int dim) {
  const json* v = find(j, key);
  if (!v) return def;
  const auto xs = numbers(j, key, {});
  if (static_cast<int>(xs.size()) != dim)
    throw ConfigError(std::string("config: '") + key + "' needs " + std::to_string(dim) + " coordinates");
  Point p{0.0, 0.0};
  for (int i = 0; i < dim; ++i) p[i] = xs[i];
  return p;
}

const json& object(const json& j, const char* key) {
  static const json empty = json::object();
  const json* v = find(j, key);
  if (!v) return empty;
  if (!v->is_object()) throw ConfigError(std::string("config: '") + key + "' must be an object");
  return *v;
}

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; });
    if (!ok) throw ConfigError(std::string("config: unknown key '") + it.key() + "' in " + where);
  }
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(j, "config",
             {"schema_version", "experiment", "dim", "domain", "cells", "m", "lambda", "noise", "seeds",
              "solver", "initial", "hole_fill", "propagation", "entropy", "bounds", "validate", "output",
              "workers"});
  if (integer(j, "schema_version", -1) != 1) throw ConfigError("config: schema_version must be 1");
  ExperimentConfig c;
  c.raw = j;
  const json* exp = find(j, "experiment");
  if (!exp || !exp->is_string()) throw ConfigError("config: 'experiment' is required");
  c.kind = experiment_kind_from_string(exp->get<std::string>());
  c.dim = static_cast<int>(integer(j, "dim", 1));
  if (c.dim != 1 && c.dim != 2) throw ConfigError("config: dim must be 1 or 2");

  const json& dom = object(j, "domain");
  check_keys(dom, "domain", {"lo", "hi"});
  c.domain.dim = c.dim;
  c.domain.lo = point(dom, "lo", {0.0, 0.0}, c.dim);
  c.domain.hi = point(dom, "hi", {1.0, c.dim == 2 ? 1.0 : 0.0}, c.dim);
  for (int a = 0; a < c.dim; ++a)
    if (!(c.domain.hi[a] > c.domain.lo[a])) throw ConfigError("config: domain must have hi > lo");
  c.cells = static_cast<int>(integer(j, "cells", 128));
  if (c.cells < 9) throw ConfigError("config: cells must be >= 9");
  c.m = num(j, "m", 2.0);
  if (!(c.m > 1.0)) throw ConfigError("config: m must exceed 1");
  c.lambda = num(j, "lambda", 0.0);
  if (c.lambda < 0.0) throw ConfigError("config: lambda must be >= 0");

  const json& noise = object(j, "noise");
  check_keys(noise, "noise", {"coefficients", "channels", "dt", "smooth"});
  if (const json* co = find(noise, "coefficients")) {
    if (!co->is_array() || co->empty()) throw ConfigError("config: noise.coefficients must be a non-empty array");
    c.coefficients.clear();
    for (const auto& e : *co) {
      if (!e.is_string()) throw ConfigError("config: noise.coefficients must hold strings");
      c.coefficients.push_back(e.get<std::string>());
    }
  }
  c.channels.assign(c.coefficients.size(), ChannelSpec{});
  if (const json* ch = find(noise, "channels")) {
    if (!ch->is_array() || ch->size() != c.coefficients.size())
      throw ConfigError("config: noise.channels needs one entry per coefficient");
    for (std::size_t k = 0; k < ch->size(); ++k) {
      const json& e = (*ch)[k];
      if (!e.is_object()) throw ConfigError("config: noise.channels entries must be objects");
      check_keys(e, "noise.channels", {"kind", "hurst", "rate"});
      const json* kind = find(e, "kind");
      if (!kind || !kind->is_string()) throw ConfigError("config: noise.channels[].kind is required");
      try {
        c.channels[k].kind = channel_kind_from_string(kind->get<std::string>());
      } catch (const std::exception& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
      }
      if (c.channels[k].kind == ChannelKind::custom) throw ConfigError("config: custom channels need a CSV signal");
      c.channels[k].hurst = num(e, "hurst", 0.5);
      c.channels[k].rate = num(e, "rate", 1.0);
      if (!(c.channels[k].hurst > 0.0 && c.channels[k].hurst < 1.0))
        throw ConfigError("config: hurst must lie in (0, 1)");
    }
  }
  c.signal_dt = num(noise, "dt", 1e-3);
  if (!(c.signal_dt > 0.0)) throw ConfigError("config: noise.dt must be positive");
  c.smooth = num(noise, "smooth", 0.0);
  try {
    CoefficientSet::parse(c.dim, c.coefficients);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("config: noise.coefficients: ") + ex.what());
  }

  if (const json* s = find(j, "seeds")) {
    if (!s->is_array() || s->empty()) throw ConfigError("config: seeds must be a non-empty array");
    c.seeds.clear();
    for (const auto& e : *s) {
      if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long>() >= 0))
        throw ConfigError("config: seeds must be non-negative integers");
      c.seeds.push_back(e.get<std::uint64_t>());
    }
  }

  const json& sol = object(j, "solver");
  check_keys(sol, "solver",
             {"dt", "t_end", "newton_tol", "newton_max", "delta_reg", "support_threshold", "snapshot_stride"});
  c.solver.dt = num(sol, "dt", 1e-3);
  c.solver.t_end = num(sol, "t_end", 1.0);
  c.solver.newton_tol = num(sol, "newton_tol", 1e-10);
  c.solver.newton_max = static_cast<int>(integer(sol, "newton_max", 50));
  if (find(sol, "delta_reg")) c.solver.delta_reg = num(sol, "delta_reg", 0.0);
  if (find(sol, "support_threshold")) c.solver.support_threshold = num(sol, "support_threshold", 0.0);
  c.solver.snapshot_stride = static_cast<std::size_t>(std::max(1L, integer(sol, "snapshot_stride", 1)));
  c.solver.m = c.m;
  if (!(c.solver.dt > 0.0) || !(c.solver.t_end > 0.0) || !(c.solver.newton_tol > 0.0) || c.solver.newton_max < 1)
    throw ConfigError("config: solver dt, t_end, newton_tol must be positive and newton_max >= 1");
  if ((c.solver.delta_reg && *c.solver.delta_reg < 0.0) ||
      (c.solver.support_threshold && *c.solver.support_threshold < 0.0))
    throw ConfigError("config: delta_reg and support_threshold must be >= 0");

  const json& ini = object(j, "initial");
  check_keys(ini, "initial", {"kind", "center", "radius", "height", "value", "c_b", "t0"});
  if (const json* k = find(ini, "kind")) c.initial.kind = k->get<std::string>();
  if (c.initial.kind != "zero" && c.initial.kind != "constant" && c.initial.kind != "bump" &&
      c.initial.kind != "barenblatt")
    throw ConfigError("config: initial.kind must be zero, constant, bump or barenblatt");
  Point mid{0.5 * (c.domain.lo[0] + c.domain.hi[0]), 0.5 * (c.domain.lo[1] + c.domain.hi[1])};
  c.initial.center = point(ini, "center", mid, c.dim);
  c.initial.radius = num(ini, "radius", 0.1);
  c.initial.height = num(ini, "height", 1.0);
  c.initial.value = num(ini, "value", 0.0);
  c.initial.c_b = num(ini, "c_b", 1.0 / 12.0);
  c.initial.t0 = num(ini, "t0", 1.0);

  const json& hf = object(j, "hole_fill");
  check_keys(hf, "hole_fill", {"center", "radius", "H", "refine"});
  c.center = point(hf, "center", mid, c.dim);
  c.radius = num(hf, "radius", 0.5);
  c.H = num(hf, "H", 1.0);
  c.refine = static_cast<int>(integer(hf, "refine", 4));
  if (!(c.radius > 0.0) || !(c.H > 0.0) || c.refine < 1)
    throw ConfigError("config: hole_fill radius, H must be positive and refine >= 1");

  const json& pr = object(j, "propagation");
  check_keys(pr, "propagation", {"s", "h"});
  c.s_ladder = numbers(pr, "s", {0.0});
  c.h_ladder = numbers(pr, "h", {0.1});

  const json& en = object(j, "entropy");
  check_keys(en, "entropy", {"eps", "delta", "kappa", "max_shrink", "cells_per_eps", "steps", "t_start_fraction"});
  c.eps_ladder = numbers(en, "eps", c.eps_ladder);
  c.delta = num(en, "delta", 0.5);
  c.kappa = num(en, "kappa", 1.0);
  c.max_shrink = static_cast<int>(integer(en, "max_shrink", 6));
  c.cells_per_eps = static_cast<int>(integer(en, "cells_per_eps", 16));
  c.entropy_steps = static_cast<std::size_t>(std::max(1L, integer(en, "steps", 2000)));
  c.t_start_fraction = num(en, "t_start_fraction", 1e-3);

  const json& bo = object(j, "bounds");
  check_keys(bo, "bounds", {"R", "t"});
  c.R_ladder = numbers(bo, "R", c.R_ladder);
  c.t_ladder = numbers(bo, "t", c.t_ladder);

  const json& va = object(j, "validate");
  check_keys(va, "validate", {"c_det_scale"});
  c.c_det_scale = num(va, "c_det_scale", 1.0);

  const json& out = object(j, "output");
  check_keys(out, "output", {"dir", "svg"});
  if (const json* d = find(out, "dir")) c.out_dir = d->get<std::string>();
  if (const json* s = find(out, "svg")) c.svg = s->get<bool>();
  c.workers = static_cast<int>(integer(j, "workers", 1));
  if (c.workers < 1) throw ConfigError("config: workers must be >= 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Signal make_signal(const ExperimentConfig& cfg, std::uint64_t seed, double t_end, bool reversed) {
  const auto n = static_cast<long>(std::ceil(t_end / cfg.signal_dt - 1e-9));
  const double dt = cfg.signal_dt;
  std::vector<Signal> parts;
  const Rng root(seed);
  for (std::size_t k = 0; k < cfg.channels.size(); ++k) {
    const ChannelSpec& ch = cfg.channels[k];
    const std::uint64_t s = root.split(k).seed();
    switch (ch.kind) {
      case ChannelKind::brownian: parts.push_back(gen_brownian(n, dt, s)); break;
      case ChannelKind::fbm: parts.push_back(gen_fbm(ch.hurst, n, dt, s)); break;
      case ChannelKind::linear_drift: parts.push_back(linear_drift(ch.rate, n, dt)); break;
      default: parts.push_back(zero_signal(n, dt)); break;
    }
  }
  Signal sig = parts.size() == 1 ? parts.front() : stack(parts);
  if (cfg.smooth > 0.0) sig = smooth_signal(sig, cfg.smooth);
  return reversed ? sig.reversed() : sig;
}

NoiseField make_field(const ExperimentConfig& cfg, std::uint64_t seed, double t_end, bool reversed) {
  return NoiseField(CoefficientSet::parse(cfg.dim, cfg.coefficients), make_signal(cfg, seed, t_end, reversed),
                    cfg.domain);
}

Grid make_grid(const ExperimentConfig& cfg) {
  return cfg.dim == 1 ? Grid::line(cfg.domain.lo[0], cfg.domain.hi[0], cfg.cells)
                      : Grid::square(cfg.domain.lo, cfg.domain.hi, cfg.cells);
}

Field make_initial(const ExperimentConfig& cfg, const Grid& grid) {
  const InitialSpec& s = cfg.initial;
  Field f(grid.size(), 0.0);
  if (s.kind == "constant") std::fill(f.begin(), f.end(), s.value);
  if (s.kind == "bump")
    for (std::size_t i = 0; i < f.size(); ++i)
      if (distance(grid.point(i), s.center, grid.dim()) < s.radius) f[i] = s.height;
  if (s.kind == "barenblatt") f = sample(BarenblattProfile(cfg.m, cfg.dim, s.c_b, s.t0, s.center), grid, s.t0);
  return f;
}

void write_report(const Report& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(std::filesystem::path(dir) / "report.json");
    out << report.json.dump(2) << '\n';
  }
  for (const auto& [name, content] : report.files) {
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    out << content;
  }
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::min<std::size_t>(std::max(1, workers), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  for (std::size_t k = 0; k < w; ++k)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series) {
  const double W = 640, Hh = 420, L = 70, R = 160, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return Hh - B - (y - y0) / (y1 - y0) * (Hh - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << Hh - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << Hh - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << xlabel << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + Hh - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 "
    << (T + Hh - B) / 2 << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    o << "<text x=\"" << px(xv) << "\" y=\"" << Hh - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
      << format_double(xv) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
      << format_double(yv) << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 6];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) o << format_double(px(s.x[i])) << ',' << format_double(py(s.y[i])) << ' ';
    o << "\"/>\n";
    o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 14 + 16 * k << "\" font-size=\"11\" fill=\"" << c << "\">"
      << s.name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::pair<std::string, std::string> trajectory_files(const Trajectory& traj) {
  const Grid& g = traj.grid;
  std::string bin;
  for (const auto& s : traj.snapshots)
    bin.append(reinterpret_cast<const char*>(s.data()), s.size() * sizeof(double));
  nlohmann::json pinned = nlohmann::json::array();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.dirichlet(i)) pinned.push_back(i);
  nlohmann::json j = {{"format", "float64-le, snapshot-major"},
                      {"dim", g.dim()},
                      {"lo", g.box().lo},
                      {"hi", g.box().hi},
                      {"cells", g.nodes_along(0) - 1},
                      {"h", g.h()},
                      {"nodes", g.size()},
                      {"pinned", pinned},
                      {"times", traj.times},
                      {"delta_reg", traj.delta_reg},
                      {"support_threshold", traj.support_threshold},
                      {"newton_iterations", traj.newton_iterations}};
  return {std::move(bin), j.dump(1) + "\n"};
}

void write_trajectory(const Trajectory& traj, const std::string& prefix) {
  const auto [bin, meta] = trajectory_files(traj);
  std::ofstream(prefix + ".bin", std::ios::binary) << bin;
  std::ofstream(prefix + ".json") << meta;
}

Trajectory read_trajectory(const std::string& prefix) {
  std::ifstream in(prefix + ".json");
  if (!in) throw InvalidArgument("read_trajectory: cannot open " + prefix + ".json");
  nlohmann::json j;
  in >> j;
  const int dim = j.at("dim").get<int>();
  const int cells = j.at("cells").get<int>();
  const auto lo = j.at("lo").get<Point>();
  const auto hi = j.at("hi").get<Point>();
  Grid g = dim == 1 ? Grid::line(lo[0], hi[0], cells) : Grid::square(lo, hi, cells);
  if (g.size() != j.at("nodes").get<std::size_t>()) throw InvalidArgument("read_trajectory: grid mismatch");
  for (std::size_t i : j.at("pinned").get<std::vector<std::size_t>>()) g.pin(i);
  Trajectory t{g, j.at("times").get<std::vector<double>>(), {}, {}};
  t.delta_reg = j.at("delta_reg").get<double>();
  t.support_threshold = j.at("support_threshold").get<double>();
  t.newton_iterations = j.at("newton_iterations").get<std::size_t>();
  std::ifstream bin(prefix + ".bin", std::ios::binary);
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    Field f(g.size());
    bin.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!bin) throw InvalidArgument("read_trajectory: truncated data file");
    t.snapshots.push_back(std::move(f));
  }
  return t;
}

}  // namespace spme
