#include "spme/support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "spme/errors.hpp"

namespace spme {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared distance transform along one line (lower envelope of parabolas).
void edt_line(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
              std::vector<double>& z, int n) {
  int k = 0;
  int first = -1;
  for (int q = 0; q < n; ++q)
    if (std::isfinite(f[q])) {
      first = q;
      break;
    }
  if (first < 0) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

bool CellSet::contains(std::size_t i) const {
  return std::binary_search(cells.begin(), cells.end(), i);
}

bool CellSet::subset_of(const CellSet& other) const {
  return std::includes(other.cells.begin(), other.cells.end(), cells.begin(), cells.end());
}

CellSet support_of(const Grid& grid, std::span<const double> field, double tau) {
  if (tau < 0.0) throw InvalidArgument("support_of: tau must be >= 0");
  if (field.size() != grid.size()) throw InvalidArgument("support_of: field does not match grid");
  CellSet s;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (std::abs(field[i]) > tau) s.cells.push_back(i);
  return s;
}

std::vector<double> distance_field(const Grid& grid, const CellSet& set) {
  const int nx = grid.nodes_along(0);
  const int ny = grid.dim() == 2 ? grid.nodes_along(1) : 1;
  std::vector<double> g(grid.size(), kInf);
  for (std::size_t i : set.cells) g[i] = 0.0;
  const int n = std::max(nx, ny);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) f[ix] = g[grid.index(ix, iy)];
    edt_line(f, d, v, z, nx);
    for (int ix = 0; ix < nx; ++ix) g[grid.index(ix, iy)] = d[ix];
  }
  if (ny > 1) {
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy < ny; ++iy) f[iy] = g[grid.index(ix, iy)];
      edt_line(f, d, v, z, ny);
      for (int iy = 0; iy < ny; ++iy) g[grid.index(ix, iy)] = d[iy];
    }
  }
  for (double& x : g) x = std::sqrt(x) * grid.h();
  return g;
}

CellSet dilate(const Grid& grid, const CellSet& set, double h) {
  if (h < 0.0) throw InvalidArgument("dilate: h must be >= 0");
  if (set.empty()) return {};
  const auto dist = distance_field(grid, set);
  const double limit = h * (1.0 + 1e-12) + 1e-12 * grid.h();
  CellSet out;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] <= limit) out.cells.push_back(i);
  return out;
}

double max_distance(const Grid& grid, const CellSet& from, const CellSet& to) {
  if (from.empty()) return 0.0;
  if (to.empty()) return kInf;
  const auto dist = distance_field(grid, to);
  double m = 0.0;
  for (std::size_t i : from.cells) m = std::max(m, dist[i]);
  return m;
}

double vanish_radius(const Trajectory& traj, const Point& xi0, double t, double tau) {
  const Grid& grid = traj.grid;
  if (!grid.box().contains(xi0)) throw InvalidArgument("vanish_radius: xi0 outside the domain");
  const Field f = traj.at(t);
  double r = kInf;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (std::abs(f[i]) > tau) r = std::min(r, distance(grid.point(i), xi0, grid.dim()));
  if (!std::isfinite(r)) r = grid.box().distance_to_boundary(xi0);
  return r;
}

double containment_margin(const Trajectory& traj, double s, double t, double h, double tau) {
  const Field a = traj.at(s);
  const Field b = traj.at(s + t);
  const CellSet sa = support_of(traj.grid, a, tau);
  const CellSet sb = support_of(traj.grid, b, tau);
  if (sb.empty()) return h;
  if (sa.empty()) return -kInf;
  return h - max_distance(traj.grid, sb, sa);
}

SupportRecord SupportRecord::from(const Trajectory& traj, double tau) {
  SupportRecord r;
  r.tau = tau;
  r.times = traj.times;
  for (const auto& s : traj.snapshots) r.sets.push_back(support_of(traj.grid, s, tau));
  return r;
}

nlohmann::json SupportRecord::to_json() const {
  nlohmann::json snaps = nlohmann::json::array();
  for (std::size_t k = 0; k < sets.size(); ++k) {
    nlohmann::json runs = nlohmann::json::array();
    const auto& c = sets[k].cells;
    for (std::size_t j = 0; j < c.size();) {
      std::size_t e = j + 1;
      while (e < c.size() && c[e] == c[e - 1] + 1) ++e;
      runs.push_back({c[j], e - j});
      j = e;
    }
    snaps.push_back({{"t", times[k]}, {"runs", runs}});
  }
  return {{"tau", tau}, {"snapshots", snaps}};
}

void SupportRecord::write_front_csv(const Grid& grid, std::ostream& os) const {
  os << "t";
  const char* axes[] = {"x", "y"};
  for (int a = 0; a < grid.dim(); ++a) os << ',' << axes[a] << "_lo," << axes[a] << "_hi";
  os << '\n';
  char buf[32];
  for (std::size_t k = 0; k < sets.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", times[k]);
    os << buf;
    for (int a = 0; a < grid.dim(); ++a) {
      if (sets[k].empty()) {
        os << ",,";
        continue;
      }
      double lo = kInf, hi = -kInf;
      for (std::size_t i : sets[k].cells) {
        const double x = grid.point(i)[a];
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      std::snprintf(buf, sizeof buf, "%.17g", lo);
      os << ',' << buf;
      std::snprintf(buf, sizeof buf, "%.17g", hi);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace spme
