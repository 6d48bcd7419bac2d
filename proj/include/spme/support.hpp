// Numerical supports {|value| > tau} on a grid and the set operations used
// to check propagation and hole-filling statements. Distances are measured
// between node positions.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"
#include "spme/grid.hpp"
#include "spme/solver.hpp"

namespace spme {

/// Sorted list of node indices.
struct CellSet {
  std::vector<std::size_t> cells;

  bool empty() const { return cells.empty(); }
  std::size_t size() const { return cells.size(); }
  bool contains(std::size_t i) const;
  /// Every cell of this set is in `other`.
  bool subset_of(const CellSet& other) const;
};

CellSet support_of(const Grid& grid, std::span<const double> field, double tau);

/// Euclidean distance from every node to the nearest node of `set`
/// (+inf everywhere for the empty set).
std::vector<double> distance_field(const Grid& grid, const CellSet& set);

/// Nodes within distance h of the set.
CellSet dilate(const Grid& grid, const CellSet& set, double h);

/// max over a in `from` of dist(a, to); 0 for empty `from`, +inf when only
/// `to` is empty.
double max_distance(const Grid& grid, const CellSet& from, const CellSet& to);

/// Largest r such that no node of the open ball B_r(xi0) exceeds tau at
/// time t. Without any such node this is the distance from xi0 to the box
/// boundary.
double vanish_radius(const Trajectory& traj, const Point& xi0, double t, double tau);

/// h - max distance from supp(X_{s+t}) to supp(X_s); -inf if supp(X_s) is
/// empty while supp(X_{s+t}) is not.
double containment_margin(const Trajectory& traj, double s, double t, double h, double tau);

struct SupportRecord {
  double tau = 0.0;
  std::vector<double> times;
  std::vector<CellSet> sets;

  static SupportRecord from(const Trajectory& traj, double tau);
  /// {"tau": .., "snapshots": [{"t": .., "runs": [[start, length], ...]}, ...]}
  nlohmann::json to_json() const;
  /// t, then lo/hi node coordinate of the support per axis (empty when the
  /// support is empty).
  void write_front_csv(const Grid& grid, std::ostream& os) const;
};

}  // namespace spme
