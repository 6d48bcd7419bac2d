#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace spme {

/// A point in the (at most two-dimensional) physical domain. Unused
/// trailing coordinates are zero.
using Point = std::array<double, 2>;

inline double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Axis-aligned box [lo, hi] in dimension 1 or 2.
struct Box {
  int dim = 1;
  Point lo{0.0, 0.0};
  Point hi{1.0, 0.0};

  bool contains(const Point& p, double slack = 1e-12) const {
    for (int i = 0; i < dim; ++i)
      if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
    return true;
  }

  double distance_to_boundary(const Point& p) const {
    double d = INFINITY;
    for (int i = 0; i < dim; ++i) d = std::fmin(d, std::fmin(p[i] - lo[i], hi[i] - p[i]));
    return d;
  }

  double diameter() const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    return std::sqrt(s);
  }
};

/// Closed ball used for norm regions and hole-filling experiments.
struct Ball {
  Point center{0.0, 0.0};
  double radius = 0.0;
};

/// Closed time interval [begin, end].
struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;
};

}  // namespace spme
