// Uniform vertex-centred grids in one or two dimensions.
//
// Nodes sit at lo + i*h. Nodes on the box boundary are always Dirichlet;
// additional nodes can be pinned through the mask (e.g. everything outside
// a ball, which turns the box into a ball domain for hole-filling runs).
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "spme/geometry.hpp"

namespace spme {

class Grid {
 public:
  /// 1D grid on [lo, hi] with `cells` cells (cells+1 nodes).
  static Grid line(double lo, double hi, int cells);
  /// 2D grid on [lo, hi] with equal spacing; `cells` along x, the y count
  /// follows from the box height.
  static Grid square(const Point& lo, const Point& hi, int cells_x);

  int dim() const { return dim_; }
  double h() const { return h_; }
  const Box& box() const { return box_; }
  int nodes_along(int axis) const { return n_[axis]; }
  std::size_t size() const { return mask_.size(); }

  std::size_t index(int ix, int iy = 0) const {
    return static_cast<std::size_t>(iy) * n_[0] + static_cast<std::size_t>(ix);
  }
  std::array<int, 2> coords(std::size_t i) const {
    return {static_cast<int>(i % n_[0]), static_cast<int>(i / n_[0])};
  }
  Point point(std::size_t i) const;

  bool dirichlet(std::size_t i) const { return mask_[i] != 0; }
  /// Pin every node farther than `radius` from `center` (plus the box edge).
  void pin_outside_ball(const Point& center, double radius);
  void pin(std::size_t i) { mask_[i] = 1; }
  std::size_t free_count() const;

  /// Nearest node to p (clamped into the box).
  std::size_t nearest(const Point& p) const;

  bool same_layout(const Grid& other) const;

 private:
  Grid() = default;
  void pin_box_edge();

  int dim_ = 1;
  double h_ = 0.0;
  Box box_;
  std::array<int, 2> n_{1, 1};
  std::vector<std::uint8_t> mask_;
};

}  // namespace spme
