#include "spme/grid.hpp"

#include <algorithm>
#include <cmath>

#include "spme/errors.hpp"

namespace spme {

Grid Grid::line(double lo, double hi, int cells) {
  if (!(hi > lo)) throw InvalidArgument("grid: empty interval");
  if (cells < 9) throw InvalidArgument("grid: at least 8 interior cells per axis are required");
  Grid g;
  g.dim_ = 1;
  g.h_ = (hi - lo) / cells;
  g.box_ = Box{1, {lo, 0.0}, {hi, 0.0}};
  g.n_ = {cells + 1, 1};
  g.mask_.assign(static_cast<std::size_t>(cells + 1), 0);
  g.pin_box_edge();
  return g;
}

Grid Grid::square(const Point& lo, const Point& hi, int cells_x) {
  if (!(hi[0] > lo[0]) || !(hi[1] > lo[1])) throw InvalidArgument("grid: empty box");
  const double h = (hi[0] - lo[0]) / cells_x;
  const double ny_real = (hi[1] - lo[1]) / h;
  const int cells_y = static_cast<int>(std::lround(ny_real));
  if (std::abs(ny_real - cells_y) > 1e-9 * std::max(1.0, ny_real))
    throw InvalidArgument("grid: box height is not a multiple of the cell size");
  if (cells_x < 9 || cells_y < 9)
    throw InvalidArgument("grid: at least 8 interior cells per axis are required");
  Grid g;
  g.dim_ = 2;
  g.h_ = h;
  g.box_ = Box{2, lo, hi};
  g.n_ = {cells_x + 1, cells_y + 1};
  g.mask_.assign(static_cast<std::size_t>(g.n_[0]) * g.n_[1], 0);
  g.pin_box_edge();
  return g;
}

void Grid::pin_box_edge() {
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    const auto c = coords(i);
    bool edge = c[0] == 0 || c[0] == n_[0] - 1;
    if (dim_ == 2) edge = edge || c[1] == 0 || c[1] == n_[1] - 1;
    if (edge) mask_[i] = 1;
  }
}

Point Grid::point(std::size_t i) const {
  const auto c = coords(i);
  Point p{box_.lo[0] + c[0] * h_, 0.0};
  if (dim_ == 2) p[1] = box_.lo[1] + c[1] * h_;
  return p;
}

void Grid::pin_outside_ball(const Point& center, double radius) {
  const double tol = 1e-9 * h_;
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (distance(point(i), center, dim_) >= radius - tol) mask_[i] = 1;
}

std::size_t Grid::free_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{0}));
}

std::size_t Grid::nearest(const Point& p) const {
  std::array<int, 2> c{0, 0};
  for (int a = 0; a < dim_; ++a) {
    const long k = std::lround((p[a] - box_.lo[a]) / h_);
    c[a] = static_cast<int>(std::clamp<long>(k, 0, n_[a] - 1));
  }
  return index(c[0], c[1]);
}

bool Grid::same_layout(const Grid& o) const {
  return dim_ == o.dim_ && n_ == o.n_ && std::abs(h_ - o.h_) <= 1e-14 * h_ &&
         std::abs(box_.lo[0] - o.box_.lo[0]) <= 1e-12 && std::abs(box_.lo[1] - o.box_.lo[1]) <= 1e-12;
}

}  // namespace spme
