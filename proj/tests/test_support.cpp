#include <cmath>
#include <sstream>

#include "doctest.h"
#include "spme/errors.hpp"
#include "spme/oracle.hpp"
#include "spme/support.hpp"

using namespace spme;

namespace {

Trajectory still(const Grid& g, std::vector<double> times, const std::vector<Field>& snaps) {
  return Trajectory{g, std::move(times), snaps, constant_boundary(0)};
}

}  // namespace

TEST_SUITE("support") {
  TEST_CASE("support of simple fields") {
    const Grid g = Grid::line(0, 1, 20);
    CHECK(support_of(g, Field(g.size(), 0.0), 0.0).empty());
    Field ball(g.size(), 0.0);
    std::vector<std::size_t> inside;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::abs(g.point(i)[0] - 0.5) <= 0.2 + 1e-12) {
        ball[i] = 3.0;
        inside.push_back(i);
      }
    CHECK(support_of(g, ball, 1.0).cells == inside);
    CHECK(support_of(g, ball, 3.0).empty());
  }

  TEST_CASE("Barenblatt support matches the inverted profile") {
    const BarenblattProfile u(2.0, 1, 1.0 / 12, 1.0);
    const Grid g = Grid::line(-3, 3, 600);
    const double t = 2.0, tau = 0.01;
    const CellSet s = support_of(g, sample(u, g, t), tau);
    const double r = u.level_radius(t, tau);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = std::abs(g.point(i)[0]);
      if (x < r - 1e-9) CHECK(s.contains(i));
      if (x > r + 1e-9) CHECK_FALSE(s.contains(i));
    }
  }

  TEST_CASE("support is monotone in tau") {
    const BarenblattProfile u(2.0, 2, 0.05, 1.0);
    const Grid g = Grid::square({-1, -1}, {1, 1}, 40);
    const Field f = sample(u, g, 1.0);
    CHECK(support_of(g, f, 0.02).subset_of(support_of(g, f, 0.01)));
    CHECK(support_of(g, f, 0.01).subset_of(support_of(g, f, 0.0)));
  }

  TEST_CASE("dilation") {
    const Grid g = Grid::line(0, 1, 20);
    CHECK(dilate(g, CellSet{}, 0.3).empty());
    const CellSet one{{10}};
    CHECK(dilate(g, one, 0.0).cells == one.cells);
    CHECK(dilate(g, one, 2.5 * g.h()).cells == std::vector<std::size_t>{8, 9, 10, 11, 12});
  }

  TEST_CASE("iterated dilation matches the single dilation up to one cell") {
    const Grid g = Grid::square({0, 0}, {1, 1}, 30);
    const CellSet s{{g.index(15, 15), g.index(16, 15)}};
    const double a = 0.1, b = 0.13;
    const CellSet twice = dilate(g, dilate(g, s, a), b);
    const CellSet once = dilate(g, s, a + b);
    CHECK(twice.subset_of(once));
    CHECK(once.subset_of(dilate(g, dilate(g, s, a), b + g.h())));
  }

  TEST_CASE("vanish radius") {
    const Grid g = Grid::line(0, 1, 20);
    const Trajectory zero = still(g, {0, 1}, {Field(g.size(), 0.0), Field(g.size(), 0.0)});
    CHECK(vanish_radius(zero, {0.3, 0}, 0.5, 0.1) == doctest::Approx(0.3));
    const Trajectory ones = still(g, {0, 1}, {Field(g.size(), 1.0), Field(g.size(), 1.0)});
    CHECK(vanish_radius(ones, {0.3, 0}, 0.5, 0.5) <= 1e-12);
    CHECK_THROWS_AS(vanish_radius(zero, {0.3, 0}, 2.0, 0.1), InvalidArgument);
  }

  TEST_CASE("vanish radius outside a Barenblatt support") {
    const BarenblattProfile u(2.0, 1, 1.0 / 12, 1.0);
    const Grid g = Grid::line(-3, 3, 1200);
    const Trajectory t = still(g, {1.0, 2.0}, {sample(u, g, 1.0), sample(u, g, 2.0)});
    const double xi = 2.5;
    CHECK(std::abs(vanish_radius(t, {xi, 0}, 2.0, 0.0) - (xi - u.radius(2.0))) <= g.h());
  }

  TEST_CASE("vanish radius is positive exactly off the support") {
    const BarenblattProfile u(2.0, 1, 1.0 / 12, 1.0);
    const Grid g = Grid::line(-2, 2, 80);
    const Trajectory t = still(g, {1.0, 2.0}, {sample(u, g, 1.0), sample(u, g, 2.0)});
    const CellSet s = support_of(g, t.snapshots[1], 0.01);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bool positive = vanish_radius(t, g.point(i), 2.0, 0.01) > 0.0;
      CHECK(positive == !s.contains(i));
    }
  }

  TEST_CASE("containment margin") {
    const Grid g = Grid::line(-3, 3, 600);
    Field f(g.size(), 0.0);
    f[300] = 1.0;
    const Trajectory st = still(g, {0, 1}, {f, f});
    CHECK(containment_margin(st, 0, 1, 0.1, 0.5) == doctest::Approx(0.1));
    const Trajectory zero = still(g, {0, 1}, {Field(g.size(), 0.0), Field(g.size(), 0.0)});
    CHECK(containment_margin(zero, 0, 1, 0.1, 0.5) == doctest::Approx(0.1));
    const Trajectory grow = still(g, {0, 1}, {Field(g.size(), 0.0), f});
    CHECK(containment_margin(grow, 0, 1, 0.1, 0.5) == -INFINITY);

    const BarenblattProfile u(2.0, 1, 1.0 / 12, 0.5);
    const Trajectory b = still(g, {1.0, 2.0}, {sample(u, g, 1.0), sample(u, g, 2.0)});
    const double h = u.radius(2.0) - u.radius(1.0);
    CHECK(std::abs(containment_margin(b, 1.0, 1.0, h, 0.0)) <= 2 * g.h());
  }

  TEST_CASE("support record serialization") {
    const Grid g = Grid::line(0, 1, 10);
    Field f(g.size(), 0.0);
    f[2] = f[3] = f[7] = 1.0;
    const SupportRecord r = SupportRecord::from(still(g, {0, 1}, {f, Field(g.size(), 0.0)}), 0.5);
    const auto j = r.to_json();
    CHECK(j["snapshots"][0]["runs"] == nlohmann::json::parse("[[2,2],[7,1]]"));
    CHECK(j["snapshots"][1]["runs"].empty());
    std::ostringstream os;
    r.write_front_csv(g, os);
    CHECK(os.str().find("0.2") != std::string::npos);
  }
}
