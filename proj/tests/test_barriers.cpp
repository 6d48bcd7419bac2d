#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "spme/barriers.hpp"
#include "spme/bounds.hpp"
#include "spme/errors.hpp"

using namespace spme;

namespace {

Barrier deterministic(double m, int d, Point center, double scale) {
  Barrier w;
  w.kind = BarrierKind::space_frozen;
  w.center = center;
  w.horizon = 1.0;
  w.m = m;
  w.dim = d;
  w.constant = std::pow(scale * c_det(m, d), 1.0 / (m - 1.0));
  return w;
}

std::vector<double> times_upto(double T, int n) {
  std::vector<double> t;
  for (int k = 0; k < n; ++k) t.push_back(T * k / n);
  return t;
}

}  // namespace

TEST_SUITE("barriers") {
  TEST_CASE("closed-form values") {
    CHECK(eval_barrier_space(0, {0.5, 0}, {0, 0}, 1, 1, nullptr, 2, 1) == doctest::Approx(0.25));
    CHECK(eval_barrier_space(0.3, {0.2, 0}, {0.2, 0}, 1, 1, nullptr, 2, 1) == 0.0);
    CHECK(eval_barrier_time(1, {1, 0}, {0, 0}, 2, 1, nullptr, 3) == doctest::Approx(1.0));
    CHECK(eval_barrier_time(1, {0, 0}, {0, 0}, 2, 1, nullptr, 3) == 0.0);
  }

  TEST_CASE("barriers increase to the horizon and stop there") {
    double prev = 0.0;
    for (double t : {0.0, 0.5, 0.9, 0.99, 0.999}) {
      const double w = eval_barrier_space(t, {0.5, 0}, {0, 0}, 1, 1, nullptr, 2.5, 1);
      CHECK(w > prev);
      prev = w;
    }
    CHECK(prev > 50 * eval_barrier_space(0, {0.5, 0}, {0, 0}, 1, 1, nullptr, 2.5, 1));
    CHECK_THROWS_AS(eval_barrier_space(1.0, {0.5, 0}, {0, 0}, 1, 1, nullptr, 2, 1), OutOfHorizon);
    CHECK_THROWS_AS(eval_barrier_time(2.5, {0.5, 0}, {0, 0}, 2, 1, nullptr, 2), OutOfHorizon);
  }

  TEST_CASE("barrier constants") {
    CHECK(space_barrier_constant(2, 1, 1.0) == doctest::Approx(1.0 / 12));
    CHECK(space_barrier_constant(3, 2, 0.5) == doctest::Approx(std::sqrt(1.0 / 36)));
    CHECK(time_barrier_constant(2, 1, 1.0, 0.0) == doctest::Approx(1.0 / 12));
    CHECK(time_barrier_constant(2, 1, 2.0, std::log(2.0)) == doctest::Approx(1.0 / 12));
  }

  TEST_CASE("analytic time derivative matches a difference quotient") {
    const Barrier w = deterministic(2.5, 1, {0.5, 0}, 1.0);
    const Point p{0.8, 0};
    const double t = 0.4, k = 1e-6;
    CHECK(w.time_derivative(t, p) == doctest::Approx((w(t + k, p) - w(t - k, p)) / (2 * k)).epsilon(1e-6));
  }

  TEST_CASE("the deterministic barrier is a supersolution") {
    for (int cells : {32, 64, 128}) {
      const Grid g = Grid::line(0, 1, cells);
      const auto rep = certify_supersolution(deterministic(2, 1, {0.5, 0}, 1.0), g, 0.45, times_upto(1, 20));
      CHECK(rep.passed());
      CHECK(rep.min_residual >= -10 * g.h() * g.h());
    }
    const Grid g2 = Grid::square({0, 0}, {1, 1}, 24);
    CHECK(certify_supersolution(deterministic(2, 2, {0.5, 0.5}, 1.0), g2, 0.4, times_upto(1, 10)).passed());
  }

  TEST_CASE("m = 3: the only defect is the kink at the centre, first order in h") {
    // C^{m-1} = C_det is the equality case, and |x|^{2m/(m-1)} = |x|^3 is
    // not smooth at the centre, so the centred difference overshoots by 2k there.
    double prev = 0.0;
    for (int cells : {32, 64, 128}) {
      const Grid g = Grid::line(0, 1, cells);
      const auto rep = certify_supersolution(deterministic(3, 1, {0.5, 0}, 1.0), g, 0.45, times_upto(1, 20));
      for (const auto& f : rep.failing) CHECK(std::abs(f[1] - 0.5) <= 1e-12);
      if (prev != 0.0) CHECK(rep.min_residual / prev == doctest::Approx(0.5).epsilon(0.05));
      prev = rep.min_residual;
    }
  }

  TEST_CASE("inflating the constant breaks the supersolution inequality") {
    const Grid g = Grid::line(0, 1, 64);
    const auto rep = certify_supersolution(deterministic(2, 1, {0.5, 0}, 10.0), g, 0.45, times_upto(1, 20));
    CHECK_FALSE(rep.passed());
    CHECK(rep.violations > 0);
    CHECK_FALSE(rep.failing.empty());
  }

  TEST_CASE("linear homogeneity in the constant") {
    Barrier a = deterministic(2, 1, {0.5, 0}, 1.0);
    Barrier b = a;
    b.constant *= 3.0;
    CHECK(b(0.3, {0.7, 0}) == doctest::Approx(3.0 * a(0.3, {0.7, 0})));
  }

  TEST_CASE("domination") {
    const Grid g = Grid::line(-1.5, 1.5, 96);
    const Trajectory zero{g, {0.0, 0.05}, {Field(g.size(), 0.0), Field(g.size(), 0.0)}, constant_boundary(0)};
    Barrier w = deterministic(2, 1, {0, 0}, 1.0);
    w.horizon = 1.0 / 12;
    const auto rz = certify_domination(zero, w, Ball{{0, 0}, 1.0}, {0, 0.05});
    CHECK(rz.applicable);
    CHECK(rz.dominated);

    // hole filling from the boundary of B_1(0) with g = 1
    Grid pinned = g;
    pinned.pin_outside_ball({0, 0}, 1.0);
    SolverParams p;
    p.dt = 1e-4;
    p.t_end = 0.075;
    const Trajectory hf = solve_general(constant_coefficient(1), constant_coefficient(1), Field(g.size(), 0.0),
                                        constant_boundary(1.0), pinned, p);
    const auto rd = certify_domination(hf, w, Ball{{0, 0}, 1.0}, {0, 0.075}, 0.0, 0.02);
    CHECK(rd.applicable);
    CHECK(rd.dominated);

    // a later horizon puts W below the boundary data at t = 0
    w.horizon = 1.0 / 6;
    const auto rh = certify_domination(hf, w, Ball{{0, 0}, 1.0}, {0, 0.075}, 0.0, 0.02);
    CHECK_FALSE(rh.applicable);
  }

  TEST_CASE("report json") {
    const Grid g = Grid::line(0, 1, 32);
    const auto j = certify_supersolution(deterministic(2, 1, {0.5, 0}, 1.0), g, 0.4, times_upto(1, 4)).to_json();
    CHECK(j["passed"] == true);
    CHECK(j["evaluations"].get<std::size_t>() > 0);
  }
}
