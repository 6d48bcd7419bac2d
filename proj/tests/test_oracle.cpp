#include <cmath>

#include "doctest.h"
#include "spme/errors.hpp"
#include "spme/grid.hpp"
#include "spme/oracle.hpp"

using namespace spme;

TEST_SUITE("oracle") {
  TEST_CASE("exponents for m = 2, d = 1") {
    const BarenblattProfile u(2.0, 1, 1.0 / 12, 1.0);
    CHECK(u.alpha() == doctest::Approx(1.0 / 3));
    CHECK(u.beta() == doctest::Approx(1.0 / 3));
    CHECK(u.k() == doctest::Approx(1.0 / 12));
  }

  TEST_CASE("closed form, support and peak") {
    const BarenblattProfile u(2.0, 1, 1.0 / 12, 1.0);
    // u(t, x) = t^{-1/3} (1/12 - x^2 t^{-2/3} / 12)_+
    const double t = 2.0, x = 0.4;
    const double direct = std::pow(t, -1.0 / 3) * (1.0 / 12 - x * x * std::pow(t, -2.0 / 3) / 12);
    CHECK(u.eval(t, {x, 0}) == doctest::Approx(direct));
    CHECK(u.radius(t) == doctest::Approx(std::pow(t, 1.0 / 3)));
    CHECK(u.eval(t, {u.radius(t) + 1e-3, 0}) == 0.0);
    CHECK(u.eval(t, {0, 0}) == doctest::Approx(u.peak(t)));
    CHECK_THROWS_AS(u.eval(0.5, {0, 0}), InvalidArgument);
  }

  TEST_CASE("peak decreases and the measured support radius follows the law") {
    const BarenblattProfile u(3.0, 1, 0.2, 1.0);
    const Grid g = Grid::line(-4.0, 4.0, 800);
    double prev = INFINITY;
    for (double t : {1.0, 1.5, 2.0, 4.0}) {
      CHECK(u.peak(t) < prev);
      prev = u.peak(t);
      const auto f = sample(u, g, t);
      double r = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] > 0.0) r = std::max(r, std::abs(g.point(i)[0]));
      CHECK(std::abs(r - u.radius(t)) <= g.h());
    }
  }

  TEST_CASE("level radius inverts the profile") {
    const BarenblattProfile u(2.0, 2, 0.1, 1.0);
    const double r = u.level_radius(1.7, 0.05);
    CHECK(u.eval(1.7, {r, 0}) == doctest::Approx(0.05));
    CHECK(u.level_radius(1.7, 10.0) == 0.0);
  }

  TEST_CASE("mass is conserved and matches quadrature") {
    for (int d : {1, 2}) {
      const BarenblattProfile u(2.0, d, 0.1, 1.0);
      for (double t : {1.0, 3.0}) {
        const double R = u.radius(t);
        double q = 0.0;
        if (d == 1) {
          const int n = 200000;
          const double h = 2 * R / n;
          for (int i = 0; i < n; ++i) q += u.eval(t, {-R + (i + 0.5) * h, 0}) * h;
        } else {
          // radial midpoint rule
          const int n = 200000;
          const double h = R / n;
          for (int i = 0; i < n; ++i) {
            const double r = (i + 0.5) * h;
            q += 2 * M_PI * r * u.eval(t, {r, 0}) * h;
          }
        }
        CHECK(std::abs(q - u.mass()) <= 1e-6 * u.mass());
      }
    }
  }

  TEST_CASE("weak residual is second order where the profile is smooth") {
    const BarenblattProfile u(2.0, 1, 1.0 / 12, 1.0);
    const TestFunction eta = bump_test_function({{0.1, 0}, 0.6}, {1.2, 1.8}, 1);
    double prev = 0.0;
    for (double h : {0.02, 0.01, 0.005}) {
      const double r = barenblatt_weak_residual(u, eta, h).residual;
      if (prev > 0.0) {
        CHECK(prev / r >= 3.2);
        CHECK(prev / r <= 4.8);
      }
      prev = r;
    }
  }

  TEST_CASE("weak residual vanishes for zero and disjoint test functions") {
    const BarenblattProfile u(2.0, 1, 1.0 / 12, 1.0);
    CHECK(barenblatt_weak_residual(u, bump_test_function({{0, 0}, 0.5}, {1.2, 1.8}, 1, 0.0), 0.01).residual == 0.0);
    const auto far = barenblatt_weak_residual(u, bump_test_function({{3.0, 0}, 0.5}, {1.2, 1.8}, 1), 0.01);
    CHECK(far.residual <= 1e-14);
  }
}
