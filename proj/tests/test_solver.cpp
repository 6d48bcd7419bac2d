#include <cmath>

#include "doctest.h"
#include "spme/errors.hpp"
#include "spme/harness.hpp"
#include "spme/noise_field.hpp"
#include "spme/oracle.hpp"
#include "spme/solver.hpp"

using namespace spme;

namespace {

const Box unit1{1, {0.0, 0.0}, {1.0, 0.0}};

Field bump(const Grid& g, Point c, double r, double a) {
  Field f(g.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double q = distance(g.point(i), c, g.dim()) / r;
    if (q < 1.0) f[i] = a * (1.0 - q * q);
  }
  return f;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("phi and phi_reg") {
    CHECK(phi(0.0, 3.0) == 0.0);
    CHECK(phi(2.0, 2.0) == 4.0);
    CHECK(phi(-2.0, 2.0) == -4.0);
    CHECK(phi(-1.3, 2.5) == -phi(1.3, 2.5));
    CHECK(phi_reg(1.0, 2.0, 0.1) == doctest::Approx(1.1));
  }

  TEST_CASE("zero is a fixed point") {
    const Grid g = Grid::line(0, 1, 32);
    SolverParams p;
    p.t_end = 0.05;
    p.dt = 0.01;
    const Trajectory t = solve_general(constant_coefficient(1), constant_coefficient(1), Field(g.size(), 0.0),
                                       constant_boundary(0), g, p);
    for (const auto& s : t.snapshots)
      for (double v : s) CHECK(v == 0.0);
    const LinfMonitor mon = monitor_linf(t, 1.0);
    for (double v : mon.sup) CHECK(v == 0.0);
  }

  TEST_CASE("constant states are steady under matching Dirichlet data") {
    for (int d : {1, 2}) {
      const Grid g = d == 1 ? Grid::line(0, 1, 32) : Grid::square({0, 0}, {1, 1}, 12);
      SolverParams p;
      p.m = 3.0;
      p.t_end = 0.05;
      p.dt = 0.01;
      const Trajectory t = solve_general(constant_coefficient(2.0), constant_coefficient(0.5), Field(g.size(), 0.7),
                                         constant_boundary(0.7), g, p);
      for (double v : t.snapshots.back()) CHECK(std::abs(v - 0.7) <= 1e-10);
    }
  }

  TEST_CASE("Barenblatt oracle: error within 5% at t0 + 1") {
    const auto rows = barenblatt_convergence(2.0, {1.0 / 128});
    CHECK(rows[0].error <= 0.05);
  }

  TEST_CASE("grid convergence away from the front") {
    // dt = h^2; the error near the kink of Phi(u) at the front is first
    // order, so the rate is measured on |x| < 0.8 r(t).
    const auto rows = barenblatt_convergence(2.0, {1.0 / 32, 1.0 / 64, 1.0 / 128}, 1.0 / 12, 1.0, 0.5);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].interior_ratio >= std::pow(2.0, 1.5));
  }

  TEST_CASE("mass is conserved while the support stays interior") {
    const BarenblattProfile u(2.0, 1, 1.0 / 12, 1.0);
    const Grid g = Grid::line(-2, 2, 256);
    SolverParams p;
    p.t_start = 1.0;
    p.t_end = 2.0;
    p.dt = 1e-3;
    const Trajectory t = solve_general(constant_coefficient(1), constant_coefficient(1), sample(u, g, 1.0),
                                       constant_boundary(0), g, p);
    const double m0 = l1_norm(g, t.snapshots.front());
    for (const auto& s : t.snapshots) CHECK(std::abs(l1_norm(g, s) - m0) <= 0.005 * m0);
  }

  TEST_CASE("2D Barenblatt stays close to the oracle") {
    const BarenblattProfile u(2.0, 2, 0.05, 1.0, {0.0, 0.0});
    const Grid g = Grid::square({-1.5, -1.5}, {1.5, 1.5}, 48);
    SolverParams p;
    p.t_start = 1.0;
    p.t_end = 1.5;
    p.dt = 5e-3;
    const Trajectory t = solve_general(constant_coefficient(1), constant_coefficient(1), sample(u, g, 1.0),
                                       constant_boundary(0), g, p);
    const Field exact = sample(u, g, 1.5);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(t.snapshots.back()[i] - exact[i]));
    CHECK(err <= 0.05 * u.peak(1.5));
  }

  TEST_CASE("zero noise reproduces the deterministic solve bit for bit") {
    const Grid g = Grid::line(0, 1, 64);
    SolverParams p;
    p.t_end = 0.1;
    p.dt = 1e-3;
    const Field x0 = bump(g, {0.5, 0}, 0.2, 1.0);
    const Trajectory a = solve_general(constant_coefficient(1), constant_coefficient(1), x0, constant_boundary(0), g, p);
    const Trajectory b = solve_spme(x0, NoiseField::zero(unit1, 0.1, 1e-3), 0.0, constant_boundary(0), g, p);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.snapshots[k] == b.snapshots[k]);
  }

  TEST_CASE("positivity under noise") {
    const Grid g = Grid::line(0, 1, 64);
    SolverParams p;
    p.t_end = 0.2;
    p.dt = 1e-3;
    const NoiseField f(CoefficientSet::parse(1, {"sin(pi*x)", "x"}),
                       stack({gen_brownian(200, 1e-3, 4), gen_fbm(0.3, 200, 1e-3, 5)}), unit1);
    const Trajectory t = solve_spme(bump(g, {0.4, 0}, 0.2, 1.0), f, 0.5, constant_boundary(0), g, p);
    for (const auto& s : t.snapshots)
      for (double v : s) CHECK(v >= -10.0 * p.newton_tol);
  }

  TEST_CASE("sup norm monitor") {
    const Grid g = Grid::line(0, 1, 64);
    SolverParams p;
    p.t_end = 0.2;
    p.dt = 1e-3;
    const Field x0 = bump(g, {0.5, 0}, 0.3, 1.0);
    const Trajectory det = solve_general(constant_coefficient(1), constant_coefficient(1), x0, constant_boundary(0), g, p);
    const LinfMonitor md = monitor_linf(det, 1.0);
    for (std::size_t k = 1; k < md.sup.size(); ++k) CHECK(md.sup[k] <= md.sup[k - 1] * (1 + 1e-12));
    CHECK_FALSE(md.violated);

    const NoiseField f(CoefficientSet::parse(1, {"2*sin(pi*x)"}), gen_brownian(200, 1e-3, 6), unit1);
    const Trajectory noisy = solve_spme(x0, f, 0.0, constant_boundary(0), g, p);
    const MuNorms n = mu_norms(f, {0.0, 0.2}, {{0.5, 0}, 0.5}, g.h());
    CHECK_FALSE(monitor_linf(noisy, std::exp(2 * n.c0)).violated);
  }

  TEST_CASE("comparison principle on random ordered pairs") {
    for (std::size_t i = 0; i < 8; ++i) CHECK(comparison_trial(77, i, 1e-10).max_violation <= 1e-9);
  }

  TEST_CASE("regularization limit is Cauchy") {
    const Grid g = Grid::line(0, 1, 64);
    SolverParams p;
    p.t_end = 0.05;
    p.dt = 1e-3;
    const Field x0 = bump(g, {0.5, 0}, 0.2, 1.0);
    std::vector<Field> last;
    for (double d : {1e-2, 1e-3, 1e-4}) {
      p.delta_reg = d;
      last.push_back(
          solve_general(constant_coefficient(1), constant_coefficient(1), x0, constant_boundary(0), g, p).snapshots.back());
    }
    auto dist = [](const Field& a, const Field& b) {
      double m = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
      return m;
    };
    CHECK(dist(last[1], last[2]) < dist(last[0], last[1]));
  }

  TEST_CASE("defaults for delta_reg and the support threshold") {
    const Grid g = Grid::line(0, 1, 16);
    SolverParams p;
    p.m = 3.0;
    p.t_end = 0.01;
    p.dt = 0.01;
    const Trajectory t = solve_general(constant_coefficient(1), constant_coefficient(1), bump(g, {0.5, 0}, 0.3, 2.0),
                                       constant_boundary(0), g, p);
    CHECK(t.delta_reg == doctest::Approx(1e-6 * 4.0));
    CHECK(t.support_threshold == doctest::Approx(10.0 * std::sqrt(4e-6)));
  }

  TEST_CASE("Newton failure reports the step") {
    const Grid g = Grid::line(0, 1, 32);
    SolverParams p;
    p.t_end = 0.1;
    p.dt = 0.05;
    p.newton_max = 1;
    p.newton_tol = 1e-15;
    try {
      solve_general(constant_coefficient(1), constant_coefficient(1), bump(g, {0.5, 0}, 0.3, 5.0), constant_boundary(0),
                    g, p);
      FAIL("expected divergence");
    } catch (const SolverDivergence& e) {
      CHECK(e.step() == 1);
    }
  }

  TEST_CASE("trajectory lookup") {
    const Grid g = Grid::line(0, 1, 16);
    Trajectory t{g, {0.0, 1.0}, {Field(g.size(), 0.0), Field(g.size(), 2.0)}, constant_boundary(0)};
    CHECK(t.at(0.25)[2] == doctest::Approx(0.5));
    CHECK(t.find(1.0).value() == 1);
    CHECK_FALSE(t.find(0.5).has_value());
    CHECK_THROWS_AS(t.at(1.5), InvalidArgument);
  }
}
