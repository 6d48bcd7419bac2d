#include <cmath>
#include <vector>

#include "doctest.h"
#include "spme/bounds.hpp"
#include "spme/entropy.hpp"
#include "spme/errors.hpp"
#include "spme/harness.hpp"
#include "spme/support.hpp"

using namespace spme;

namespace {

const Box unit1{1, {0.0, 0.0}, {1.0, 0.0}};

EntropyParams quick(double kappa = 1.0) {
  EntropyParams p;
  p.kappa = kappa;
  p.cells_per_eps = 8;
  p.steps = 200;
  return p;
}

// Reversed signal covering [G(t_start), 0], as the entropy runner builds it.
NoiseField field_for(const EntropyParams& p, const std::string& coefficient, const std::string& kind) {
  const AttractorRescaling r = attractor_rescaling(p.delta, p.lambda, p.m);
  const double span = std::ceil(-r.G(p.t_start_fraction * r.T)) + 1.0;
  const auto cfg = parse_config(nlohmann::json::parse(R"({"schema_version": 1, "experiment": "entropy", "dim": 1,
    "domain": {"lo": [0.0], "hi": [1.0]}, "noise": {"coefficients": [")" + coefficient +
                                                      R"("], "channels": [{"kind": ")" + kind +
                                                      R"("}], "dt": 0.01}})"));
  return make_field(cfg, 5, span, true);
}

}  // namespace

TEST_SUITE("entropy") {
  TEST_CASE("bump lattice") {
    const BumpGrid b = build_bump_grid(0.125, unit1, 0.1, 2.0);
    CHECK(b.count() >= 3);
    for (std::size_t i = 0; i < b.count(); ++i) {
      CHECK(b.centers[i][0] - 0.125 >= 0.0);
      CHECK(b.centers[i][0] + 0.125 <= 1.0);
      for (std::size_t j = i + 1; j < b.count(); ++j) CHECK(std::abs(b.centers[i][0] - b.centers[j][0]) >= 0.25 - 1e-12);
    }
    CHECK(build_bump_grid(0.1, unit1, 0.1, 2.0).M == doctest::Approx(1e-4));
    CHECK(build_bump_grid(0.0625, unit1, 0.1, 2.0).count() >= 2 * b.count());
    const Box sq{2, {0.0, 0.0}, {1.0, 1.0}};
    CHECK(build_bump_grid(0.125, sq, 1.0, 2.0).count() == b.count() * b.count());
    CHECK_THROWS_AS(build_bump_grid(0.3, unit1, 1.0, 2.0), TooFewCenters);
    CHECK_THROWS_AS(build_bump_grid(0.0, unit1, 1.0, 2.0), InvalidArgument);
  }

  TEST_CASE("theoretical exponent") {
    CHECK(theoretical_exponent(1, 2) == doctest::Approx(1.0 / 3));
    CHECK(theoretical_exponent(2, 3) == doctest::Approx(2.0 / 3));
  }

  TEST_CASE("zero-noise bumps stay in their balls and stay disjoint") {
    const EntropyParams p = quick();
    const BumpRun run = evolve_bumps(build_bump_grid(0.125, unit1, 1.0, 2.0), field_for(p, "0", "constant"), p);
    CHECK(run.certified);
    CHECK(run.margin > 0.0);
    for (std::size_t k = 0; k < run.traj.front().size(); ++k) {
      std::vector<int> owner(run.grid.size(), -1);
      for (std::size_t b = 0; b < run.traj.size(); ++b) {
        const Trajectory& tr = run.traj[b];
        for (std::size_t i : support_of(tr.grid, tr.snapshots[k], tr.support_threshold).cells) {
          const std::size_t g = run.to_global[b][i];
          CHECK(owner[g] == -1);
          owner[g] = static_cast<int>(b);
        }
      }
    }
  }

  TEST_CASE("containment margin grows as kappa shrinks") {
    const EntropyParams p = quick();
    const NoiseField f = field_for(p, "0", "constant");
    EntropyParams a = p, b = p;
    a.kappa = 0.0625;
    a.max_shrink = 0;
    b.kappa = 0.03125;
    b.max_shrink = 0;
    const BumpRun ra = evolve_bumps(build_bump_grid(0.125, unit1, a.kappa, 2.0), f, a);
    const BumpRun rb = evolve_bumps(build_bump_grid(0.125, unit1, b.kappa, 2.0), f, b);
    CHECK(rb.margin >= ra.margin);
  }

  TEST_CASE("an uncertifiable run reports containment failure") {
    EntropyParams p = quick();
    p.kappa = 64.0;
    p.max_shrink = 0;
    CHECK_THROWS_AS(evolve_bumps(build_bump_grid(0.125, unit1, p.kappa, 2.0), field_for(p, "0", "constant"), p),
                    ContainmentFailure);
  }

  TEST_CASE("superposition equals the solve of the summed data") {
    const EntropyParams p = quick();
    const NoiseField f = field_for(p, "sin(pi*x)", "brownian");
    const BumpRun run = evolve_bumps(build_bump_grid(0.125, unit1, 1.0, 2.0), f, p);
    REQUIRE(run.certified);

    std::vector<Point> nodes(run.grid.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = run.grid.point(i);
    auto noise = std::make_shared<PointwiseNoise>(f, nodes);
    const AttractorRescaling r = run.rescaling;
    NodalCoefficient rho1 = [noise, r](double t, std::span<double> out) {
      std::vector<double> tmp(out.size());
      rescaled_coefficients(*noise, r, t, out, tmp);
    };
    NodalCoefficient rho2 = [noise, r](double t, std::span<double> out) {
      std::vector<double> tmp(out.size());
      rescaled_coefficients(*noise, r, t, tmp, out);
    };
    const std::vector<int> all(run.traj.size(), 1);
    SolverParams sp = p.solver;
    sp.t_start = run.t_start;
    sp.t_end = run.T;
    sp.dt = (run.T - run.t_start) / static_cast<double>(p.steps);
    sp.delta_reg = run.traj.front().delta_reg;
    const Trajectory global =
        solve_general(rho1, rho2, superposition(run, all, run.t_start), constant_boundary(0), run.grid, sp);
    const Field sum = superposition(run, all, run.T);
    double err = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) err = std::max(err, std::abs(sum[i] - global.snapshots.back()[i]));
    CHECK(err <= 1e-6 * run.bumps.M);
  }

  TEST_CASE("codeword separation and the L1 floor") {
    const EntropyParams p = quick();
    const BumpRun run = evolve_bumps(build_bump_grid(0.125, unit1, 1.0, 2.0), field_for(p, "0", "constant"), p);
    const std::size_t n = run.traj.size();
    std::vector<int> a(n, 0), b(n, 0);
    a[0] = b[0] = 1;
    CHECK(l1_separation(run, a, a) == 0.0);
    b[1] = 1;
    CHECK(l1_separation(run, a, b) == doctest::Approx(run.l1_final[1]).epsilon(1e-9));

    // zero noise, lambda = 1: rho1 = e^{eta G}, rho2 = e^{eta G} up to the sign of eta; both <= 1 on (0, T]
    for (std::size_t i = 0; i < n; ++i) {
      const Trajectory& tr = run.traj[i];
      const double H = run.bumps.M;
      const double C = l1_constant(1.0, 1.0);
      for (std::size_t k = 0; k < tr.size(); ++k) {
        const double t = tr.times[k] - tr.times.front();
        CHECK(l1_norm(tr.grid, tr.snapshots[k]) >= 0.99 * l1_lower_bound(t, run.l1_initial[i], H, C, 2.0));
      }
    }
    const EntropyPoint e = entropy_point(run);
    CHECK(e.count == n);
    CHECK(e.bits == doctest::Approx(double(n)));
    CHECK(e.delta > 0.0);
  }

  TEST_CASE("fit needs four points") {
    std::vector<EntropyPoint> pts(3, EntropyPoint{0.1, 3, 0.1, 3.0, 1.0});
    CHECK_THROWS_AS(entropy_estimate(pts, 1, 2.0), InsufficientData);
    std::vector<EntropyPoint> line;
    for (int k = 1; k <= 4; ++k) {
      const double delta = std::pow(2.0, -k);
      line.push_back(EntropyPoint{delta, 1, delta, std::pow(2.0, 0.5 * k), 1.0});
    }
    const EntropyFit fit = entropy_estimate(line, 1, 2.0);
    CHECK(fit.slope == doctest::Approx(0.5));
    CHECK(fit.theoretical == doctest::Approx(1.0 / 3));
  }
}
