// Entropy experiment: disjoint bumps evolved through the rescaled equation
//
//   dU/dt = e^{mu_{G(t)} + eta G(t)} Lap Phi(e^{-mu_{G(t)} + eta G(t)} U),  t in (0, T],
//
// with G(t) = log(delta t) / delta, T = 1/delta. Every subset of bumps is a
// codeword; certified disjoint supports make codewords L1-separated, so
// the bump count is a lower bound on the entropy in bits.
#pragma once

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "spme/grid.hpp"
#include "spme/noise_field.hpp"
#include "spme/solver.hpp"
#include "spme/transforms.hpp"

namespace spme {

struct BumpGrid {
  double eps = 0.0;
  Box domain;
  std::vector<Point> centers;
  /// Bump height (kappa eps)^{2/(m-1)}.
  double M = 0.0;
  double kappa = 1.0;
  double m = 2.0;

  std::size_t count() const { return centers.size(); }
};

/// Square lattice of spacing 2 eps centred in the domain, ceil(L/(2 eps)) - 1
/// centres per axis (so every closed ball of radius eps is interior).
BumpGrid build_bump_grid(double eps, const Box& domain, double kappa, double m);

struct EntropyParams {
  double lambda = 1.0;
  double delta = 0.5;
  double m = 2.0;
  double kappa = 1.0;
  int max_shrink = 6;
  /// Start at t_start_fraction * T.
  double t_start_fraction = 1e-3;
  int cells_per_eps = 16;
  /// Local box half-width around each centre, in units of eps.
  double local_halfwidth = 1.5;
  std::size_t steps = 2000;
  SolverParams solver;
};

struct BumpRun {
  BumpRun(BumpGrid b, Grid g, AttractorRescaling r)
      : bumps(std::move(b)), grid(std::move(g)), rescaling(std::move(r)) {}

  BumpGrid bumps;
  Grid grid;
  AttractorRescaling rescaling;
  double t_start = 0.0;
  double T = 0.0;
  /// One trajectory per bump on its local grid.
  std::vector<Trajectory> traj;
  /// Local node -> node of `grid`.
  std::vector<std::vector<std::size_t>> to_global;
  int shrinks = 0;
  bool certified = false;
  /// eps minus the largest distance from a centre to its bump's support.
  double margin = 0.0;
  std::vector<double> l1_initial, l1_final;
};

/// Solves every bump independently, halving kappa until each support stays
/// strictly inside B_eps(xi_i). Throws ContainmentFailure after max_shrink halvings.
BumpRun evolve_bumps(const BumpGrid& bumps, const NoiseField& field, const EntropyParams& params);

/// Rescaled coefficient pair at time t for the given nodes.
void rescaled_coefficients(const PointwiseNoise& noise, const AttractorRescaling& r, double t,
                           std::span<double> rho1, std::span<double> rho2);

/// sum_i c_i U^i(t) on the global grid.
Field superposition(const BumpRun& run, const std::vector<int>& codeword, double t);

/// L1 distance at time T of two codewords; throws InvalidArgument when the
/// run is not certified.
double l1_separation(const BumpRun& run, const std::vector<int>& a, const std::vector<int>& b);

struct EntropyPoint {
  double eps = 0.0;
  std::size_t count = 0;
  /// Half the minimal L1 separation of distinct codewords.
  double delta = 0.0;
  double bits = 0.0;
  double kappa = 0.0;
};

EntropyPoint entropy_point(const BumpRun& run);

double theoretical_exponent(int d, double m);

struct EntropyFit {
  std::vector<EntropyPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double theoretical = 0.0;
  nlohmann::json to_json() const;
};

/// Least-squares slope of log2(bits) against log2(1/delta). Needs >= 4 points.
EntropyFit entropy_estimate(const std::vector<EntropyPoint>& points, int d, double m);

}  // namespace spme
