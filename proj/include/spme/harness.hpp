// Experiment configuration, runners and report emission.
//
// Configs are JSON documents (schema_version 1, documented in README.md).
// Every runner returns a Report holding the JSON report, auxiliary files
// (CSV, SVG) and an exit code: 0 pass, 2 bound violation, 3 solver failure,
// 4 config error.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "json.hpp"
#include "spme/geometry.hpp"
#include "spme/noise_field.hpp"
#include "spme/solver.hpp"

namespace spme {

enum class ExperimentKind { simulate, hole_fill, propagation, entropy, bounds_only, validate };
std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

inline constexpr int kExitPass = 0;
inline constexpr int kExitViolation = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitConfig = 4;

struct ChannelSpec {
  ChannelKind kind = ChannelKind::constant;
  double hurst = 0.5;
  double rate = 1.0;
};

struct InitialSpec {
  std::string kind = "zero";  ///< zero | constant | bump | barenblatt
  Point center{0.5, 0.5};
  double radius = 0.1;
  double height = 1.0;
  double value = 0.0;
  double c_b = 1.0 / 12.0;
  double t0 = 1.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::simulate;
  int dim = 1;
  Box domain;
  int cells = 128;
  double m = 2.0;
  double lambda = 0.0;
  std::vector<std::string> coefficients{"0"};
  std::vector<ChannelSpec> channels{ChannelSpec{}};
  double signal_dt = 1e-3;
  double smooth = 0.0;
  std::vector<std::uint64_t> seeds{0};
  SolverParams solver;
  InitialSpec initial;

  // hole-fill
  Point center{0.5, 0.5};
  double radius = 0.5;
  double H = 1.0;
  int refine = 4;

  // propagation
  std::vector<double> s_ladder{0.0};
  std::vector<double> h_ladder{0.1};

  // entropy
  std::vector<double> eps_ladder{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  double delta = 0.5;
  double kappa = 1.0;
  int max_shrink = 6;
  int cells_per_eps = 16;
  std::size_t entropy_steps = 2000;
  double t_start_fraction = 1e-3;

  // bounds-only
  std::vector<double> R_ladder{0.2, 0.1, 0.05, 0.025};
  std::vector<double> t_ladder{0.2, 0.1, 0.05, 0.025};

  // validate
  double c_det_scale = 1.0;

  std::string out_dir = "out";
  bool svg = true;
  int workers = 1;

  nlohmann::json raw;
};

/// Validates and converts; throws ConfigError with the offending key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a 64-bit hash of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

/// Driving signal for one seed covering [0, t_end] (or [-t_end, 0] when
/// `reversed`); one channel per configured channel, channel k seeded with
/// split(k) of the run seed.
Signal make_signal(const ExperimentConfig& cfg, std::uint64_t seed, double t_end, bool reversed = false);
NoiseField make_field(const ExperimentConfig& cfg, std::uint64_t seed, double t_end, bool reversed = false);
Grid make_grid(const ExperimentConfig& cfg);
Field make_initial(const ExperimentConfig& cfg, const Grid& grid);

struct Report {
  nlohmann::json json;
  /// File name -> contents.
  std::map<std::string, std::string> files;
  int exit_code = kExitPass;
};

Report run_simulate(const ExperimentConfig& cfg);
Report run_hole_fill(const ExperimentConfig& cfg);
Report run_propagation(const ExperimentConfig& cfg);
Report run_entropy(const ExperimentConfig& cfg);
Report run_bounds_only(const ExperimentConfig& cfg);
Report run_validate(const ExperimentConfig& cfg);
/// Dispatches on cfg.kind; solver failures become exit code 3.
Report run_experiment(const ExperimentConfig& cfg);

/// Writes report.json and every auxiliary file into `dir`.
void write_report(const Report& report, const std::string& dir);

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Building blocks shared by the validate suites and the acceptance gate.

struct ConvergenceRow {
  double h = 0.0;
  /// max |u_h - u| / peak over the whole grid at the final time
  double error = 0.0;
  /// same over |x - c| < 0.8 r(t), away from the front
  double interior_error = 0.0;
  double ratio = 0.0;
  double interior_ratio = 0.0;
};

/// d=1 Barenblatt run with C_B, started at t0 on [-2, 2], dt = h^2, compared
/// at t0 + duration.
std::vector<ConvergenceRow> barenblatt_convergence(double m, const std::vector<double>& hs,
                                                   double c_b = 1.0 / 12.0, double t0 = 1.0,
                                                   double duration = 1.0);

struct ComparisonTrial {
  std::string noise;
  int dim = 1;
  /// max over nodes and snapshots of X1 - X2 (<= 0 when ordered)
  double max_violation = 0.0;
};

/// Random ordered pair X1_0 <= X2_0 (and g1 <= g2) under a noise family
/// picked from the trial index; both solved with the same path.
ComparisonTrial comparison_trial(std::uint64_t seed, std::size_t index, double newton_tol);

// Output helpers.
struct Series {
  std::string name;
  std::vector<double> x, y;
};
std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series);
std::string format_double(double v);

/// Contents of the .bin and .json trajectory files.
std::pair<std::string, std::string> trajectory_files(const Trajectory& traj);

/// <prefix>.bin holds little-endian float64 snapshots back to back;
/// <prefix>.json describes grid, pinned nodes and times.
void write_trajectory(const Trajectory& traj, const std::string& prefix);
Trajectory read_trajectory(const std::string& prefix);

}  // namespace spme
