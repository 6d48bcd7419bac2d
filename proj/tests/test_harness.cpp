#include <atomic>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "spme/errors.hpp"
#include "spme/harness.hpp"
#include "spme/rng.hpp"

using namespace spme;
using nlohmann::json;

namespace {

json hole_fill_json() {
  return json::parse(R"({
    "schema_version": 1, "experiment": "hole-fill", "dim": 1,
    "domain": {"lo": [-1.0], "hi": [1.0]}, "cells": 64, "m": 2.0,
    "noise": {"coefficients": ["0"], "channels": [{"kind": "constant"}]},
    "solver": {"dt": 4e-4, "t_end": 0.1},
    "hole_fill": {"center": [0.0], "radius": 1.0, "H": 1.0}
  })");
}

const json* bound_of(const json& run, const std::string& kind) {
  for (const auto& b : run["bounds"])
    if (b["kind"] == kind) return &b;
  return nullptr;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config validation") {
    CHECK_NOTHROW(parse_config(hole_fill_json()));
    json j = hole_fill_json();
    j["solver"]["dtt"] = 1.0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = hole_fill_json();
    j["schema_version"] = 2;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = hole_fill_json();
    j["experiment"] = "unknown";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = hole_fill_json();
    j["cells"] = "many";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = hole_fill_json();
    j["noise"]["channels"][0]["kind"] = "levy";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = hole_fill_json();
    j["noise"]["coefficients"] = {"sin(", "1"};
    CHECK_THROWS(parse_config(j));
  }

  TEST_CASE("config hash") {
    const json a = hole_fill_json();
    CHECK(config_hash(a) == config_hash(hole_fill_json()));
    CHECK(config_hash(a).size() == 16);
    json b = a;
    b["cells"] = 65;
    CHECK(config_hash(a) != config_hash(b));
  }

  TEST_CASE("channel k is driven by split(k) of the run seed") {
    json j = hole_fill_json();
    j["noise"] = json::parse(R"({"coefficients": ["1", "x"], "channels": [{"kind": "brownian"}, {"kind": "brownian"}], "dt": 0.01})");
    const ExperimentConfig cfg = parse_config(j);
    const Signal s = make_signal(cfg, 7, 1.0);
    const Signal b = gen_brownian(100, 0.01, Rng(7).split(1).seed());
    for (std::size_t i = 0; i < s.samples(); ++i) CHECK(s.channel(1)[i] == b.channel(0)[i]);
  }

  TEST_CASE("deterministic hole filling passes") {
    const Report r = run_experiment(parse_config(hole_fill_json()));
    CHECK(r.exit_code == kExitPass);
    const json& run = r.json["runs"][0];
    CHECK(run["verdict"] == "pass");
    CHECK(run["centre"]["passed"] == true);
    const json* det = bound_of(run, "deterministic");
    REQUIRE(det);
    CHECK((*det)["t_star"].get<double>() == doctest::Approx(1.0 / 12));
    CHECK((*det)["violations"] == 0);
    CHECK(r.files.count("hole_fill_seed0.csv") == 1);
  }

  TEST_CASE("reruns are byte identical") {
    json j = hole_fill_json();
    j["noise"] = json::parse(R"J({"coefficients": ["sin(pi*x)"], "channels": [{"kind": "brownian"}], "dt": 1e-3})J");
    j["seeds"] = {3, 4};
    const ExperimentConfig cfg = parse_config(j);
    const Report a = run_experiment(cfg);
    ExperimentConfig cfg2 = cfg;
    cfg2.workers = 2;
    const Report b = run_experiment(cfg2);
    CHECK(a.json.dump() == b.json.dump());
    CHECK(a.files == b.files);
  }

  TEST_CASE("doubling H halves the deterministic horizon") {
    json j = hole_fill_json();
    j["hole_fill"]["H"] = 2.0;
    const Report r = run_experiment(parse_config(j));
    CHECK(r.exit_code == kExitPass);
    CHECK((*bound_of(r.json["runs"][0], "deterministic"))["t_star"].get<double>() == doctest::Approx(1.0 / 24));
  }

  TEST_CASE("spatially constant noise adds the homogeneous bound") {
    json j = hole_fill_json();
    j["noise"] = json::parse(R"({"coefficients": ["1"], "channels": [{"kind": "brownian"}], "dt": 1e-3})");
    const Report r = run_experiment(parse_config(j));
    CHECK(r.exit_code == kExitPass);
    const json& run = r.json["runs"][0];
    REQUIRE(bound_of(run, "homogeneous"));
    REQUIRE(bound_of(run, "small-ball"));
    CHECK((*bound_of(run, "deterministic"))["asserted"] == false);
    // gradient-free noise: C_R is e^0 / 1
    CHECK((*bound_of(run, "small-ball"))["modulation"].get<double>() == doctest::Approx(1.0));
    CHECK((*bound_of(run, "homogeneous"))["t_star"].get<double>() ==
          doctest::Approx((*bound_of(run, "small-ball"))["t_star"].get<double>()).epsilon(1e-3));
  }

  TEST_CASE("zero support threshold is inconclusive") {
    json j = hole_fill_json();
    j["solver"]["support_threshold"] = 0.0;
    const Report r = run_experiment(parse_config(j));
    CHECK(r.json["runs"][0]["verdict"] == "inconclusive");
  }

  TEST_CASE("hole filling rejects lambda") {
    json j = hole_fill_json();
    j["lambda"] = 1.0;
    CHECK(run_experiment(parse_config(j)).exit_code == kExitConfig);
  }

  TEST_CASE("solver failures map to exit 3") {
    json j = hole_fill_json();
    j["solver"]["newton_max"] = 1;
    j["solver"]["newton_tol"] = 1e-15;
    const Report r = run_experiment(parse_config(j));
    CHECK(r.exit_code == kExitSolver);
    CHECK(r.json["error"]["kind"].is_string());
  }

  TEST_CASE("propagation from zero data is inconclusive") {
    const json j = json::parse(R"({
      "schema_version": 1, "experiment": "propagation", "dim": 1,
      "domain": {"lo": [-2.0], "hi": [2.0]}, "cells": 128, "m": 2.0,
      "noise": {"coefficients": ["0"], "channels": [{"kind": "constant"}]},
      "solver": {"dt": 1e-2, "t_end": 0.1}, "initial": {"kind": "zero"},
      "propagation": {"s": [0.0], "h": [0.1]}
    })");
    const Report r = run_experiment(parse_config(j));
    CHECK(r.exit_code == kExitPass);
    CHECK(r.json["runs"][0]["verdict"] == "inconclusive");
  }

  TEST_CASE("entropy report") {
    const json j = json::parse(R"({
      "schema_version": 1, "experiment": "entropy", "dim": 1,
      "domain": {"lo": [0.0], "hi": [1.0]}, "m": 2.0, "lambda": 1.0,
      "noise": {"coefficients": ["0"], "channels": [{"kind": "constant"}], "dt": 0.01},
      "entropy": {"eps": [0.125, 0.0625, 0.03125, 0.015625], "delta": 0.5, "cells_per_eps": 8, "steps": 200}
    })");
    const Report r = run_experiment(parse_config(j));
    CHECK(r.exit_code == kExitPass);
    const json& fit = r.json["runs"][0]["fit"];
    CHECK(fit["points"].size() == 4);
    CHECK(fit["theoretical_exponent"].get<double>() == doctest::Approx(1.0 / 3));
    CHECK(fit["slope"].get<double>() >= 1.0 / 3 - 0.1);
    json k = j;
    k["entropy"]["eps"] = {0.125, 0.0625, 0.03125};
    CHECK(run_experiment(parse_config(k)).exit_code == kExitConfig);
  }

  TEST_CASE("validate fails when C_det is perturbed") {
    json j = json::parse(R"({"schema_version": 1, "experiment": "validate", "dim": 1,
      "domain": {"lo": [-1.0], "hi": [1.0]}, "validate": {"c_det_scale": 1.1}})");
    const Report r = run_experiment(parse_config(j));
    CHECK(r.exit_code != kExitPass);
    CHECK(r.json["suites"][0]["passed"] == false);
  }

  TEST_CASE("trajectory files round trip") {
    const Grid g = Grid::square({0, 0}, {1, 1}, 10);
    Field a(g.size()), b(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      a[i] = std::sin(double(i));
      b[i] = 1.0 / (1.0 + i);
    }
    const Trajectory t{g, {0.0, 0.125}, {a, b}, constant_boundary(0)};
    const auto dir = std::filesystem::temp_directory_path() / "spme_traj_test";
    std::filesystem::create_directories(dir);
    write_trajectory(t, (dir / "t").string());
    const Trajectory u = read_trajectory((dir / "t").string());
    CHECK(u.times == t.times);
    CHECK(u.snapshots == t.snapshots);
    CHECK(u.grid.size() == g.size());
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("parallel_for covers every index and rethrows") {
    std::atomic<int> sum{0};
    parallel_for(100, 3, [&](std::size_t i) { sum += int(i); });
    CHECK(sum == 4950);
    CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                      if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
  }

  TEST_CASE("format_double") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3) == "0.3333333333");
  }
}
