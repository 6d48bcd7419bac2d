// Command-line front end: one subcommand per experiment kind.
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spme/errors.hpp"
#include "spme/harness.hpp"

namespace {

struct Options {
  std::string config;
  long long seed = -1;
  std::string out;
  int workers = 0;
};

int run(spme::ExperimentKind kind, const Options& opt) {
  spme::ExperimentConfig cfg;
  try {
    nlohmann::json raw = {{"schema_version", 1}};
    if (!opt.config.empty()) {
      std::ifstream in(opt.config);
      if (!in) throw spme::ConfigError("config: cannot open " + opt.config);
      try {
        in >> raw;
      } catch (const std::exception& e) {
        throw spme::ConfigError("config: " + opt.config + ": " + e.what());
      }
    }
    if (!raw.is_object()) throw spme::ConfigError("config: top level must be an object");
    const std::string name = spme::to_string(kind);
    if (raw.contains("experiment") && raw["experiment"] != name)
      throw spme::ConfigError("config: experiment is '" + raw["experiment"].dump() + "' but the subcommand is " + name);
    raw["experiment"] = name;
    if (opt.seed >= 0) raw["seeds"] = {opt.seed};
    if (!opt.out.empty()) raw["output"]["dir"] = opt.out;
    if (opt.workers > 0) raw["workers"] = opt.workers;
    cfg = spme::parse_config(raw);
  } catch (const spme::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return spme::kExitConfig;
  }
  const spme::Report report = spme::run_experiment(cfg);
  try {
    spme::write_report(report, cfg.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "cannot write report: " << e.what() << '\n';
    return spme::kExitConfig;
  }
  if (report.json.contains("error")) std::cerr << report.json["error"]["message"].get<std::string>() << '\n';
  std::cout << spme::to_string(kind) << ": exit " << report.exit_code << ", report in " << cfg.out_dir
            << "/report.json\n";
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic porous-medium laboratory"};
  app.require_subcommand(1);
  Options opt;
  int code = 0;
  for (auto kind : {spme::ExperimentKind::simulate, spme::ExperimentKind::hole_fill,
                    spme::ExperimentKind::propagation, spme::ExperimentKind::entropy,
                    spme::ExperimentKind::bounds_only, spme::ExperimentKind::validate}) {
    CLI::App* sub = app.add_subcommand(spme::to_string(kind));
    auto* c = sub->add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
    if (kind != spme::ExperimentKind::validate) c->required();
    sub->add_option("--seed", opt.seed, "run only this seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->callback([kind, &opt, &code] { code = run(kind, opt); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : spme::kExitConfig;
  }
  return code;
}
