// Batch front end: one subcommand per experiment kind, artifacts in --out.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "kolmo/harness.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic cubic Kolmogorov system lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kolmo::kVersion);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> sets;
  long long seed = -1;
  long threads = -1;

  for (const auto& name : kolmo::subcommands()) {
    auto* sub = app.add_subcommand(name, kolmo::theorem_of(name));
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--seed", seed, "base seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (default: out)");
    sub->add_option("--threads", threads, "worker threads, 0 = hardware (results do not depend on it)");
    sub->add_option("--set", sets, "extra key=value overrides")->take_all();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    const std::string kind = app.get_subcommands().front()->get_name();
    kolmo::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = kolmo::ExperimentConfig::load(config_path);
    if (!cfg.kind.empty() && cfg.kind != kind)
      throw kolmo::ConfigError({"kind: config is for '" + cfg.kind + "', subcommand is '" + kind + "'"});
    cfg.kind = kind;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw kolmo::ConfigError({"--set: expected key=value, got '" + kv + "'"});
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed >= 0) cfg.set("seed", std::to_string(seed));
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads >= 0) cfg.threads = static_cast<unsigned>(threads);

    const kolmo::Manifest m = kolmo::run(cfg);
    std::cout << kind << ": " << m.theorem << "\n";
    for (const auto& [k, v] : m.summary) std::cout << "  " << k << " = " << v << "\n";
    for (const auto& f : m.files) std::cout << "  wrote " << cfg.out_dir << "/" << f.name << "\n";
    return 0;
  } catch (const kolmo::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const kolmo::DomainError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
