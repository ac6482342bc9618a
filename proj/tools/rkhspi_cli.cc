// Batch driver: runs one greedy + RKHS-PI experiment per invocation.
//
//   rkhspi run <config>
//   rkhspi preset <name> [--out DIR] [--override key=value ...]
//   rkhspi list-presets
//
// Thread count comes from RKHSPI_NUM_THREADS (default 1).

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rkhspi/errors.h"
#include "rkhspi/experiment.h"

int main(int argc, char** argv) {
  CLI::App app{"RKHS policy iteration for HJB equations"};
  app.set_version_flag("--version", std::string(rkhspi::Version()));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> run_overrides;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "config file (key = value lines)")
      ->required();
  run->add_option("--override", run_overrides, "key=value assignment");

  std::string preset_name;
  std::string out_dir;
  std::vector<std::string> preset_overrides;
  auto* preset = app.add_subcommand("preset", "run a named preset");
  preset->add_option("name", preset_name, "preset name")->required();
  preset->add_option("--out", out_dir, "output directory");
  preset->add_option("--override", preset_overrides, "key=value assignment");

  bool print_config = false;
  preset->add_flag("--print-config", print_config,
                   "print the effective config and exit");

  auto* list = app.add_subcommand("list-presets", "list the named presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    for (const auto& p : rkhspi::Presets()) {
      std::cout << p.name << "\t" << p.description << "\n";
    }
    return 0;
  }

  rkhspi::ExperimentConfig cfg;
  try {
    if (run->parsed()) {
      cfg = rkhspi::LoadConfig(config_path);
      for (const auto& o : run_overrides) rkhspi::ApplyOverride(cfg, o);
    } else {
      cfg = rkhspi::FindPreset(preset_name).config;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      for (const auto& o : preset_overrides) rkhspi::ApplyOverride(cfg, o);
      if (print_config) {
        std::cout << rkhspi::FormatConfig(cfg);
        return 0;
      }
    }
  } catch (const rkhspi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return rkhspi::RunExperiment(cfg, std::cerr);
}
