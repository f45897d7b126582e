// pdcsim: command-line front end for the storage-loop single-photon source
// simulator. Exit codes: 0 ok, 1 usage, 2 config load/parse, 3 validation,
// 4 output I/O.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdcsim/config.hpp"
#include "pdcsim/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kParse = 2, kInvalid = 3, kIo = 4 };

struct RunOptions {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  bool print_config = false;
};

pdcsim::ExperimentConfig load(const RunOptions& opt) {
  pdcsim::ExperimentConfig cfg;
  if (!opt.preset.empty()) {
    const auto all = pdcsim::presets();
    auto it = all.find(opt.preset);
    if (it == all.end()) throw pdcsim::ConfigParseError("unknown preset: " + opt.preset);
    cfg = it->second;
  } else {
    std::ifstream in(opt.config_path);
    if (!in) throw pdcsim::ConfigParseError("cannot open config file: " + opt.config_path);
    cfg = pdcsim::parse_config(in);
  }
  cfg = pdcsim::apply_overrides(cfg, opt.overrides);
  if (opt.trials) cfg.trials = *opt.trials;
  if (opt.seed) cfg.master_seed = *opt.seed;
  if (opt.workers) cfg.worker_count = *opt.workers;
  if (opt.out) cfg.output_path = *opt.out;
  return cfg;
}

int run(const RunOptions& opt) {
  pdcsim::ExperimentConfig cfg;
  try {
    cfg = load(opt);
  } catch (const pdcsim::ConfigParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParse;
  }
  if (opt.print_config) {
    pdcsim::write_config(std::cout, cfg);
    return kOk;
  }
  if (auto v = cfg.violations(); !v.empty()) {
    std::cerr << "error: invalid configuration\n";
    for (const auto& s : v) std::cerr << "  " << s << '\n';
    return kInvalid;
  }
  for (const auto& w : cfg.pump.warnings()) std::cerr << "warning: " << w << '\n';

  pdcsim::RunResult result;
  try {
    result = pdcsim::run_experiment(cfg);
  } catch (const pdcsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const pdcsim::ScheduleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  try {
    pdcsim::write_outputs(cfg.output_path, result);
  } catch (const pdcsim::OutputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  std::cout << result.files.at("summary.txt");
  std::cout << "outputs written to " << cfg.output_path << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stored parametric down-conversion single-photon source simulator"};
  app.require_subcommand(1);

  RunOptions opt;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file or preset");
  auto* cfg_opt = run_cmd->add_option("config", opt.config_path, "Config file (INI)");
  auto* preset_opt = run_cmd->add_option("--preset", opt.preset, "Built-in preset name");
  cfg_opt->excludes(preset_opt);
  run_cmd->add_option("--set", opt.overrides, "Override, section.key=value (repeatable)");
  run_cmd->add_option("--trials", opt.trials, "Number of trials");
  run_cmd->add_option("--seed", opt.seed, "Master seed");
  run_cmd->add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", opt.out, "Output directory");
  run_cmd->add_flag("--print-config", opt.print_config,
                    "Print the resolved config instead of running");

  auto* list_cmd = app.add_subcommand("presets", "List built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (list_cmd->parsed()) {
    for (const auto& [name, cfg] : pdcsim::presets())
      std::cout << name << "  (" << pdcsim::to_string(cfg.experiment) << ")\n";
    return kOk;
  }
  if (opt.config_path.empty() && opt.preset.empty()) {
    std::cerr << "error: run needs a config file or --preset\n";
    return kUsage;
  }
  return run(opt);
}
