// cavdet: command-line driver for the cavity molecule-detection simulator.
//
//   cavdet vrs-scan  -c configs/vrs.ini [--set key=value ...]
//   cavdet eit-scan  -c configs/eit.ini --set ensemble.n_c=1e4
//   cavdet ringdown  -c configs/ringdown.ini --cycles 10
//   cavdet sweep     configs/sweep_vrs_kappa.json
//   cavdet rerun     runs/<id>/manifest.json
//   cavdet validate  -c configs/vrs.ini
//
// Exit status: 0 success, 1 configuration error, 2 numerical failure.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavdet/io.hpp"

namespace {

using namespace cavdet;

struct RunArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string runs_dir = "runs";
  std::string run_id;
  int cycles = 0;
};

void add_run_options(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("-c,--config", args.config, "INI configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", args.overrides, "Override, section.key=value (repeatable, last wins)");
  cmd->add_option("--runs-dir", args.runs_dir, "Output root")->capture_default_str();
  cmd->add_option("--run-id", args.run_id, "Output directory name (default: derived from the config)");
}

Model load(const RunArgs& args) {
  std::vector<std::string> overrides = args.overrides;
  if (args.cycles > 0) overrides.push_back("run.cycles=" + std::to_string(args.cycles));
  Model model = validate(io::load_config(args.config, overrides));
  for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
  return model;
}

void report(const io::RunOutput& out) {
  std::cout << out.dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field cavity QED simulator for molecule detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kVersion));

  RunArgs vrs, eit, ring, check;
  auto* vrs_cmd = app.add_subcommand("vrs-scan", "Probe scan across the vacuum Rabi splitting");
  add_run_options(vrs_cmd, vrs);
  auto* eit_cmd = app.add_subcommand("eit-scan", "Probe scan across the cavity-EIT window");
  add_run_options(eit_cmd, eit);
  auto* ring_cmd = app.add_subcommand("ringdown", "Switch the probe off at steady state and record the decay");
  add_run_options(ring_cmd, ring);
  ring_cmd->add_option("--cycles", ring.cycles, "Detection cycles (overrides run.cycles)")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Check a configuration and print derived values");
  validate_cmd->add_option("-c,--config", check.config, "INI configuration file")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("-s,--set", check.overrides, "Override, section.key=value");

  std::string sweep_path;
  std::string sweep_runs = "runs";
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a cartesian parameter sweep from a JSON spec");
  sweep_cmd->add_option("spec", sweep_path, "Sweep spec (JSON)")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--runs-dir", sweep_runs, "Output root")->capture_default_str();

  std::string manifest_path, rerun_runs = "runs", rerun_id;
  auto* rerun_cmd = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rerun_cmd->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required()->check(
      CLI::ExistingFile);
  rerun_cmd->add_option("--runs-dir", rerun_runs, "Output root")->capture_default_str();
  rerun_cmd->add_option("--run-id", rerun_id, "Output directory name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : io::ExitCode::config_error;
  }

  try {
    auto run = [](io::Command command, const RunArgs& args) {
      const Model model = load(args);
      report(io::execute(command, model, {args.runs_dir, args.run_id}));
    };
    if (*vrs_cmd) run(io::Command::vrs_scan, vrs);
    if (*eit_cmd) run(io::Command::eit_scan, eit);
    if (*ring_cmd) run(io::Command::ringdown, ring);
    if (*validate_cmd) {
      const Model model = load(check);
      std::cout << io::derived_values(model).dump(2) << "\n";
    }
    if (*rerun_cmd) report(io::rerun(manifest_path, {rerun_runs, rerun_id}));
    if (*sweep_cmd) {
      const io::SweepSpec spec = io::load_sweep(sweep_path);
      std::cerr << "sweep '" << spec.name << "': " << spec.size() << " points, parallelism " << spec.parallelism
                << "\n";
      const io::SweepReport rep = io::run_sweep(spec, {sweep_runs, ""});
      std::cout << rep.dir.string() << "\n";
      for (const auto& f : rep.failures) std::cerr << "point " << f.index << " failed: " << f.message << "\n";
      if (!rep.failures.empty()) {
        std::cerr << rep.failures.size() << " of " << rep.points << " points failed\n";
        return io::ExitCode::numerical_failure;
      }
    }
  } catch (const ValidationError& e) {
    for (const auto& issue : e.issues()) std::cerr << "error: " << issue.path << ": " << issue.message << "\n";
    return io::ExitCode::config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io::exit_code_for(e);
  }
  return io::ExitCode::ok;
}
