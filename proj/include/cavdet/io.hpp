#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavdet/model.hpp"
#include "cavdet/results.hpp"

namespace cavdet::io {

inline constexpr const char* kToolName = "cavdet";
inline constexpr const char* kVersion = "1.0.0";

enum class Command { vrs_scan, eit_scan, ringdown };

std::string to_string(Command command);
/// Accepts the CLI spelling ("vrs-scan", "eit-scan", "ringdown").
Command parse_command(const std::string& name);

enum ExitCode : int { ok = 0, config_error = 1, numerical_failure = 2 };

/// Maps an exception to the process exit status.
ExitCode exit_code_for(const std::exception& error);

/// Loads a config file and applies "section.key=value" overrides in order.
Config load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

/// Fixed 17-significant-digit rendering used in every CSV.
std::string format_csv(double value);

void write_scan_csv(std::ostream& out, const ScanResult& scan);
void write_ringdown_csv(std::ostream& out, const RingdownResult& ringdown);

/// Every resolved model value in file units (Hz, W, m, s).
nlohmann::json derived_values(const Model& model);

nlohmann::json summarize(const Model& model, const ScanResult& scan);
nlohmann::json summarize(const Model& model, const RingdownResult& ringdown);

struct RunOptions {
  std::filesystem::path runs_dir = "runs";
  /// Generated from the command, time and config hash when empty.
  std::string run_id;
};

struct RunOutput {
  std::filesystem::path dir;
  std::string run_id;
  nlohmann::json manifest;
  nlohmann::json summary;
};

/// Runs one simulation and writes runs/<id>/{manifest.json, scan.csv, summary.json}.
RunOutput execute(Command command, const Model& model, const RunOptions& options);

/// Rebuilds the command and configuration recorded in a manifest and runs it
/// again. Outputs other than the manifest are bit-identical to the original.
RunOutput rerun(const std::filesystem::path& manifest_path, const RunOptions& options);

/// Cartesian parameter sweep over configuration paths.
struct SweepAxis {
  std::string path;
  std::vector<std::string> values;
};

struct SweepSpec {
  std::string name = "sweep";
  Command command = Command::vrs_scan;
  std::filesystem::path base_config;
  std::vector<std::string> overrides;
  std::vector<SweepAxis> axes;
  int parallelism = 1;

  [[nodiscard]] std::size_t size() const;
  /// Override assignments for point `index`; the last axis varies fastest.
  [[nodiscard]] std::vector<std::string> point(std::size_t index) const;
};

/// Reads a sweep spec; relative config paths resolve against the spec's directory.
SweepSpec load_sweep(const std::filesystem::path& path);
SweepSpec parse_sweep(const nlohmann::json& spec, const std::filesystem::path& base_dir);

struct SweepFailure {
  std::size_t index = 0;
  ExitCode code = ExitCode::numerical_failure;
  std::string message;
};

struct SweepReport {
  std::filesystem::path dir;
  std::size_t points = 0;
  std::vector<SweepFailure> failures;
};

/// Writes runs/<name>/{sweep.json, aggregate.csv, failures.json} plus one run
/// directory per point under runs/<name>/points/.
SweepReport run_sweep(const SweepSpec& spec, const RunOptions& options);

}  // namespace cavdet::io
