#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wrgsim/config.hpp"
#include "wrgsim/cut.hpp"

namespace wrgsim {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct RunOptions {
  std::string out_dir = "out";
  int threads = 1;
  std::uint64_t seed_offset = 0;
  bool emit_plot_data = false;
  std::optional<CutMode> mode;
};

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string fnv1a;
  std::size_t bytes = 0;
};

struct RunRecord {
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct RunManifest {
  std::string artifact_version = kArtifactVersion;
  std::string command, config_hash, config_text;
  std::uint64_t seed_offset = 0;
  bool emit_plot_data = false;
  std::string mode;  // cut mode override, empty when absent
  std::vector<RunRecord> runs;
  double wall_clock_seconds = 0;
  std::vector<OutputFile> files;
  std::map<std::string, double> metrics;
  std::string status = "ok";  // ok | numerical_abort | bound_violation
  std::string message;
  int exit_code = 0;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

const std::vector<std::string>& commands();

// Runs one pipeline and writes its outputs plus manifest.json into opt.out_dir.
// Throws ConfigError for schema or value problems; numerical aborts and bound violations
// are recorded in the returned manifest (exit codes 3 and 4).
RunManifest run_experiment(const std::string& command, const Config& cfg, const RunOptions& opt);

struct ReplayResult {
  RunManifest manifest;
  bool identical = true;
  std::vector<std::string> mismatches;
};
// Re-runs a stored manifest into opt.out_dir (its threads setting is free) and compares the
// new inventory with the stored one.
ReplayResult replay(const std::string& manifest_path, const RunOptions& opt);

}  // namespace wrgsim
