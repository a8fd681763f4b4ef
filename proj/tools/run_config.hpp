#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bio/harness.hpp"

namespace bio::cli {

enum class Command { Deblur, CsMri, Ablation, Stability };

Command parse_command(const std::string& name);
std::string to_string(Command c);

/// Everything a run needs, after defaults, config file and flags are merged.
struct RunConfig {
  Command command = Command::Deblur;
  TaskSpec task;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  int jobs = 1;

  // ablation
  std::vector<AnchorSpec> anchors;
  std::vector<DSpec> data_ops;
  bool timing_columns = true;

  // stability
  std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
  int repeats = 2;

  nlohmann::json resolved;  // echo of the effective settings
};

/// Parses the JSON config; relative paths resolve against the config's folder.
/// Unknown keys and missing files are configuration errors.
RunConfig load_config(Command command, const nlohmann::json& doc,
                      const std::filesystem::path& base_dir);

RunConfig load_config_file(Command command, const std::filesystem::path& path);

/// Re-derives `resolved` after command-line overrides.
void refresh_resolved(RunConfig& cfg);

}  // namespace bio::cli
