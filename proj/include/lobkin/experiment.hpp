#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// JSON-configured experiment runner behind the command-line tool.
namespace lobkin::experiment {

inline constexpr const char* kCommands[] = {"simulate", "solve", "binned", "strategy", "equilibrium"};

struct RunOptions {
  std::string command;
  std::string config_json;  // a config object, or a manifest written by an earlier run
  std::filesystem::path out_dir;  // empty: outputs.dir from the config, else "out"
  std::optional<std::uint64_t> seed;  // overrides the config
  int sweep = 0;  // > 0 runs that many consecutive seeds in parallel
};

struct RunSummary {
  std::string config_hash;
  std::vector<std::string> outputs;  // relative to out_dir, manifest last
  double wall_seconds = 0.0;
};

// Throws Error with ErrorCode::Config for schema problems, other codes for runtime failures.
RunSummary run_experiment(const RunOptions& options);

std::string read_text_file(const std::filesystem::path& path);

// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

// Worker threads for sweeps: LOBKIN_THREADS if set and positive, else the hardware count.
unsigned sweep_threads();

}  // namespace lobkin::experiment
