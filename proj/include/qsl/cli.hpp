#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qsl/speed_limits.hpp"

namespace qsl::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kUsageError = 1, kBoundViolation = 2 };

struct RunConfig {
  nlohmann::json scenario;
  double t_max = 2.0;
  int points = 400;
  std::optional<double> h_int;
  PerturbedDynamics dynamics = PerturbedDynamics::ExactRebuild;
  std::vector<std::string> reports;
  std::string output_dir = ".";
  std::uint64_t seed = 1;
  int shots = 0;
  int epsilon_samples = 2000;
  int count = 100;
  std::vector<int> dims{2, 3, 4};
};

/// Validates against the version-1 schema. Unknown keys and missing fields
/// raise ConfigError naming the offending path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);
/// Built-in configuration used by a subcommand when no --config is given.
RunConfig default_config(const std::string& command);
nlohmann::json to_json(const RunConfig& c);

/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& c);

/// Shortest decimal that round-trips to the same binary64.
std::string format_double(double x);

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid_points;
  std::optional<double> t_max;
  std::optional<int> shots;
  std::optional<int> count;
  std::optional<std::vector<int>> dims;
  bool quiet = false;
};

/// Runs one subcommand; returns the process exit code.
int execute(const std::string& command, const Overrides& o, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace qsl::cli
