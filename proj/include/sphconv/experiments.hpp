#pragma once

// Experiment runners behind the command-line subcommands.  Each runner maps
// an ExperimentConfig to a JSON summary with named checks and a set of CSV
// tables; nothing in a summary depends on wall-clock time or output paths.

#include "sphconv/errors.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sphconv {

/// Invalid configuration: unknown key, wrong type, or value out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ExperimentConfig {
  std::string subcommand;
  std::uint64_t seed = 1;
  int n = 3;       // sphere / ball dimension
  double c = 0.1;  // family width
  int N = 32;      // mesh resolution
  double L = 1.0;  // domain side
  double eps = 0.02;
  std::vector<double> eps_list;
  std::vector<int> dims;
  std::vector<int> refinements;
  std::vector<double> radii;
  std::uint64_t samples = 1000;
  std::uint64_t directions = 32;
  double h = 1e-3;
  double v_min = 0.1;
  std::uint64_t phi_count = 64;
  std::uint64_t points_per_phi = 160;
  int runs = 10;
  int interval_N = 256;
  double lambda0 = 5.0;
  double tolerance = 1e-10;
  int max_iterations = 200000;
  std::string scheme = "gauss_seidel";
  double damping = 1.0;
  std::string out_dir = "out";

  /// Defaults of one subcommand. Throws ConfigError for an unknown name.
  static ExperimentConfig defaults(const std::string& subcommand);

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  /// Overrides fields from a JSON object. Unknown keys, type mismatches and a
  /// "subcommand" different from the current one raise ConfigError.
  void merge_json(const nlohmann::json& j);

  /// Every field except out_dir.
  nlohmann::json to_json() const;
};

const std::vector<std::string>& subcommands();

/// Key, kind ("int", "uint", "double", "string", "ints", "doubles")
/// and help text of every configurable field.
struct FieldInfo {
  std::string key;
  std::string kind;
  std::string help;
};
const std::vector<FieldInfo>& config_fields();

struct ExperimentResult {
  std::string subcommand;
  nlohmann::json summary;  // {"subcommand", "config", "results", "checks", "pass"}
  std::map<std::string, std::string> files;  // CSV file name -> contents
  bool pass = false;

  /// True iff every check whose name starts with one of the prefixes passed
  /// (and at least one such check exists).
  bool passed(const std::vector<std::string>& prefixes) const;

  /// Writes summary.json and the CSV files into dir (created if needed).
  void write(const std::filesystem::path& dir) const;
};

/// Runs cfg.subcommand. Library errors propagate.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace sphconv
