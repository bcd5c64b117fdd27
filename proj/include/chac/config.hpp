#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chac/forward.hpp"

namespace chac {

/// Parsed value of the TOML subset: strings, numbers, booleans and flat
/// single-line arrays of those.
struct ConfigValue {
  using Scalar = std::variant<std::string, double, bool>;
  std::variant<Scalar, std::vector<Scalar>> data;
  int line = 0;
};

/// Sections of key/value pairs; keys before any [section] live in "".
///
/// Grammar, one statement per line:
///   [section]
///   key = "string" | number | true | false | [v1, v2, ...]
/// `#` starts a comment outside strings. Keys are [A-Za-z0-9_-]+.
class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigDocument load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  double get_number(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& section, const std::string& key) const;
  std::vector<double> get_numbers(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key, const std::string& def) const;
  double get_number(const std::string& section, const std::string& key, double def) const;
  int get_int(const std::string& section, const std::string& key, int def) const;
  bool get_bool(const std::string& section, const std::string& key, bool def) const;

  /// Reports keys never read through the getters (typo guard).
  std::vector<std::string> unused_keys() const;
  const std::string& origin() const noexcept { return origin_; }
  const std::string& text() const noexcept { return text_; }

 private:
  const ConfigValue& find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const ConfigValue& v, const std::string& section, const std::string& key,
                         const std::string& what) const;

  std::string origin_;
  std::string text_;
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
  mutable std::map<std::string, std::map<std::string, bool>> used_;
};

enum class Stage { simulate, linearize, measure, invert, report };

const char* stage_name(Stage s);
Stage parse_stage(const std::string& name);
/// Sorted, duplicate-free; throws ConfigError on an unknown name.
std::vector<Stage> parse_stages(const std::vector<std::string>& names);

enum class InversionMode { ip1, ip2, fourier };

struct ExperimentConfig {
  std::filesystem::path config_path;
  std::string config_text;

  int dim = 1;
  int points = 128;
  SolverConfig solver;
  std::filesystem::path model_path;

  std::vector<std::string> initial;  ///< four expressions for simulate
  std::vector<double> record_times;

  std::vector<std::string> seeds;
  int orders = 1;
  std::vector<double> times;
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;
  int data_dt_factor = 10;

  InversionMode mode = InversionMode::ip1;
  double tau = 1e-3;
  double min_coverage = 0.5;
  double solvability_tol = 1e-8;
  double derivative_bound = 0.0;
  std::optional<std::vector<double>> anchor_point;
  std::optional<double> anchor_value;

  std::vector<Stage> stages;
  std::filesystem::path output;
};

/// Reads an experiment config; relative model paths resolve against the
/// config file's directory. Throws ConfigError with file and line context.
ExperimentConfig load_experiment(const std::filesystem::path& path);

}  // namespace chac
