#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "chac/config.hpp"

namespace chac {

inline constexpr const char* kCodeVersion = "chac 0.1.0";

/// A stage threw; `exit_code` is 1 for user-facing errors and 2 otherwise.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(std::string stage, int exit_code, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)), code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return code_; }

 private:
  std::string stage_;
  int code_;
};

struct PipelineOptions {
  std::vector<Stage> stages;  ///< empty: stages from the config
  std::filesystem::path output;  ///< empty: output from the config
  int jobs = 0;                  ///< 0: hardware concurrency
};

/// Runs the requested stages in order, writing one directory per stage under
/// the output root. Each directory holds manifest.json (config echo, code
/// version, artifact list) and a separate timings.json with wall-clock times.
void run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& opts, std::ostream& log);

/// Reads <dir>/invert/manifest.json (or <dir>/manifest.json for an invert
/// directory), prints the summary and writes the report directory next to it.
void write_report(const std::filesystem::path& dir, std::ostream& out);

}  // namespace chac
