#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "chac/forward.hpp"
#include "chac/invert.hpp"
#include "chac/linearize.hpp"

namespace chac::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Field CSV: a "# field d=<dim> n=<n> domain=-1,1" header, a column line
/// "# x1,...,value", then one row per grid point in flat order (%.17g).
void write_field_csv(const fs::path& path, const ScalarField& f);
ScalarField read_field_csv(const fs::path& path);

/// Same layout for a 0/1 mask.
void write_mask_csv(const fs::path& path, const GridPtr& grid, const std::vector<char>& mask);
std::vector<char> read_mask_csv(const fs::path& path, const GridPtr& grid);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

/// Model manifest:
///   { "params": {"c1": .., "c2": ..} | {"mobility", "kinetic", "alpha", "beta"},
///     "potential": {"order": n, "g": {"1": <coef>, ...}},
///     "coupling":  {"order": m, "f0": [{"index": [l0,l1,l2,l3], "coef": <coef>}],
///                   "linear": {"1": <coef>}, "fi": {"1": [{"index": .., "coef": ..}]}} }
/// where <coef> is a number or an expression string in x1..x3, t and pi.
Model parse_model(const json& j, int dim);
Model load_model(const fs::path& path, int dim);

/// Output writer that records every file it creates for the manifest.
class ArtifactDir {
 public:
  explicit ArtifactDir(fs::path root);

  const fs::path& root() const noexcept { return root_; }
  fs::path field(const std::string& rel, const ScalarField& f);
  fs::path mask(const std::string& rel, const GridPtr& grid, const std::vector<char>& m);
  fs::path text(const std::string& rel, const std::string& content);
  fs::path json_file(const std::string& rel, const json& j);
  /// Writes manifest.json with the given body plus the sorted artifact list.
  void finish(json body);

 private:
  fs::path prepare(const std::string& rel);
  fs::path root_;
  std::vector<std::string> artifacts_;
};

json trajectory_json(const Trajectory& traj);
void export_trajectory(ArtifactDir& dir, const Trajectory& traj, json body);
void export_cascade(ArtifactDir& dir, const CascadeResult& c, json body);

/// Bundle directory: manifest.json plus seed.csv and per-order, per-time CSVs.
void export_bundle(ArtifactDir& dir, const MeasurementBundle& b, json body);
MeasurementBundle import_bundle(const fs::path& dir);

/// Fixed formatting helper for summary tables.
std::string format_double(double v);

}  // namespace chac::io
