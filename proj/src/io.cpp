#include "chac/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chac/error.hpp"

namespace chac::io {

namespace {

std::string header_line(const PeriodicGrid& g) {
  std::ostringstream h;
  h << "# field d=" << g.dim() << " n=" << g.points_per_axis() << " domain=-1,1";
  return h.str();
}

std::string columns_line(const PeriodicGrid& g, const char* value_name) {
  std::string s = "# ";
  for (int a = 0; a < g.dim(); ++a) s += "x" + std::to_string(a + 1) + ",";
  return s + value_name;
}

void write_rows(const fs::path& path, const PeriodicGrid& g, const char* value_name,
                const std::function<std::string(std::size_t)>& value) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << header_line(g) << '\n' << columns_line(g, value_name) << '\n';
  double x[3];
  char buf[64];
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.point(i, x);
    for (int a = 0; a < g.dim(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g,", x[a]);
      out << buf;
    }
    out << value(i) << '\n';
  }
  if (!out) throw ConfigError("failed writing " + path.string());
}

struct CsvData {
  GridPtr grid;
  std::vector<double> values;
};

CsvData read_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty field file");
  int d = 0, n = 0;
  if (std::sscanf(line.c_str(), "# field d=%d n=%d", &d, &n) != 2)
    throw ConfigError(path.string() + ": missing field header");
  GridPtr grid;
  try {
    grid = PeriodicGrid::make(d, n);
  } catch (const InvalidInput& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  CsvData data{grid, {}};
  data.values.reserve(grid->size());
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.rfind(',');
    const std::string cell = pos == std::string::npos ? line : line.substr(pos + 1);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str()) throw ConfigError(path.string() + ": malformed row '" + line + "'");
    data.values.push_back(v);
  }
  if (data.values.size() != grid->size()) throw ConfigError(path.string() + ": row count does not match the grid");
  return data;
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CoefficientField parse_coef(const json& v, int dim) {
  if (v.is_number()) return CoefficientField::constant(v.get<double>());
  if (v.is_string()) {
    try {
      return CoefficientField::expression(v.get<std::string>(), dim);
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("bad coefficient expression: ") + e.what());
    }
  }
  throw ConfigError("coefficient must be a number or an expression string");
}

MultiIndex parse_index(const json& v) {
  if (!v.is_array() || v.size() != 4) throw ConfigError("multi-index must be an array of four integers");
  MultiIndex m{};
  for (std::size_t k = 0; k < 4; ++k) {
    if (!v[k].is_number_integer() || v[k].get<int>() < 0) throw ConfigError("multi-index entries must be non-negative integers");
    m[k] = v[k].get<int>();
  }
  return m;
}

int parse_slot(const std::string& key, int lo, int hi, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(key, &used);
    if (used == key.size() && v >= lo && v <= hi) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("invalid ") + what + " key '" + key + "'");
}

}  // namespace

void write_field_csv(const fs::path& path, const ScalarField& f) {
  write_rows(path, f.grid(), "value", [&](std::size_t i) { return g17(f[i]); });
}

ScalarField read_field_csv(const fs::path& path) {
  CsvData d = read_rows(path);
  return ScalarField(d.grid, std::move(d.values));
}

void write_mask_csv(const fs::path& path, const GridPtr& grid, const std::vector<char>& mask) {
  write_rows(path, *grid, "mask", [&](std::size_t i) { return mask[i] ? std::string("1") : std::string("0"); });
}

std::vector<char> read_mask_csv(const fs::path& path, const GridPtr& grid) {
  CsvData d = read_rows(path);
  if (!(*d.grid == *grid)) throw ConfigError(path.string() + ": mask grid mismatch");
  std::vector<char> m(d.values.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = d.values[i] != 0.0 ? 1 : 0;
  return m;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Model parse_model(const json& j, int dim) {
  try {
    Model m;
    const json& p = j.at("params");
    try {
      if (p.contains("mobility"))
        m.params = SystemParams::from_physical(p.at("mobility").get<double>(), p.at("kinetic").get<double>(),
                                               p.at("alpha").get<double>(), p.at("beta").get<double>());
      else
        m.params = SystemParams(p.at("c1").get<double>(), p.at("c2").get<double>());
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }

    const json& pot = j.at("potential");
    m.potential = PotentialSeries(pot.at("order").get<int>());
    if (pot.contains("g"))
      for (const auto& [key, val] : pot.at("g").items()) {
        const int ell = parse_slot(key, 1, m.potential.order(), "potential order");
        m.potential.set(ell, parse_coef(val, dim));
      }

    const json& cp = j.at("coupling");
    m.coupling = CouplingSeries(cp.at("order").get<int>());
    if (cp.contains("f0"))
      for (const auto& term : cp.at("f0")) m.coupling.set_f0(parse_index(term.at("index")), parse_coef(term.at("coef"), dim));
    if (cp.contains("linear"))
      for (const auto& [key, val] : cp.at("linear").items())
        m.coupling.set_linear(parse_slot(key, 1, 3, "linear coupling"), parse_coef(val, dim));
    if (cp.contains("fi"))
      for (const auto& [key, terms] : cp.at("fi").items()) {
        const int i = parse_slot(key, 1, 3, "coupling");
        for (const auto& term : terms) m.coupling.set_fi(i, parse_index(term.at("index")), parse_coef(term.at("coef"), dim));
      }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model manifest: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("invalid model manifest: ") + e.what());
  }
}

Model load_model(const fs::path& path, int dim) {
  if (!fs::exists(path)) throw ConfigError("model manifest not found: " + path.string());
  return parse_model(read_json(path), dim);
}

// ------------------------------------------------------------ artifacts

ArtifactDir::ArtifactDir(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw ConfigError("cannot create " + root_.string() + ": " + ec.message());
}

fs::path ArtifactDir::prepare(const std::string& rel) {
  const fs::path p = root_ / rel;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  artifacts_.push_back(rel);
  return p;
}

fs::path ArtifactDir::field(const std::string& rel, const ScalarField& f) {
  const fs::path p = prepare(rel);
  write_field_csv(p, f);
  return p;
}

fs::path ArtifactDir::mask(const std::string& rel, const GridPtr& grid, const std::vector<char>& m) {
  const fs::path p = prepare(rel);
  write_mask_csv(p, grid, m);
  return p;
}

fs::path ArtifactDir::text(const std::string& rel, const std::string& content) {
  const fs::path p = prepare(rel);
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << content;
  return p;
}

fs::path ArtifactDir::json_file(const std::string& rel, const json& j) {
  const fs::path p = prepare(rel);
  write_json(p, j);
  return p;
}

void ArtifactDir::finish(json body) {
  auto list = artifacts_;
  std::sort(list.begin(), list.end());
  body["artifacts"] = list;
  write_json(root_ / "manifest.json", body);
}

json trajectory_json(const Trajectory& traj) {
  json j;
  j["dt"] = traj.dt;
  j["aggregate"] = traj.aggregate;
  j["warnings"] = traj.warnings;
  std::vector<double> times;
  for (const auto& s : traj.snapshots) times.push_back(s.state.time);
  j["times"] = times;
  const DiagnosticsReport d = diagnostics(traj);
  j["diagnostics"] = {{"mass_drift", d.mass_drift},
                      {"max_u0_l2", d.max_u0_l2},
                      {"max_ui_l2", d.max_ui_l2},
                      {"u0_l2_monotone_decreasing", d.u0_l2_monotone_decreasing}};
  return j;
}

void export_trajectory(ArtifactDir& dir, const Trajectory& traj, json body) {
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const auto& s = traj.snapshots[k];
    const std::string tag = "t" + std::to_string(k);
    for (std::size_t f = 0; f < 4; ++f) dir.field("u" + std::to_string(f) + "_" + tag + ".csv", s.state.u[f]);
    dir.field("du0dt_" + tag + ".csv", s.du0_dt);
  }
  std::ostringstream hist;
  hist << "# time mass u0_l2 ui_l2\n";
  for (const auto& h : traj.history)
    hist << g17(h.time) << ' ' << g17(h.mass) << ' ' << g17(h.u0_l2) << ' ' << g17(h.ui_l2) << '\n';
  dir.text("history.dat", hist.str());
  body["trajectory"] = trajectory_json(traj);
  dir.finish(std::move(body));
}

void export_cascade(ArtifactDir& dir, const CascadeResult& c, json body) {
  dir.field("seed.csv", c.seed);
  for (int l = 1; l <= c.order; ++l)
    for (std::size_t k = 0; k < c.times.size(); ++k) {
      const std::string base = "order_" + std::to_string(l) + "/";
      const auto& s = c.at(l, k);
      dir.field(base + "u0_t" + std::to_string(k) + ".csv", s.u0);
      dir.field(base + "du0dt_t" + std::to_string(k) + ".csv", s.du0_dt);
    }
  body["cascade"] = {{"order", c.order},
                     {"dt", c.dt},
                     {"times", c.times},
                     {"vanishing_residual", c.vanishing_residual},
                     {"warnings", c.warnings}};
  dir.finish(std::move(body));
}

void export_bundle(ArtifactDir& dir, const MeasurementBundle& b, json body) {
  dir.field("seed.csv", b.seed);
  for (int l = 1; l <= b.max_order(); ++l)
    for (std::size_t k = 0; k < b.times.size(); ++k) {
      const std::string base = "order_" + std::to_string(l) + "/";
      const auto& s = b.at(l, k);
      dir.field(base + "u0_t" + std::to_string(k) + ".csv", s.u0);
      dir.field(base + "du0dt_t" + std::to_string(k) + ".csv", s.du0_dt);
    }
  json bundle = {{"experiment_id", b.experiment_id}, {"times", b.times}, {"orders", b.max_order()}};
  if (b.noise)
    bundle["noise"] = {{"sigma", b.noise->sigma}, {"seed", b.noise->seed}};
  else
    bundle["noise"] = nullptr;
  body["bundle"] = bundle;
  dir.finish(std::move(body));
}

MeasurementBundle import_bundle(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  try {
    const json& b = m.at("bundle");
    MeasurementBundle out;
    out.experiment_id = b.at("experiment_id").get<std::string>();
    out.times = b.at("times").get<std::vector<double>>();
    out.seed = read_field_csv(dir / "seed.csv");
    const int orders = b.at("orders").get<int>();
    out.orders.assign(static_cast<std::size_t>(orders), {});
    for (int l = 1; l <= orders; ++l)
      for (std::size_t k = 0; k < out.times.size(); ++k) {
        const fs::path base = dir / ("order_" + std::to_string(l));
        OrderSnapshot s;
        s.time = out.times[k];
        s.u0 = read_field_csv(base / ("u0_t" + std::to_string(k) + ".csv"));
        s.du0_dt = read_field_csv(base / ("du0dt_t" + std::to_string(k) + ".csv"));
        out.orders[static_cast<std::size_t>(l - 1)].push_back(std::move(s));
      }
    if (!b.at("noise").is_null())
      out.noise = NoiseRecord{b["noise"].at("sigma").get<double>(), b["noise"].at("seed").get<std::uint64_t>()};
    out.validate();
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(dir.string() + ": corrupt bundle manifest: " + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(dir.string() + ": inconsistent bundle: " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

}  // namespace chac::io
