#include "chac/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "chac/error.hpp"

namespace chac {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && in_str) {
      ++i;
      continue;
    }
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

class ValueParser {
 public:
  ValueParser(const std::string& text, const std::string& where) : s_(text), where_(where) {}

  ConfigValue parse() {
    ConfigValue v;
    skip();
    if (peek() == '[') {
      ++pos_;
      std::vector<ConfigValue::Scalar> items;
      skip();
      if (peek() == ']') {
        ++pos_;
      } else {
        for (;;) {
          items.push_back(scalar());
          skip();
          if (peek() == ',') {
            ++pos_;
            skip();
            if (peek() == ']') {
              ++pos_;
              break;
            }
            continue;
          }
          if (peek() == ']') {
            ++pos_;
            break;
          }
          error("expected ',' or ']' in array");
        }
      }
      v.data = std::move(items);
    } else {
      v.data = scalar();
    }
    skip();
    if (pos_ != s_.size()) error("unexpected trailing characters");
    return v;
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void error(const std::string& what) const { throw ConfigError(where_ + ": " + what); }

  ConfigValue::Scalar scalar() {
    skip();
    if (peek() == '"') {
      ++pos_;
      std::string out;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
          const char c = s_[++pos_];
          out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
        } else {
          out += s_[pos_];
        }
        ++pos_;
      }
      if (peek() != '"') error("unterminated string");
      ++pos_;
      return out;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '-' || s_[pos_] == '+' || s_[pos_] == '_'))
      ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
    if (tok.empty()) error("expected a value");
    char* end = nullptr;
    const double d = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(d)) error("invalid value '" + tok + "'");
    return d;
  }

  const std::string& s_;
  std::string where_;
  std::size_t pos_ = 0;
};

}  // namespace

ConfigDocument ConfigDocument::parse(const std::string& text, const std::string& origin) {
  ConfigDocument doc;
  doc.origin_ = origin;
  doc.text_ = text;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  doc.sections_[""];
  std::set<std::string> headers;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      for (char c : section)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
          throw ConfigError(where + ": invalid section name '" + section + "'");
      if (!headers.insert(section).second)
        throw ConfigError(where + ": duplicate section [" + section + "]");
      doc.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": missing key");
    for (char c : key)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
        throw ConfigError(where + ": invalid key '" + key + "'");
    auto& sec = doc.sections_[section];
    if (sec.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    const std::string value_text = trim(line.substr(eq + 1));
    ConfigValue v = ValueParser(value_text, where).parse();
    v.line = lineno;
    sec.emplace(key, std::move(v));
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool ConfigDocument::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

const ConfigValue& ConfigDocument::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key))
    throw ConfigError(origin_ + ": missing required key '" + key + "' in [" + section + "]");
  used_[section][key] = true;
  return s->second.at(key);
}

void ConfigDocument::fail(const ConfigValue& v, const std::string& section, const std::string& key,
                          const std::string& what) const {
  throw ConfigError(origin_ + ":" + std::to_string(v.line) + ": [" + section + "] " + key + " " + what);
}

std::string ConfigDocument::get_string(const std::string& section, const std::string& key) const {
  const auto& v = find(section, key);
  if (auto* s = std::get_if<ConfigValue::Scalar>(&v.data))
    if (auto* str = std::get_if<std::string>(s)) return *str;
  fail(v, section, key, "must be a string");
}

double ConfigDocument::get_number(const std::string& section, const std::string& key) const {
  const auto& v = find(section, key);
  if (auto* s = std::get_if<ConfigValue::Scalar>(&v.data))
    if (auto* d = std::get_if<double>(s)) return *d;
  fail(v, section, key, "must be a number");
}

int ConfigDocument::get_int(const std::string& section, const std::string& key) const {
  const double d = get_number(section, key);
  if (d != std::floor(d) || std::abs(d) > 1e9) fail(find(section, key), section, key, "must be an integer");
  return static_cast<int>(d);
}

bool ConfigDocument::get_bool(const std::string& section, const std::string& key) const {
  const auto& v = find(section, key);
  if (auto* s = std::get_if<ConfigValue::Scalar>(&v.data))
    if (auto* b = std::get_if<bool>(s)) return *b;
  fail(v, section, key, "must be true or false");
}

std::vector<std::string> ConfigDocument::get_strings(const std::string& section, const std::string& key) const {
  const auto& v = find(section, key);
  auto* arr = std::get_if<std::vector<ConfigValue::Scalar>>(&v.data);
  if (!arr) fail(v, section, key, "must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : *arr) {
    auto* str = std::get_if<std::string>(&s);
    if (!str) fail(v, section, key, "must be an array of strings");
    out.push_back(*str);
  }
  return out;
}

std::vector<double> ConfigDocument::get_numbers(const std::string& section, const std::string& key) const {
  const auto& v = find(section, key);
  if (auto* s = std::get_if<ConfigValue::Scalar>(&v.data))
    if (auto* d = std::get_if<double>(s)) return {*d};
  auto* arr = std::get_if<std::vector<ConfigValue::Scalar>>(&v.data);
  if (!arr) fail(v, section, key, "must be an array of numbers");
  std::vector<double> out;
  for (const auto& s : *arr) {
    auto* d = std::get_if<double>(&s);
    if (!d) fail(v, section, key, "must be an array of numbers");
    out.push_back(*d);
  }
  return out;
}

std::string ConfigDocument::get_string(const std::string& section, const std::string& key,
                                       const std::string& def) const {
  return has(section, key) ? get_string(section, key) : def;
}
double ConfigDocument::get_number(const std::string& section, const std::string& key, double def) const {
  return has(section, key) ? get_number(section, key) : def;
}
int ConfigDocument::get_int(const std::string& section, const std::string& key, int def) const {
  return has(section, key) ? get_int(section, key) : def;
}
bool ConfigDocument::get_bool(const std::string& section, const std::string& key, bool def) const {
  return has(section, key) ? get_bool(section, key) : def;
}

std::vector<std::string> ConfigDocument::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [sec, keys] : sections_)
    for (const auto& [key, v] : keys) {
      auto s = used_.find(sec);
      if (s == used_.end() || !s->second.count(key)) out.push_back((sec.empty() ? "" : sec + ".") + key);
    }
  return out;
}

// ------------------------------------------------------------ stages

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::simulate: return "simulate";
    case Stage::linearize: return "linearize";
    case Stage::measure: return "measure";
    case Stage::invert: return "invert";
    case Stage::report: return "report";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : {Stage::simulate, Stage::linearize, Stage::measure, Stage::invert, Stage::report})
    if (name == stage_name(s)) return s;
  throw ConfigError("unknown stage '" + name + "' (expected simulate, linearize, measure, invert or report)");
}

std::vector<Stage> parse_stages(const std::vector<std::string>& names) {
  std::vector<Stage> out;
  for (const auto& n : names) out.push_back(parse_stage(trim(n)));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  const ConfigDocument doc = ConfigDocument::load(path);
  ExperimentConfig c;
  c.config_path = path;
  c.config_text = doc.text();
  const auto base = path.parent_path();

  c.dim = doc.get_int("grid", "dim", 1);
  c.points = doc.get_int("grid", "points", 128);
  try {
    PeriodicGrid probe(c.dim, c.points);
  } catch (const InvalidInput& e) {
    throw ConfigError(path.string() + ": [grid] " + e.what());
  }

  c.solver.dt = doc.get_number("solver", "dt");
  c.solver.final_time = doc.get_number("solver", "final_time");
  const std::string scheme = doc.get_string("solver", "scheme", "imex1");
  if (scheme == "imex1") c.solver.scheme = Scheme::imex1;
  else if (scheme == "imex2") c.solver.scheme = Scheme::imex2;
  else throw ConfigError(path.string() + ": [solver] scheme must be \"imex1\" or \"imex2\"");
  c.solver.dealias = doc.get_bool("solver", "dealias", false);
  if (doc.has("solver", "small_data_delta")) c.solver.small_data_delta = doc.get_number("solver", "small_data_delta");
  if (!(c.solver.dt > 0.0) || !(c.solver.final_time >= c.solver.dt))
    throw ConfigError(path.string() + ": [solver] needs 0 < dt <= final_time");

  const std::string model = doc.get_string("model", "manifest");
  c.model_path = std::filesystem::path(model).is_absolute() ? std::filesystem::path(model) : base / model;

  if (doc.has("simulate", "initial")) {
    c.initial = doc.get_strings("simulate", "initial");
    if (c.initial.size() != 4) throw ConfigError(path.string() + ": [simulate] initial needs four expressions");
  }
  if (doc.has("simulate", "record_times")) c.record_times = doc.get_numbers("simulate", "record_times");

  c.seeds = doc.get_strings("experiment", "seeds");
  if (c.seeds.empty()) throw ConfigError(path.string() + ": [experiment] seeds must not be empty");
  c.orders = doc.get_int("experiment", "orders", 1);
  c.times = doc.get_numbers("experiment", "times");
  c.noise_sigma = doc.get_number("experiment", "noise_sigma", 0.0);
  const double rs = doc.get_number("experiment", "rng_seed", 0.0);
  if (rs < 0.0 || rs != std::floor(rs)) throw ConfigError(path.string() + ": [experiment] rng_seed must be a non-negative integer");
  c.rng_seed = static_cast<std::uint64_t>(rs);
  c.data_dt_factor = doc.get_int("experiment", "data_dt_factor", 10);
  if (c.orders < 1) throw ConfigError(path.string() + ": [experiment] orders must be at least 1");
  if (c.data_dt_factor < 1) throw ConfigError(path.string() + ": [experiment] data_dt_factor must be at least 1");

  const std::string mode = doc.get_string("inversion", "mode", "ip1");
  if (mode == "ip1") c.mode = InversionMode::ip1;
  else if (mode == "ip2") c.mode = InversionMode::ip2;
  else if (mode == "fourier") c.mode = InversionMode::fourier;
  else throw ConfigError(path.string() + ": [inversion] mode must be \"ip1\", \"ip2\" or \"fourier\"");
  c.tau = doc.get_number("inversion", "tau", 1e-3);
  c.min_coverage = doc.get_number("inversion", "min_coverage", 0.5);
  c.solvability_tol = doc.get_number("inversion", "solvability_tol", 1e-8);
  c.derivative_bound = doc.get_number("inversion", "derivative_bound", 0.0);
  if (doc.has("inversion", "anchor_point")) {
    c.anchor_point = doc.get_numbers("inversion", "anchor_point");
    c.anchor_value = doc.get_number("inversion", "anchor_value");
  }

  c.stages = parse_stages(doc.get_strings("pipeline", "stages"));
  const std::string out = doc.get_string("pipeline", "output", "chac_out");
  c.output = std::filesystem::path(out).is_absolute() ? std::filesystem::path(out) : base / out;

  const auto unused = doc.unused_keys();
  if (!unused.empty()) {
    std::string msg = path.string() + ": unknown keys:";
    for (const auto& k : unused) msg += " " + k;
    throw ConfigError(msg);
  }
  return c;
}

}  // namespace chac
