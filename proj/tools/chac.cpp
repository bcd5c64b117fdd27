// Command-line driver for the simulation and inversion pipeline.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "chac/config.hpp"
#include "chac/error.hpp"
#include "chac/io.hpp"
#include "chac/pipeline.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int env_jobs() {
  const char* v = std::getenv("CHAC_JOBS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw chac::ConfigError("CHAC_JOBS must be a positive integer");
  return static_cast<int>(n);
}

int validate_potential(const std::string& config, const std::string& manifest, int dim, double radius,
                       double t_max) {
  std::filesystem::path path = manifest;
  if (!config.empty()) {
    const auto cfg = chac::load_experiment(config);
    path = cfg.model_path;
    dim = cfg.dim;
    t_max = cfg.solver.final_time;
  }
  if (path.empty()) throw chac::ConfigError("validate-potential needs --config or --manifest");
  const chac::Model m = chac::io::load_model(path, dim);
  chac::ProbeBox box;
  box.radius = radius;
  box.t_max = t_max;
  box.dim = dim;
  const auto rep = chac::validate_admissible(m.potential, m.coupling, box);
  for (const auto& c : rep.conditions)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
  std::cout << "lipschitz g " << chac::io::format_double(rep.lipschitz_g);
  for (std::size_t i = 0; i < 4; ++i)
    std::cout << ", f" << i << ' ' << chac::io::format_double(rep.lipschitz_f[i]);
  std::cout << '\n' << (rep.ok() ? "admissible" : "not admissible") << '\n';
  return rep.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral solver and coefficient-inversion pipeline for coupled Cahn-Hilliard/Allen-Cahn systems"};
  app.require_subcommand(1);

  std::string config, out, stages, dir, manifest;
  int jobs = 0, dim = 1;
  double radius = 1.0, t_max = 1.0;

  struct Cmd {
    const char* name;
    const char* help;
    std::optional<chac::Stage> stage;
  };
  const std::vector<Cmd> cmds = {
      {"run", "run the stages listed in the config (or --stages)", std::nullopt},
      {"simulate", "nonlinear forward solve", chac::Stage::simulate},
      {"linearize", "linearization cascade of the first seed", chac::Stage::linearize},
      {"measure", "synthetic measurement bundles for every seed", chac::Stage::measure},
      {"invert", "reconstruct the potential from the measurement bundles", chac::Stage::invert},
  };
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config, "experiment config file")->required();
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--jobs", jobs, "maximum concurrent solves (default: CHAC_JOBS or all cores)");
    if (!c.stage) sub->add_option("--stages", stages, "comma-separated stage list overriding the config");
    subs.emplace_back(sub, &c);
  }
  auto* report = app.add_subcommand("report", "summarize an inversion result directory");
  report->add_option("--config", config, "experiment config file (uses its output directory)");
  report->add_option("--dir", dir, "result directory");
  report->add_option("--out", out, "result directory (alias of --dir)");

  auto* validate = app.add_subcommand("validate-potential", "check a model manifest for admissibility");
  validate->add_option("--config", config, "experiment config file");
  validate->add_option("--manifest", manifest, "model manifest JSON");
  validate->add_option("--dim", dim, "spatial dimension for --manifest")->check(CLI::Range(1, 3));
  validate->add_option("--radius", radius, "state probe radius");
  validate->add_option("--t-max", t_max, "time probe extent for --manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (validate->parsed()) return validate_potential(config, manifest, dim, radius, t_max);

    if (report->parsed()) {
      std::filesystem::path target = !dir.empty() ? dir : out;
      if (target.empty()) {
        if (config.empty()) throw chac::ConfigError("report needs --dir or --config");
        target = chac::load_experiment(config).output;
      }
      chac::write_report(target, std::cout);
      return 0;
    }

    for (const auto& [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      const chac::ExperimentConfig cfg = chac::load_experiment(config);
      chac::PipelineOptions opts;
      opts.output = out;
      opts.jobs = jobs > 0 ? jobs : env_jobs();
      if (cmd->stage) opts.stages = {*cmd->stage};
      else if (!stages.empty()) opts.stages = chac::parse_stages(split_list(stages));
      chac::run_pipeline(cfg, opts, std::cout);
      return 0;
    }
  } catch (const chac::StageFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const chac::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
