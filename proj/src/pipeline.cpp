#include "chac/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <ostream>
#include <sstream>
#include <thread>

#include "chac/error.hpp"
#include "chac/invert.hpp"
#include "chac/io.hpp"

namespace chac {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json base_body(const ExperimentConfig& cfg, Stage stage) {
  return {{"stage", stage_name(stage)}, {"code_version", kCodeVersion}, {"config", cfg.config_text}};
}

ScalarField expression_field(const std::string& text, const GridPtr& grid) {
  try {
    return CoefficientField::expression(text, grid->dim()).on_grid(grid, 0.0);
  } catch (const InvalidInput& e) {
    throw ConfigError("bad expression '" + text + "': " + e.what());
  }
}

ScalarField truth_at(const Model& truth, int ell, const GridPtr& grid, double t) {
  const auto* c = ell <= truth.potential.order() ? truth.potential.coefficient(ell) : nullptr;
  return c ? c->on_grid(grid, t) : ScalarField(grid, 0.0);
}

double masked_relative_error(const ScalarField& est, const ScalarField& truth, const std::vector<char>& mask) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (!mask[i]) continue;
    num += (est[i] - truth[i]) * (est[i] - truth[i]);
    den += truth[i] * truth[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num * est.grid().cell_volume());
}

double masked_max_error(const ScalarField& est, const ScalarField& truth, const std::vector<char>& mask) {
  double m = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i)
    if (mask[i]) m = std::max(m, std::abs(est[i] - truth[i]));
  return m;
}

double coverage(const std::vector<char>& mask) {
  std::size_t c = 0;
  for (char v : mask) c += v ? 1 : 0;
  return mask.empty() ? 0.0 : static_cast<double>(c) / static_cast<double>(mask.size());
}

std::size_t nearest_point(const PeriodicGrid& g, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != g.dim()) throw ConfigError("anchor_point needs one coordinate per dimension");
  std::size_t flat = 0;
  const int n = g.points_per_axis();
  for (int a = 0; a < g.dim(); ++a) {
    long k = std::lround((x[static_cast<std::size_t>(a)] + 1.0) / g.spacing());
    k = ((k % n) + n) % n;
    flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(k);
  }
  return flat;
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string experiment_id(std::size_t k) { return "exp" + std::to_string(k); }

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void finish_stage(io::ArtifactDir& dir, json body, const StageTimer& timer) {
  dir.json_file("timings.json", {{"wall_seconds", timer.seconds()}});
  dir.finish(std::move(body));
}

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ------------------------------------------------------------ stages

void stage_simulate(const ExperimentConfig& cfg, const GridPtr& grid, const Model& truth, const fs::path& root,
                    std::ostream& log) {
  StageTimer timer;
  StateVec init = StateVec::zeros(grid);
  if (!cfg.initial.empty()) {
    for (std::size_t f = 0; f < 4; ++f) init.u[f] = expression_field(cfg.initial[f], grid);
  } else {
    init.u[0] = expression_field(cfg.seeds.front(), grid) * 1e-2;
  }
  SolverConfig sc = cfg.solver;
  sc.record_times = cfg.record_times;
  const Trajectory traj = solve_forward(init, truth, sc);
  for (const auto& w : traj.warnings) log << "  warning: " << w << '\n';
  io::ArtifactDir dir(root / "simulate");
  json body = base_body(cfg, Stage::simulate);
  dir.json_file("timings.json", {{"wall_seconds", timer.seconds()}});
  io::export_trajectory(dir, traj, std::move(body));
  log << "  simulate: " << traj.snapshots.size() << " snapshots, aggregate " << io::format_double(traj.aggregate)
      << '\n';
}

void stage_linearize(const ExperimentConfig& cfg, const GridPtr& grid, const Model& truth, const fs::path& root,
                     std::ostream& log) {
  StageTimer timer;
  const ScalarField seed = expression_field(cfg.seeds.front(), grid);
  const CascadeResult c = solve_cascade(seed, truth, cfg.orders, cfg.times, cfg.solver);
  for (const auto& w : c.warnings) log << "  warning: " << w << '\n';
  io::ArtifactDir dir(root / "linearize");
  json body = base_body(cfg, Stage::linearize);
  body["seed"] = cfg.seeds.front();
  dir.json_file("timings.json", {{"wall_seconds", timer.seconds()}});
  io::export_cascade(dir, c, std::move(body));
  log << "  linearize: orders 1.." << c.order << ", vanishing residual " << io::format_double(c.vanishing_residual)
      << '\n';
}

void stage_measure(const ExperimentConfig& cfg, const GridPtr& grid, const Model& truth, const fs::path& root,
                   int jobs, std::ostream& log) {
  StageTimer timer;
  SolverConfig data_cfg = cfg.solver;
  data_cfg.dt = cfg.solver.dt / cfg.data_dt_factor;

  const std::size_t K = cfg.seeds.size();
  std::vector<MeasurementBundle> bundles(K);
  const std::size_t limit = static_cast<std::size_t>(resolve_jobs(jobs));
  for (std::size_t start = 0; start < K; start += limit) {
    std::vector<std::future<MeasurementBundle>> pending;
    for (std::size_t k = start; k < std::min(K, start + limit); ++k) {
      std::optional<NoiseRecord> noise;
      if (cfg.noise_sigma > 0.0) noise = NoiseRecord{cfg.noise_sigma, cfg.rng_seed + k};
      const ScalarField seed = expression_field(cfg.seeds[k], grid);
      pending.push_back(std::async(std::launch::async, [&, seed, noise, k] {
        return generate_measurements(truth, seed, cfg.times, cfg.orders, data_cfg, experiment_id(k), noise);
      }));
    }
    for (std::size_t k = start; k < std::min(K, start + limit); ++k) bundles[k] = pending[k - start].get();
  }

  io::ArtifactDir top(root / "measure");
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < K; ++k) {
    io::ArtifactDir dir(root / "measure" / experiment_id(k));
    json body = base_body(cfg, Stage::measure);
    body["seed"] = cfg.seeds[k];
    body["data_dt"] = data_cfg.dt;
    io::export_bundle(dir, bundles[k], std::move(body));
    ids.push_back(experiment_id(k));
  }
  json body = base_body(cfg, Stage::measure);
  body["experiments"] = ids;
  body["data_dt"] = data_cfg.dt;
  finish_stage(top, std::move(body), timer);
  log << "  measure: " << K << " experiment(s) at data dt " << io::format_double(data_cfg.dt) << '\n';
}

std::vector<MeasurementBundle> load_bundles(const fs::path& root) {
  const fs::path mdir = root / "measure";
  if (!fs::exists(mdir / "manifest.json"))
    throw ConfigError("no measurement bundles in " + mdir.string() + "; run the measure stage first");
  const json m = io::read_json(mdir / "manifest.json");
  std::vector<MeasurementBundle> out;
  try {
    for (const auto& id : m.at("experiments")) out.push_back(io::import_bundle(mdir / id.get<std::string>()));
  } catch (const json::exception& e) {
    throw ConfigError(mdir.string() + ": corrupt manifest: " + e.what());
  }
  if (out.empty()) throw ConfigError("measurement manifest lists no experiments");
  return out;
}

void stage_invert(const ExperimentConfig& cfg, const GridPtr& grid, const Model& truth, const fs::path& root,
                  std::ostream& log) {
  StageTimer timer;
  const auto bundles = load_bundles(root);
  Model known = truth;
  known.potential = PotentialSeries(std::max(truth.potential.order(), cfg.orders));

  ReconstructOptions opts;
  opts.tau = cfg.tau;
  opts.min_coverage = cfg.min_coverage;
  opts.solvability_tol = cfg.solvability_tol;
  std::optional<Anchor> anchor;
  if (cfg.anchor_point) anchor = Anchor{nearest_point(*grid, *cfg.anchor_point), *cfg.anchor_value};

  io::ArtifactDir dir(root / "invert");
  json body = base_body(cfg, Stage::invert);
  json results = json::array();
  std::ostringstream table;

  const int orders = std::min(cfg.orders, bundles.front().max_order());
  if (cfg.mode == InversionMode::fourier) {
    const auto& b = bundles.front();
    const auto* c1000 = truth.coupling.f0_pure(1);
    const double c1000v = c1000 ? c1000->constant_value().value_or(std::nan("")) : 0.0;
    if (std::isnan(c1000v)) throw ConfigError("closed-form inversion needs a constant c_1000 coupling");
    const double t1 = b.times.front();
    const ConstantFourierResult r =
        reconstruct_constant_fourier(b.seed, b.at(1, 0).u0, t1, truth.params.c1, c1000v);
    const ScalarField tr = truth_at(truth, 1, grid, t1);
    const double true_value = tr.mean();
    table << "# mode value truth abs_error spread modes_used\n"
          << "fourier " << g17(r.value) << ' ' << g17(true_value) << ' ' << g17(std::abs(r.value - true_value))
          << ' ' << g17(r.spread) << ' ' << r.modes_used << '\n';
    results.push_back({{"order", 1},
                       {"time", t1},
                       {"value", r.value},
                       {"truth", true_value},
                       {"abs_error", std::abs(r.value - true_value)},
                       {"xi1", r.xi1},
                       {"spread", r.spread},
                       {"modes_used", r.modes_used}});
    log << "  invert (fourier): g1 = " << io::format_double(r.value) << '\n';
  } else if (cfg.mode == InversionMode::ip1) {
    table << "# order time rel_l2_error coverage solvability_defect fit_residual\n";
    for (int ell = 1; ell <= orders; ++ell) {
      const ReconstructionResult r = reconstruct_single_shot(ell, bundles, 0, known, opts, anchor);
      const ScalarField tr = truth_at(truth, ell, grid, r.time);
      const double err = masked_relative_error(r.estimate, tr, r.mask);
      const std::string tag = std::to_string(ell);
      dir.field("g" + tag + ".csv", r.estimate);
      dir.field("g" + tag + "_true.csv", tr);
      dir.mask("mask" + tag + ".csv", grid, r.mask);
      table << ell << ' ' << g17(r.time) << ' ' << g17(err) << ' ' << g17(coverage(r.mask)) << ' '
            << g17(r.solvability_defect) << ' ' << g17(r.fit_residual) << '\n';
      results.push_back({{"order", ell},
                         {"time", r.time},
                         {"rel_l2_error", err},
                         {"coverage", coverage(r.mask)},
                         {"gauge_constants", r.gauge_constants},
                         {"experiments", r.experiment_ids},
                         {"solvability_defect", r.solvability_defect},
                         {"fit_residual", r.fit_residual}});
      known.potential.set(ell, CoefficientField::sampled({r.time}, {r.estimate}, "reconstructed g" + tag));
      log << "  invert (ip1): order " << ell << " relative L2 error " << io::format_double(err) << '\n';
    }
  } else {
    table << "# order time rel_l2_error max_abs_error\n";
    const double T = cfg.solver.final_time;
    for (int ell = 1; ell <= orders; ++ell) {
      const TimeDependentResult r =
          reconstruct_time_dependent(ell, bundles, known, cfg.derivative_bound, T, opts, anchor);
      json failed = json::array();
      for (const auto& [t, why] : r.failed) failed.push_back({{"time", t}, {"reason", why}});
      if (r.nodes.empty()) throw IllPosed("order-" + std::to_string(ell) + " reconstruction failed at every time");
      const std::string tag = std::to_string(ell);
      std::vector<ScalarField> estimates;
      json per_time = json::array();
      for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        const auto& pt = r.per_time[k];
        const ScalarField tr = truth_at(truth, ell, grid, pt.time);
        const double err = masked_relative_error(pt.estimate, tr, pt.mask);
        const double mx = masked_max_error(pt.estimate, tr, pt.mask);
        dir.field("g" + tag + "_t" + std::to_string(k) + ".csv", pt.estimate);
        table << ell << ' ' << g17(pt.time) << ' ' << g17(err) << ' ' << g17(mx) << '\n';
        per_time.push_back({{"time", pt.time}, {"rel_l2_error", err}, {"max_abs_error", mx},
                            {"gauge_constants", pt.gauge_constants}});
        estimates.push_back(pt.estimate);
      }
      double max_q = 0.0;
      const int samples = 200;
      for (int s = 0; s <= samples; ++s) {
        const double t = T * s / samples;
        max_q = std::max(max_q, masked_max_error(r.evaluate(t), truth_at(truth, ell, grid, t), r.mask));
      }
      dir.mask("mask" + tag + ".csv", grid, r.mask);
      table << "# order " << ell << " max_over_Q_error " << g17(max_q) << " remainder_bound "
            << g17(r.remainder_bound) << '\n';
      results.push_back({{"order", ell},
                         {"nodes", r.nodes},
                         {"per_time", per_time},
                         {"failed", failed},
                         {"coverage", coverage(r.mask)},
                         {"max_over_Q_error", max_q},
                         {"derivative_bound", cfg.derivative_bound},
                         {"remainder_bound", r.remainder_bound}});
      known.potential.set(ell, CoefficientField::sampled(r.nodes, estimates, "interpolated g" + tag));
      log << "  invert (ip2): order " << ell << " max error over Q " << io::format_double(max_q)
          << ", remainder bound " << io::format_double(r.remainder_bound) << '\n';
    }
  }
  dir.text("errors.dat", table.str());
  const char* mode = cfg.mode == InversionMode::ip1 ? "ip1" : cfg.mode == InversionMode::ip2 ? "ip2" : "fourier";
  body["inversion"] = {{"mode", mode}, {"results", results}, {"tau", cfg.tau}};
  finish_stage(dir, std::move(body), timer);
}

int exit_code_for(const std::exception_ptr& p) {
  try {
    std::rethrow_exception(p);
  } catch (const Error&) {
    return 1;
  } catch (...) {
    return 2;
  }
}

}  // namespace

void write_report(const fs::path& dir, std::ostream& out) {
  fs::path inv = dir / "invert" / "manifest.json";
  fs::path report_dir = dir / "report";
  if (!fs::exists(inv)) {
    inv = dir / "manifest.json";
    report_dir = dir.parent_path() / "report";
  }
  if (!fs::exists(inv)) throw ConfigError("no result manifest found in " + dir.string());
  const json m = io::read_json(inv);
  StageTimer timer;
  std::ostringstream s, tab;
  try {
    const json& inversion = m.at("inversion");
    const std::string mode = inversion.at("mode").get<std::string>();
    s << "inversion mode: " << mode << '\n';
    if (mode == "fourier") {
      tab << "# order value truth abs_error spread\n";
      for (const auto& r : inversion.at("results")) {
        s << "  g1 estimate " << io::format_double(r.at("value").get<double>()) << ", truth "
          << io::format_double(r.at("truth").get<double>()) << ", abs error "
          << io::format_double(r.at("abs_error").get<double>()) << ", cross-mode spread "
          << io::format_double(r.at("spread").get<double>()) << '\n';
        tab << 1 << ' ' << g17(r.at("value").get<double>()) << ' ' << g17(r.at("truth").get<double>()) << ' '
            << g17(r.at("abs_error").get<double>()) << ' ' << g17(r.at("spread").get<double>()) << '\n';
      }
    } else if (mode == "ip1") {
      tab << "# order rel_l2_error coverage solvability_defect fit_residual\n";
      for (const auto& r : inversion.at("results")) {
        const int ell = r.at("order").get<int>();
        s << "  order " << ell << ": relative L2 error " << io::format_double(r.at("rel_l2_error").get<double>())
          << ", mask coverage " << io::format_double(r.at("coverage").get<double>()) << ", solvability defect "
          << io::format_double(r.at("solvability_defect").get<double>()) << ", gauge fit residual "
          << io::format_double(r.at("fit_residual").get<double>()) << '\n';
        tab << ell << ' ' << g17(r.at("rel_l2_error").get<double>()) << ' ' << g17(r.at("coverage").get<double>())
            << ' ' << g17(r.at("solvability_defect").get<double>()) << ' ' << g17(r.at("fit_residual").get<double>())
            << '\n';
      }
    } else if (mode == "ip2") {
      tab << "# order time rel_l2_error max_abs_error\n";
      for (const auto& r : inversion.at("results")) {
        const int ell = r.at("order").get<int>();
        s << "  order " << ell << ": mask coverage " << io::format_double(r.at("coverage").get<double>()) << '\n';
        for (const auto& pt : r.at("per_time")) {
          s << "    t = " << io::format_double(pt.at("time").get<double>()) << ": relative L2 error "
            << io::format_double(pt.at("rel_l2_error").get<double>()) << '\n';
          tab << ell << ' ' << g17(pt.at("time").get<double>()) << ' ' << g17(pt.at("rel_l2_error").get<double>())
              << ' ' << g17(pt.at("max_abs_error").get<double>()) << '\n';
        }
        for (const auto& f : r.at("failed"))
          s << "    t = " << io::format_double(f.at("time").get<double>())
            << ": FAILED (" << f.at("reason").get<std::string>() << ")\n";
        s << "    max error over Q " << io::format_double(r.at("max_over_Q_error").get<double>())
          << ", remainder bound " << io::format_double(r.at("remainder_bound").get<double>()) << " (B = "
          << io::format_double(r.at("derivative_bound").get<double>()) << ")\n";
        tab << "# remainder order " << ell << ' ' << g17(r.at("remainder_bound").get<double>()) << '\n';
      }
    } else {
      throw ConfigError("unknown inversion mode '" + mode + "' in " + inv.string());
    }
  } catch (const json::exception& e) {
    throw ConfigError(inv.string() + ": corrupt manifest: " + e.what());
  }
  out << s.str();
  io::ArtifactDir rd(report_dir);
  rd.text("summary.txt", s.str());
  rd.text("errors.dat", tab.str());
  json body = {{"stage", "report"}, {"code_version", kCodeVersion}, {"source", "invert/manifest.json"}};
  if (m.contains("config")) body["config"] = m["config"];
  finish_stage(rd, std::move(body), timer);
}

void run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& opts, std::ostream& log) {
  const std::vector<Stage> stages = opts.stages.empty() ? cfg.stages : opts.stages;
  const fs::path root = opts.output.empty() ? cfg.output : opts.output;
  const GridPtr grid = PeriodicGrid::make(cfg.dim, cfg.points);

  bool needs_model = false;
  for (Stage s : stages) needs_model = needs_model || s != Stage::report;
  Model truth;
  if (needs_model) truth = io::load_model(cfg.model_path, cfg.dim);

  io::ArtifactDir top(root);
  top.text("config.toml", cfg.config_text);
  std::vector<std::string> names;
  for (Stage s : stages) names.push_back(stage_name(s));
  top.finish({{"code_version", kCodeVersion}, {"config", cfg.config_text}, {"stages", names}});

  for (Stage s : stages) {
    log << "[" << stage_name(s) << "]\n";
    try {
      switch (s) {
        case Stage::simulate: stage_simulate(cfg, grid, truth, root, log); break;
        case Stage::linearize: stage_linearize(cfg, grid, truth, root, log); break;
        case Stage::measure: stage_measure(cfg, grid, truth, root, opts.jobs, log); break;
        case Stage::invert: stage_invert(cfg, grid, truth, root, log); break;
        case Stage::report: write_report(root, log); break;
      }
    } catch (const std::exception& e) {
      throw StageFailure(stage_name(s), exit_code_for(std::current_exception()), e.what());
    }
  }
}

}  // namespace chac
