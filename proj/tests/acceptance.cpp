// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "chac/error.hpp"
#include "chac/forward.hpp"
#include "chac/invert.hpp"
#include "chac/io.hpp"
#include "chac/linearize.hpp"
#include "chac/potentials.hpp"
#include "chac/spectral.hpp"
#include "support/oracles.hpp"

using namespace chac;
namespace fs = std::filesystem;
using oracle::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

CoefficientField cst(double v) { return CoefficientField::constant(v); }
CoefficientField expr(const std::string& e) { return CoefficientField::expression(e, 1); }

Model ip1_model() { return io::load_model(fs::path(CHAC_CONFIG_DIR) / "ip1_model.json", 1); }

ScalarField field(const GridPtr& g, const std::string& e) {
  const auto c = CoefficientField::expression(e, g->dim());
  return c.on_grid(g, 0.0);
}

double masked_rel_error(const ScalarField& est, const ScalarField& truth, const std::vector<char>& mask) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (!mask[i]) continue;
    num += (est[i] - truth[i]) * (est[i] - truth[i]);
    den += truth[i] * truth[i];
  }
  return std::sqrt(num / den);
}

// ------------------------------------------------------------------ 1

Outcome spectral_suite() {
  Outcome o;
  std::mt19937_64 rng(20240601);
  double roundtrip = 0.0, parseval = 0.0, poisson = 0.0, poisson_oracle = 0.0;
  for (auto [dim, n] : {std::pair{1, 128}, std::pair{2, 64}}) {
    const auto grid = PeriodicGrid::make(dim, n);
    for (int trial = 0; trial < 50; ++trial) {
      const auto tf = oracle::random_trig(dim, n / 2 - 1, 12, rng);
      const ScalarField f = tf.sample(grid);

      const ScalarField back = to_physical(to_spectrum(f));
      double err = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(back[i] - f[i]));
      roundtrip = std::max(roundtrip, err / f.max_abs());

      const Spectrum s = to_spectrum(f);
      double e_phys = 0.0, e_spec = 0.0;
      for (double v : f.values()) e_phys += v * v;
      e_phys /= static_cast<double>(f.size());
      for (const auto& c : s.coefficients()) e_spec += std::norm(c);
      parseval = std::max(parseval, std::abs(e_phys - e_spec) / e_phys);

      // Poisson: the right-hand side is Lap(G*) for a mean-zero trig G*.
      const ScalarField rhs = tf.laplacian_power(1).sample(grid);
      const PoissonSolution sol = solve_poisson_periodic(rhs);
      const ScalarField res = apply_operator(sol.solution, DiffOp::laplacian()) - rhs;
      poisson = std::max(poisson, res.max_abs() / rhs.max_abs());
      ScalarField diff = sol.solution - f;
      poisson_oracle = std::max(poisson_oracle, diff.max_abs() / f.max_abs());
    }
  }
  o.detail << "roundtrip " << sci(roundtrip) << ", Parseval " << sci(parseval) << ", Poisson residual "
           << sci(poisson) << " (vs closed form " << sci(poisson_oracle) << ")";
  o.require(roundtrip <= 1e-12, "roundtrip");
  o.require(parseval <= 1e-10, "Parseval");
  o.require(poisson <= 1e-10 && poisson_oracle <= 1e-10, "Poisson");
  return o;
}

// ------------------------------------------------------------------ 2

// Manufactured solution u0 = e^{-t} cos(pi x), u1 = 0.5 e^{-t} sin(pi x) for
//   g = g1 y + g2 y^2/2, f0 = a z0 + c z0 z1 / 2, f1 = b z1 + d z0 z1 / 2.
struct Mms {
  double c1 = 0.01, c2 = 1.0, g1 = 0.5, g2 = 0.3, a = 1.0, c = 0.5, b = -1.0, d = 0.4;

  Model model() const {
    Model m;
    m.params = SystemParams(c1, c2);
    m.potential = PotentialSeries(2);
    m.potential.set(1, cst(g1)).set(2, cst(g2));
    m.coupling = CouplingSeries(2);
    m.coupling.set_f0({1, 0, 0, 0}, cst(a)).set_f0({1, 1, 0, 0}, cst(c));
    m.coupling.set_linear(1, cst(b)).set_fi(1, {1, 1, 0, 0}, cst(d));
    return m;
  }

  // F = (a + g1) u0 + g2 u0^2 / 2 + c u0 u1 / 2
  //   = e^{-t}(a+g1) cos + g2 e^{-2t}(1 + cos 2pi x)/4 + c e^{-2t} sin(2 pi x)/8
  Sources sources(const GridPtr& grid) const {
    Sources s;
    const Mms p = *this;
    s.u0 = [p, grid](double t) {
      return ScalarField::from_function(grid, [&](std::span<const double> x) {
        const double e1 = std::exp(-t), e2 = std::exp(-2 * t);
        const double cx = std::cos(pi * x[0]), c2x = std::cos(2 * pi * x[0]), s2x = std::sin(2 * pi * x[0]);
        const double dt_u0 = -e1 * cx;
        const double bih = std::pow(pi, 4) * e1 * cx;
        const double lapF = -pi * pi * (p.a + p.g1) * e1 * cx - 4 * pi * pi * p.g2 * e2 * c2x / 4 -
                            4 * pi * pi * p.c * e2 * s2x / 8;
        return dt_u0 + p.c1 * bih - lapF;
      });
    };
    s.ui[0] = [p, grid](double t) {
      return ScalarField::from_function(grid, [&](std::span<const double> x) {
        const double e1 = std::exp(-t), e2 = std::exp(-2 * t);
        const double u1 = 0.5 * e1 * std::sin(pi * x[0]);
        const double lap_u1 = -pi * pi * u1;
        const double f1 = p.b * u1 + p.d * (0.25 * e2 * std::sin(2 * pi * x[0])) / 2;
        return -u1 - p.c2 * lap_u1 - f1;
      });
    };
    return s;
  }
};

Outcome forward_order() {
  Outcome o;
  const auto grid = PeriodicGrid::make(1, 32);
  const Mms mms;
  const Model model = mms.model();
  const double T = 0.1;
  StateVec init = StateVec::zeros(grid);
  init.u[0] = field(grid, "cos(pi*x1)");
  init.u[1] = field(grid, "0.5*sin(pi*x1)");
  const ScalarField ex0 = init.u[0] * std::exp(-T), ex1 = init.u[1] * std::exp(-T);

  double worst_drift = 0.0;
  const std::vector<double> dts = {4e-4, 2e-4, 1e-4};
  for (Scheme scheme : {Scheme::imex1, Scheme::imex2}) {
    std::vector<double> errs;
    for (double dt : dts) {
      SolverConfig cfg;
      cfg.dt = dt;
      cfg.scheme = scheme;
      cfg.final_time = T;
      const Trajectory tr = solve_forward(init, model, cfg, mms.sources(grid));
      const auto& st = tr.snapshots.back().state;
      errs.push_back(l2_norm(st.u[0] - ex0) + l2_norm(st.u[1] - ex1));
      worst_drift = std::max(worst_drift, diagnostics(tr).mass_drift);
    }
    const double slope = oracle::loglog_slope(dts, errs);
    const bool first = scheme == Scheme::imex1;
    o.detail << (first ? "imex1" : ", imex2") << " slope " << sci(slope) << " (errors " << sci(errs[0]) << ".."
             << sci(errs[2]) << ")";
    o.require(slope >= (first ? 0.95 : 1.9), first ? "imex1 slope" : "imex2 slope");
  }
  o.detail << ", max mass drift " << sci(worst_drift);
  o.require(worst_drift <= 1e-10, "mass drift");
  return o;
}

// ------------------------------------------------------------------ 3

Outcome linear_ch_monitor() {
  Outcome o;
  const auto grid = PeriodicGrid::make(1, 128);
  std::mt19937_64 rng(77);

  // discrete energy inequality for b = 0, p = 0
  SolverConfig cfg;
  cfg.dt = 1e-4;
  cfg.final_time = 0.05;
  const ScalarField psi = oracle::random_trig(1, 10, 8, rng, false).sample(grid);
  const auto free = solve_linear_ch(cst(0.0), {}, psi, cfg);
  const auto en = check_energy_inequality(free);
  o.detail << "energy inequality " << (en.holds ? "holds" : "violated") << " (worst step excess "
           << sci(en.worst_step_excess) << ")";
  o.require(en.holds, "energy inequality");

  // weak residual with variable b and a source
  const auto b = expr("0.5 + 0.2*cos(pi*x1)");
  const auto src_coef = CoefficientField::expression("exp(-t)*sin(2*pi*x1)", 1);
  const auto src = [&](double t) { return src_coef.on_grid(grid, t); };
  SolverConfig wcfg;
  wcfg.dt = 1e-4;
  wcfg.final_time = 0.05;
  wcfg.record_times = {0.01, 0.02, 0.03, 0.04, 0.05};
  const auto tr = solve_linear_ch(b, src, psi, wcfg);
  const ScalarField bfield = b.on_grid(grid, 0.0);
  double worst = 0.0;
  for (const auto& snap : tr.snapshots) {
    const ScalarField p = src(snap.time);
    for (int k = 0; k < 20; ++k) {
      const auto tw = oracle::random_trig(1, 8, 4, rng, false);
      const ScalarField w = tw.sample(grid), lw = tw.laplacian_power(1).sample(grid);
      const double a1 = snap.du_dt.inner(w), a2 = snap.v.inner(lw), a3 = (bfield * snap.u).inner(lw),
                   a4 = p.inner(w);
      // Cauchy-Schwarz scale of the four pairings
      const double scale = l2_norm(snap.du_dt) * l2_norm(w) + l2_norm(snap.v) * l2_norm(lw) +
                           l2_norm(bfield * snap.u) * l2_norm(lw) + l2_norm(p) * l2_norm(w);
      const double r = std::abs(a1 + a2 - a3 - a4) / scale;
      worst = std::max(worst, r);
    }
  }
  o.detail << ", weak residual " << sci(worst) << " over " << tr.snapshots.size() << "x20 tests";
  o.require(tr.snapshots.size() == 5 && worst <= 1e-8, "weak residual");

  // eigenmode decay exp(-pi^4 t)
  const ScalarField mode = field(grid, "cos(pi*x1)");
  const double T = 0.02;
  const std::vector<double> dts = {4e-4, 2e-4, 1e-4};
  std::vector<double> errs;
  for (double dt : dts) {
    SolverConfig ec;
    ec.dt = dt;
    ec.final_time = T;
    const auto e = solve_linear_ch(cst(0.0), {}, mode, ec);
    errs.push_back(l2_norm(e.snapshots.back().u - mode * std::exp(-std::pow(pi, 4) * T)) / l2_norm(mode));
  }
  const double slope = oracle::loglog_slope(dts, errs);
  // backward Euler: (1 + lam dt)^{-T/dt} - e^{-lam T} = e^{-lam T} lam^2 T dt / 2 + O(dt^2)
  const double lam = std::pow(pi, 4);
  const double lead = std::exp(-lam * T) * lam * lam * T * dts.back() / 2;
  o.detail << ", eigenmode error " << sci(errs.back()) << " (leading term " << sci(lead) << ") slope "
           << sci(slope);
  o.require(slope > 0.9 && slope < 1.1 && std::abs(errs.back() / lead - 1) < 0.2, "eigenmode decay O(dt)");
  return o;
}

// ------------------------------------------------------------------ 4

std::vector<std::pair<std::string, Model>> admissible_models() {
  std::vector<std::pair<std::string, Model>> out;
  {
    // W(u) = (u^2 - 1)^2 / 4 so g = W' = u^3 - u
    Model m;
    m.params = SystemParams(0.01, 1.0);
    m.potential = PotentialSeries(3);
    m.potential.set(1, cst(-1.0)).set(3, cst(6.0));
    m.coupling = CouplingSeries(3);
    m.coupling.set_f0({1, 0, 0, 0}, cst(0.2)).set_f0({1, 1, 0, 0}, cst(0.5));
    for (int i = 1; i <= 3; ++i) m.coupling.set_linear(i, cst(-1.0));
    m.coupling.set_fi(1, {2, 1, 0, 0}, cst(0.3));
    out.emplace_back("double-well", m);
  }
  out.emplace_back("spatially varying cubic", ip1_model());
  {
    Model m;
    m.params = SystemParams(0.05, 0.5);
    m.potential = PotentialSeries(1);
    m.potential.set(1, expr("1 + 0.5*cos(pi*x1)"));
    m.coupling = CouplingSeries(1);
    out.emplace_back("linear", m);
  }
  {
    Model m;
    m.params = SystemParams(0.01, 1.0);
    m.potential = PotentialSeries(2);
    m.potential.set(1, CoefficientField::expression("cos(t)*(0.5 + 0.2*cos(pi*x1))", 1))
        .set(2, CoefficientField::expression("sin(t)", 1));
    m.coupling = CouplingSeries(2);
    m.coupling.set_linear(2, CoefficientField::expression("-1 - t", 1));
    m.coupling.set_fi(2, {0, 1, 1, 0}, cst(0.2));
    out.emplace_back("time dependent", m);
  }
  {
    Model m;
    m.params = SystemParams(0.02, 2.0);
    m.potential = PotentialSeries(4);
    m.potential.set(1, cst(0.5)).set(2, expr("0.2*sin(pi*x1)")).set(4, cst(-1.0));
    m.coupling = CouplingSeries(4);
    m.coupling.set_f0({1, 0, 0, 0}, cst(1.0)).set_f0({0, 2, 0, 0}, cst(0.3)).set_f0({0, 0, 1, 1}, cst(0.1));
    for (int i = 1; i <= 3; ++i) m.coupling.set_linear(i, cst(-0.5 * i));
    m.coupling.set_fi(1, {1, 0, 1, 1}, cst(0.1)).set_fi(3, {0, 0, 0, 4}, cst(-0.2));
    out.emplace_back("quartic", m);
  }
  return out;
}

Outcome zero_data() {
  Outcome o;
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.scheme = Scheme::imex2;
  const auto grid = PeriodicGrid::make(1, 128);
  double worst = 0.0;
  for (const auto& [name, m] : admissible_models()) {
    const auto rep = validate_admissible(m.potential, m.coupling, ProbeBox{});
    o.require(rep.ok(), name + " admissible");
    const auto chk = zero_uniqueness_check(grid, m, cfg, 0.5);
    worst = std::max(worst, chk.sup_norm);
    o.require(chk.passed && chk.sup_norm <= 1e-12, name + " stays zero");
  }
  const auto grid2 = PeriodicGrid::make(2, 64);
  Model dw = admissible_models().front().second;
  const auto chk2 = zero_uniqueness_check(grid2, dw, cfg, 0.5);
  worst = std::max(worst, chk2.sup_norm);
  o.require(chk2.passed, "double-well on 64^2 stays zero");
  o.detail << "5 admissible models (incl. double-well), sup norm over [0, 0.5] " << sci(worst);
  return o;
}

// ------------------------------------------------------------------ 5

Outcome delta_linearity() {
  Outcome o;
  const auto grid = PeriodicGrid::make(1, 128);
  const Model m = ip1_model();
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.scheme = Scheme::imex2;
  cfg.final_time = 0.1;
  auto aggregate = [&](double delta) {
    StateVec s = StateVec::zeros(grid);
    s.u[0] = field(grid, "1 + cos(pi*x1)") * delta;
    s.u[1] = field(grid, "sin(pi*x1)") * delta;
    s.u[2] = field(grid, "cos(2*pi*x1)") * delta;
    const Trajectory tr = solve_forward(s, m, cfg);
    o.require(diagnostics(tr).mass_drift <= 1e-10, "mass drift");
    return tr.aggregate;
  };
  bool first = true;
  for (double delta : {1e-2, 1e-3}) {
    const double ratio = aggregate(delta) / aggregate(delta / 2);
    o.detail << (first ? "" : ", ") << "delta " << sci(delta) << " ratio " << sci(ratio);
    o.require(std::abs(ratio / 2 - 1) <= 0.1, "halving at delta " + sci(delta));
    first = false;
  }
  return o;
}

// ------------------------------------------------------------------ 6

Outcome cascade() {
  Outcome o;
  const auto grid = PeriodicGrid::make(1, 128);
  const Model m = ip1_model();
  const ScalarField seed = field(grid, "1 + cos(pi*x1)");
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.scheme = Scheme::imex2;
  cfg.final_time = 0.1;

  CascadeResult c;
  try {
    c = solve_cascade(seed, m, 3, {0.1}, cfg);
  } catch (const Error& e) {
    o.require(false, std::string("cascade: ") + e.what());
    return o;
  }
  o.detail << "(a) vanishing " << sci(c.vanishing_residual);
  o.require(c.vanishing_residual <= 1e-10, "vanishing residual");

  o.detail << "; (b) Taylor slopes";
  for (int n : {1, 2}) {
    const auto rep = taylor_consistency_check(seed, m, c, {1e-2, 5e-3, 2.5e-3}, n, 0, cfg);
    if (!rep.slope) {
      o.require(false, "Taylor slope skipped for n=" + std::to_string(n));
      continue;
    }
    o.detail << " n=" << n << ": " << sci(*rep.slope);
    o.require(std::abs(*rep.slope - (n + 1)) <= 0.2, "Taylor slope n=" + std::to_string(n));
  }

  const auto fd = fd_epsilon_probe(seed, m, 1e-2, 3, {0.1}, cfg);
  double worst = 0.0;
  for (int l = 1; l <= 3; ++l)
    worst = std::max(worst, oracle::rel_l2(fd.estimates[static_cast<std::size_t>(l - 1)][0], c.at(l, 0).u0));
  o.detail << "; (c) FD vs cascade " << sci(worst);
  o.require(worst <= 1e-4, "FD agreement");

  // (d) constant coefficients, order 1, per-mode closed form
  Model lin;
  lin.params = SystemParams(0.01, 1.0);
  lin.potential = PotentialSeries(1);
  lin.potential.set(1, cst(1.0));
  lin.coupling = CouplingSeries(1);
  lin.coupling.set_f0({1, 0, 0, 0}, cst(0.5));
  const double T = 0.1, rate_coef = 1.5;
  const Spectrum fs = to_spectrum(seed);
  const std::vector<double> dts = {4e-4, 2e-4, 1e-4};
  std::vector<double> errs;
  for (double dt : dts) {
    SolverConfig lc;
    lc.dt = dt;
    lc.final_time = T;
    const auto cl = solve_cascade(seed, lin, 1, {T}, lc);
    const Spectrum fu = to_spectrum(cl.at(1, 0).u0);
    double err = 0.0;
    for (std::size_t i = 0; i < fu.coefficients().size(); ++i) {
      const double x2 = fu.xi_squared(i);
      const auto exact = fs[i] * std::exp(-(0.01 * x2 * x2 + rate_coef * x2) * T);
      err = std::max(err, std::abs(fu[i] - exact) / std::max(std::abs(fs[i]), 1e-300) *
                              (std::abs(fs[i]) > 1e-12 ? 1.0 : 0.0));
    }
    errs.push_back(err);
  }
  const double slope = oracle::loglog_slope(dts, errs);
  o.detail << "; (d) mode formula error " << sci(errs.back()) << " slope " << sci(slope);
  o.require(slope > 0.9 && slope < 1.1, "mode formula O(dt)");
  return o;
}

// ------------------------------------------------------------------ 7

Outcome ip1_closed_loop() {
  Outcome o;
  const auto grid = PeriodicGrid::make(1, 128);
  const Model truth = ip1_model();
  SolverConfig data;
  data.dt = 1e-3 / 10;
  data.scheme = Scheme::imex2;
  data.final_time = 0.2;
  std::vector<MeasurementBundle> bundles;
  bundles.push_back(generate_measurements(truth, field(grid, "1 + cos(pi*x1)"), {0.2}, 3, data, "exp0"));
  bundles.push_back(generate_measurements(truth, field(grid, "1 + cos(2*pi*x1)"), {0.2}, 3, data, "exp1"));

  Model known = truth;
  known.potential = PotentialSeries(3);
  for (int l = 1; l <= 3; ++l) {
    const auto r = reconstruct_single_shot(l, bundles, 0, known, {});
    const ScalarField g = truth.potential.coefficient(l)->on_grid(grid, 0.2);
    const double err = masked_rel_error(r.estimate, g, r.mask);
    const double tol = l == 1 ? 1e-3 : 5e-3;
    o.detail << (l == 1 ? "" : ", ") << "g" << l << " error " << sci(err);
    o.require(err <= tol, "order " + std::to_string(l));
    known.potential.set(l, CoefficientField::sampled({r.time}, {r.estimate}, "estimate"));
  }
  o.detail << " (two experiments, data dt 1e-4)";
  return o;
}

// ------------------------------------------------------------------ 8

Outcome fourier_formula() {
  Outcome o;
  const auto grid = PeriodicGrid::make(1, 128);
  const ScalarField seed = field(grid, "1 + cos(pi*x1)");

  // exact data from the closed form: g1 = 2, c1 = 1, c1000 = 0, t1 = 0.1
  const double decay = std::exp(-(std::pow(pi, 4) + 2 * pi * pi) * 0.1);
  const ScalarField u1 = field(grid, "1") + field(grid, "cos(pi*x1)") * decay;
  const auto exact = reconstruct_constant_fourier(seed, u1, 0.1, 1.0, 0.0);
  o.detail << "exact-data error " << sci(std::abs(exact.value - 2.0));
  o.require(std::abs(exact.value - 2.0) <= 1e-12, "exact data");

  // pipeline data from the solver
  Model truth;
  truth.params = SystemParams(0.1, 1.0);
  truth.potential = PotentialSeries(1);
  truth.potential.set(1, cst(2.0));
  truth.coupling = CouplingSeries(1);
  truth.coupling.set_f0({1, 0, 0, 0}, cst(0.5));
  SolverConfig cfg;
  cfg.dt = 1e-5;
  cfg.scheme = Scheme::imex2;
  cfg.final_time = 0.1;
  const auto b0 = generate_measurements(truth, seed, {0.1}, 1, cfg, "exp0");
  const auto pipe = reconstruct_constant_fourier(seed, b0.at(1, 0).u0, 0.1, 0.1, 0.5);
  o.detail << ", pipeline error " << sci(std::abs(pipe.value - 2.0));
  o.require(std::abs(pipe.value - 2.0) <= 1e-3, "pipeline");

  const auto b1 = generate_measurements(truth, field(grid, "1 + cos(2*pi*x1)"), {0.1}, 1, cfg, "exp1");
  Model known = truth;
  known.potential = PotentialSeries(1);
  const auto r = reconstruct_single_shot(1, {b0, b1}, 0, known, {});
  double sum = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < r.estimate.size(); ++i)
    if (r.mask[i]) {
      sum += r.estimate[i];
      ++cnt;
    }
  const double pde = sum / static_cast<double>(cnt);
  o.detail << ", PDE route " << sci(pde) << " vs closed form " << sci(pipe.value);
  o.require(std::abs(pde - pipe.value) <= 1e-3, "agreement with PDE route");
  return o;
}

// ------------------------------------------------------------------ 9

Outcome ip2() {
  Outcome o;
  const auto grid = PeriodicGrid::make(1, 64);
  const double T = 0.5;
  Model truth;
  truth.params = SystemParams(0.01, 1.0);
  truth.potential = PotentialSeries(1);
  truth.potential.set(1, CoefficientField::expression("cos(t)*(0.5 + 0.2*cos(pi*x1))", 1));
  truth.coupling = CouplingSeries(1);
  const double bound_B = 0.7;
  const ScalarField a = field(grid, "0.5 + 0.2*cos(pi*x1)");
  SolverConfig cfg;
  cfg.dt = 1e-4;
  cfg.scheme = Scheme::imex2;
  cfg.final_time = T;
  Model known = truth;
  known.potential = PotentialSeries(1);

  double prev = std::numeric_limits<double>::infinity();
  for (int N : {2, 3, 4}) {
    const auto nodes = suggested_nodes(T, N + 1);
    std::vector<MeasurementBundle> bundles;
    bundles.push_back(generate_measurements(truth, field(grid, "1 + cos(pi*x1)"), nodes, 1, cfg, "exp0"));
    bundles.push_back(generate_measurements(truth, field(grid, "1 + sin(pi*x1)"), nodes, 1, cfg, "exp1"));
    const auto r = reconstruct_time_dependent(1, bundles, known, bound_B, T, {});
    o.require(r.failed.empty(), "all nodes reconstructed for N=" + std::to_string(N));
    double err = 0.0;
    for (int k = 0; k <= 200; ++k) {
      const double t = T * k / 200.0;
      const ScalarField est = r.evaluate(t);
      for (std::size_t i = 0; i < est.size(); ++i)
        if (r.mask[i]) err = std::max(err, std::abs(est[i] - a[i] * std::cos(t)));
    }
    o.detail << (N == 2 ? "" : ", ") << "N=" << N << " error " << sci(err) << " bound " << sci(r.remainder_bound);
    o.require(err < prev, "decreasing at N=" + std::to_string(N));
    o.require(err <= r.remainder_bound, "below bound at N=" + std::to_string(N));
    prev = err;
  }
  return o;
}

// ------------------------------------------------------------------ 10

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "timings.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).generic_string()] = ss.str();
  }
  return out;
}

Outcome determinism() {
  Outcome o;
  const fs::path base = fs::temp_directory_path() / ("chac_determinism_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const fs::path cfg = fs::path(CHAC_TEST_DATA_DIR) / "determinism.toml";
  auto run = [&](const fs::path& out, int jobs) {
    const std::string cmd = std::string("\"") + CHAC_CLI_PATH + "\" run --config \"" + cfg.string() + "\" --out \"" +
                            out.string() + "\" --jobs " + std::to_string(jobs) + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const int rc1 = run(base / "a", 1), rc2 = run(base / "b", 4);
  o.require(rc1 == 0 && rc2 == 0, "both runs succeed");
  if (rc1 == 0 && rc2 == 0) {
    const auto ta = tree(base / "a"), tb = tree(base / "b");
    std::size_t differing = 0;
    for (const auto& [k, v] : ta) {
      auto it = tb.find(k);
      if (it == tb.end() || it->second != v) ++differing;
    }
    differing += tb.size() > ta.size() ? tb.size() - ta.size() : 0;
    o.detail << ta.size() << " artifacts compared (timings.json excluded), " << differing << " differ";
    o.require(!ta.empty() && ta.size() == tb.size() && differing == 0, "bit-identical trees");
  }
  fs::remove_all(base);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"spectral kernel suite", spectral_suite},
      {"forward solver temporal order and mass", forward_order},
      {"linear CH energy, weak form and eigenmode decay", linear_ch_monitor},
      {"zero-data uniqueness", zero_data},
      {"small-data aggregate linear in delta", delta_linearity},
      {"linearization cascade", cascade},
      {"IP1 closed loop", ip1_closed_loop},
      {"constant-coefficient Fourier formula", fourier_formula},
      {"IP2 interpolation and remainder bound", ip2},
      {"determinism of the CLI pipeline", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << (i + 1) << ' ' << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail.str() << " (" << std::fixed << std::setprecision(1) << secs << " s)" << std::defaultfloat
              << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
