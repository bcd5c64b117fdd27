#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "chac/error.hpp"
#include "chac/forward.hpp"
#include "support/oracles.hpp"

using namespace chac;
using oracle::pi;

namespace {

CoefficientField cst(double v) { return CoefficientField::constant(v); }

ScalarField field(const GridPtr& g, const std::string& e) { return CoefficientField::expression(e, g->dim()).on_grid(g, 0.0); }

Model nonlinear_model() {
  Model m;
  m.params = SystemParams(0.01, 1.0);
  m.potential = PotentialSeries(3);
  m.potential.set(1, CoefficientField::expression("0.5 + 0.2*cos(pi*x1)", 1)).set(3, cst(1.0));
  m.coupling = CouplingSeries(2);
  m.coupling.set_f0({1, 0, 0, 0}, cst(0.5)).set_f0({1, 1, 0, 0}, cst(0.4));
  for (int i = 1; i <= 3; ++i) m.coupling.set_linear(i, cst(-1.0));
  m.coupling.set_fi(1, {1, 1, 0, 0}, cst(0.3));
  return m;
}

StateVec small_state(const GridPtr& g, double amp) {
  StateVec s = StateVec::zeros(g);
  s.u[0] = field(g, "1 + cos(pi*x1)") * amp;
  s.u[1] = field(g, "sin(pi*x1)") * amp;
  return s;
}

}  // namespace

TEST_CASE("zero state is a fixed point") {
  const auto g = PeriodicGrid::make(1, 32);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  const StateVec next = step(StateVec::zeros(g), nonlinear_model(), cfg);
  for (const auto& f : next.u) CHECK(f.max_abs() == 0.0);
  CHECK(next.time == doctest::Approx(1e-3));
}

TEST_CASE("linear eigenmode decay is first order for imex1") {
  const auto g = PeriodicGrid::make(1, 32);
  Model m;
  m.params = SystemParams(0.1, 1.0);
  StateVec s = StateVec::zeros(g);
  s.u[0] = field(g, "cos(pi*x1)");
  std::vector<double> dts = {2e-3, 1e-3, 5e-4}, errs;
  for (double dt : dts) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.final_time = 0.1;
    const auto tr = solve_forward(s, m, cfg);
    errs.push_back(l2_norm(tr.snapshots.back().state.u[0] - s.u[0] * std::exp(-0.1 * std::pow(pi, 4) * 0.1)));
  }
  CHECK(oracle::loglog_slope(dts, errs) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("record time planning") {
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.final_time = 0.1;
  auto plan = plan_steps(cfg);
  CHECK(plan.total_steps == 10);
  REQUIRE(plan.record_steps.size() == 1);
  CHECK(plan.record_steps[0] == 10);

  cfg.record_times = {0.05, 0.053, 0.1};
  plan = plan_steps(cfg);
  CHECK(plan.record_steps == std::vector<long>{5, 10});
  CHECK_FALSE(plan.warnings.empty());

  cfg.record_times = {0.0};
  CHECK_THROWS_AS(plan_steps(cfg), InvalidInput);
  cfg.record_times = {0.2};
  CHECK_THROWS_AS(plan_steps(cfg), InvalidInput);

  const auto g = PeriodicGrid::make(1, 16);
  cfg.record_times = {0.1};
  const auto tr = solve_forward(small_state(g, 1e-2), nonlinear_model(), cfg);
  CHECK(tr.snapshots.size() == 1);
}

TEST_CASE("recorded time derivative is the right-hand side") {
  const auto g = PeriodicGrid::make(1, 64);
  const Model m = nonlinear_model();
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.scheme = Scheme::imex2;
  cfg.final_time = 0.05;
  const auto tr = solve_forward(small_state(g, 0.1), m, cfg);
  const auto& snap = tr.snapshots.back();
  const auto nl = eval_nonlinearities(m.potential, m.coupling, snap.state.time, snap.state.u);
  const ScalarField ref = apply_operator(snap.state.u[0], DiffOp::biharmonic()) * (-m.params.c1) +
                          apply_operator(nl.f0 + nl.g, DiffOp::laplacian());
  // both sides carry transform roundoff amplified by the largest biharmonic symbol
  const double xi_max = pi * 32;
  const double floor = 64 * 2.2e-16 * m.params.c1 * std::pow(xi_max, 4) * l2_norm(snap.state.u[0]);
  CHECK(l2_norm(snap.du0_dt - ref) <= floor);
}

TEST_CASE("mass conservation with and without dealiasing") {
  const auto g = PeriodicGrid::make(1, 64);
  for (bool dealias : {false, true}) {
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.scheme = Scheme::imex2;
    cfg.final_time = 0.2;
    cfg.dealias = dealias;
    const auto tr = solve_forward(small_state(g, 0.3), nonlinear_model(), cfg);
    CHECK(diagnostics(tr).mass_drift <= 1e-10);
  }
}

TEST_CASE("diagnostics of trivial runs") {
  const auto g = PeriodicGrid::make(1, 32);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.final_time = 0.05;
  const auto zero = diagnostics(solve_forward(StateVec::zeros(g), nonlinear_model(), cfg));
  CHECK(zero.max_u0_l2 == 0.0);
  CHECK(zero.max_ui_l2 == 0.0);
  CHECK(zero.aggregate == 0.0);

  Model lin;
  lin.params = SystemParams(0.1, 1.0);
  StateVec s = StateVec::zeros(g);
  s.u[0] = field(g, "cos(pi*x1) + 0.3*sin(3*pi*x1)");
  const auto d = diagnostics(solve_forward(s, lin, cfg));
  CHECK(d.u0_l2_monotone_decreasing);
  CHECK(d.history.size() == 51);
}

TEST_CASE("schemes agree to O(dt) and refine to the same limit") {
  const auto g = PeriodicGrid::make(1, 64);
  const Model m = nonlinear_model();
  const StateVec s = small_state(g, 0.2);
  auto run = [&](Scheme sc, double dt) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.scheme = sc;
    cfg.final_time = 0.1;
    return solve_forward(s, m, cfg).snapshots.back().state.u[0];
  };
  const double d1 = l2_norm(run(Scheme::imex1, 1e-3) - run(Scheme::imex2, 1e-3));
  const double d2 = l2_norm(run(Scheme::imex1, 5e-4) - run(Scheme::imex2, 5e-4));
  CHECK(d2 / d1 == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("grid refinement leaves analytic data unchanged") {
  const Model m = nonlinear_model();
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.final_time = 0.05;
  const auto coarse = PeriodicGrid::make(1, 64), fine = PeriodicGrid::make(1, 128);
  const ScalarField a = solve_forward(small_state(coarse, 0.1), m, cfg).snapshots.back().state.u[0];
  const ScalarField b = solve_forward(small_state(fine, 0.1), m, cfg).snapshots.back().state.u[0];
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[2 * i]));
  CHECK(diff <= 1e-12);
}

TEST_CASE("blow-up is reported with the step index") {
  const auto g = PeriodicGrid::make(1, 32);
  Model m;
  m.params = SystemParams(1e-6, 1.0);
  m.potential = PotentialSeries(1);
  m.potential.set(1, cst(-50.0));  // backward diffusion
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.final_time = 10.0;
  StateVec s = StateVec::zeros(g);
  s.u[0] = field(g, "cos(pi*x1)");
  try {
    solve_forward(s, m, cfg);
    FAIL("expected blow-up");
  } catch (const BlowUp& e) {
    CHECK(e.step() > 0);
    CHECK(e.step() < 1000);
  }
}

TEST_CASE("small-data radius warning") {
  const auto g = PeriodicGrid::make(1, 32);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.final_time = 0.01;
  cfg.small_data_delta = 1e-3;
  const StateVec s = small_state(g, 1.0);
  CHECK(initial_data_norm(s) > 1e-3);
  CHECK_FALSE(solve_forward(s, nonlinear_model(), cfg).warnings.empty());
  cfg.small_data_delta = 1e6;
  CHECK(solve_forward(s, nonlinear_model(), cfg).warnings.empty());
}

TEST_CASE("suggested time step") {
  const auto g = PeriodicGrid::make(1, 16);
  const double xi = pi * 8;
  CHECK(suggested_dt(SystemParams(0.5, 1.0), *g) == doctest::Approx(0.5 / (0.5 * std::pow(xi, 4))));
}

TEST_CASE("zero-data uniqueness") {
  const auto g = PeriodicGrid::make(1, 32);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  CHECK(zero_uniqueness_check(g, nonlinear_model(), cfg, 0.2).passed);

  Model bad = nonlinear_model();
  bad.coupling.set_fi(1, {0, 0, 0, 0}, cst(1.0));  // constant source in f1
  const auto chk = zero_uniqueness_check(g, bad, cfg, 0.2);
  CHECK_FALSE(chk.passed);
  CHECK(chk.sup_norm > 0.1);
}

TEST_CASE("linear CH eigenmode keeps v = Lap u") {
  const auto g = PeriodicGrid::make(1, 64);
  SolverConfig cfg;
  cfg.dt = 1e-5;
  cfg.final_time = 0.01;
  const ScalarField psi = field(g, "cos(pi*x1)");
  const auto tr = solve_linear_ch(cst(0.0), {}, psi, cfg);
  const auto& s = tr.snapshots.back();
  CHECK(l2_norm(s.v + s.u * (pi * pi)) <= 1e-12);
  CHECK(l2_norm(s.u - psi * std::exp(-std::pow(pi, 4) * 0.01)) <= 1e-3);
  CHECK(check_energy_inequality(tr).holds);
  CHECK(tr.energy.size() == 1001);
}

TEST_CASE("jet integrator at order zero is the plain solve") {
  const auto g = PeriodicGrid::make(1, 32);
  const Model m = nonlinear_model();
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.scheme = Scheme::imex2;
  cfg.final_time = 0.02;
  const StateVec s = small_state(g, 0.2);
  StateJets jets;
  for (std::size_t f = 0; f < 4; ++f) jets[f] = JetField::constant(s.u[f], 0);
  JetIntegrator it(m, cfg, jets);
  for (int k = 0; k < 20; ++k) it.advance();
  const auto tr = solve_forward(s, m, cfg);
  for (std::size_t f = 0; f < 4; ++f) CHECK((it.state()[f][0] - tr.snapshots.back().state.u[f]).max_abs() == 0.0);
  CHECK(it.time() == doctest::Approx(0.02));
}
