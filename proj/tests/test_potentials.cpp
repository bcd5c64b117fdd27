#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "chac/error.hpp"
#include "chac/potentials.hpp"
#include "support/oracles.hpp"

using namespace chac;
using oracle::pi;

namespace {

CoefficientField cst(double v) { return CoefficientField::constant(v); }

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

StateFields zero_state(const GridPtr& g) { return {ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)}; }

StateJets zero_jets(const GridPtr& g, int n) { return {JetField(g, n), JetField(g, n), JetField(g, n), JetField(g, n)}; }

ScalarField random_field(const GridPtr& g, std::mt19937_64& rng, double amp = 0.5) {
  std::uniform_real_distribution<double> u(-amp, amp);
  ScalarField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

}  // namespace

TEST_CASE("system constants") {
  const auto p = SystemParams::from_physical(2.0, 3.0, 0.5, 4.0);
  CHECK(p.c1 == 1.0);
  CHECK(p.c2 == 12.0);
  CHECK(p.physical.has_value());
  CHECK_THROWS_AS(SystemParams(0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(SystemParams(1.0, -1.0), InvalidInput);
}

TEST_CASE("coefficient fields") {
  const auto g = PeriodicGrid::make(1, 16);
  const auto e = CoefficientField::expression("1 + t*cos(pi*x1)", 1);
  CHECK(e.depends_on_time());
  const double x[] = {0.0};
  CHECK(e(x, 2.0) == doctest::Approx(3.0));
  CHECK(cst(1.5).constant_value() == 1.5);
  CHECK_FALSE(e.constant_value().has_value());

  // sampled in time: linear data reproduced by two-node interpolation
  const ScalarField a = e.on_grid(g, 0.0), b = e.on_grid(g, 1.0);
  const auto s = CoefficientField::sampled({0.0, 1.0}, {a, b}, "samples");
  const ScalarField mid = s.on_grid(g, 0.5), ref = e.on_grid(g, 0.5);
  for (std::size_t i = 0; i < mid.size(); ++i) CHECK(mid[i] == doctest::Approx(ref[i]));
  const double off[] = {0.01};
  CHECK_THROWS_AS(s(off, 0.0), InvalidInput);
  CHECK_FALSE(CoefficientField::sampled({0.2}, {a}, "frozen").depends_on_time());
}

TEST_CASE("series construction rules") {
  PotentialSeries p(3);
  CHECK_THROWS_AS(p.set(0, cst(1.0)), InvalidInput);
  CHECK_THROWS_AS(p.set(4, cst(1.0)), InvalidInput);
  CHECK_THROWS_AS(PotentialSeries(0), InvalidInput);
  CouplingSeries c(2);
  CHECK_THROWS_AS(c.set_f0({1, 1, 1, 0}, cst(1.0)), InvalidInput);
  CHECK_THROWS_AS(c.set_linear(4, cst(1.0)), InvalidInput);
  CHECK(c.f0_pure(1) == nullptr);
  c.set_f0({1, 0, 0, 0}, cst(2.0));
  REQUIRE(c.f0_pure(1) != nullptr);
}

TEST_CASE("pointwise evaluation") {
  const auto g = PeriodicGrid::make(1, 32);
  PotentialSeries p(3);
  p.set(2, cst(2.0));
  CouplingSeries c(2);
  c.set_f0({1, 0, 0, 0}, cst(1.0)).set_linear(1, cst(-1.0)).set_fi(1, {1, 1, 0, 0}, cst(1.0));

  const auto zero = eval_nonlinearities(p, c, 0.0, zero_state(g));
  CHECK(zero.g.max_abs() == 0.0);
  CHECK(zero.f0.max_abs() == 0.0);
  for (const auto& f : zero.f) CHECK(f.max_abs() == 0.0);

  StateFields s = zero_state(g);
  s[0] = ScalarField::from_function(g, [](std::span<const double> x) { return std::cos(pi * x[0]); });
  const auto v = eval_nonlinearities(p, c, 0.0, s);
  for (std::size_t i = 0; i < s[0].size(); ++i) CHECK(v.g[i] == doctest::Approx(s[0][i] * s[0][i]));

  StateFields big = zero_state(g);
  big[0] = ScalarField(g, 1e60);
  CHECK_THROWS_AS(eval_nonlinearities(p, c, 0.0, big), BlowUp);
}

TEST_CASE("random polynomial potential against a symbolic pointwise oracle") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto g = PeriodicGrid::make(1, 32);
  PotentialSeries p(4);
  std::vector<double> gc(5);
  for (int l = 1; l <= 4; ++l) p.set(l, cst(gc[static_cast<std::size_t>(l)] = u(rng)));
  CouplingSeries c(3);
  const double c1000 = u(rng), c1100 = u(rng), c0030 = u(rng), b2 = u(rng), b2_0110 = u(rng);
  c.set_f0({1, 0, 0, 0}, cst(c1000)).set_f0({1, 1, 0, 0}, cst(c1100)).set_f0({0, 0, 3, 0}, cst(c0030));
  c.set_linear(2, cst(b2)).set_fi(2, {0, 1, 1, 0}, cst(b2_0110));

  StateFields s;
  for (auto& f : s) f = random_field(g, rng);
  const auto v = eval_nonlinearities(p, c, 0.0, s);
  std::uniform_int_distribution<std::size_t> pick(0, g->size() - 1);
  for (int k = 0; k < 10; ++k) {
    const std::size_t i = pick(rng);
    const double y = s[0][i], z1 = s[1][i], z2 = s[2][i];
    double gy = 0.0;
    for (int l = 1; l <= 4; ++l) gy += gc[static_cast<std::size_t>(l)] / factorial(l) * std::pow(y, l);
    CHECK(std::abs(v.g[i] - gy) <= 1e-12);
    CHECK(std::abs(v.f0[i] - (c1000 * y + c1100 * y * z1 / 2 + c0030 * z2 * z2 * z2 / 6)) <= 1e-12);
    CHECK(std::abs(v.f[1][i] - (b2 * z2 + b2_0110 * z1 * z2 / 2)) <= 1e-12);
    CHECK(v.f[0][i] == 0.0);
  }
}

TEST_CASE("jet composition of a monomial") {
  const auto g = PeriodicGrid::make(1, 16);
  std::mt19937_64 rng(1);
  PotentialSeries p(2);
  p.set(2, cst(2.0));  // g(y) = y^2
  CouplingSeries c(1);
  StateJets s = zero_jets(g, 3);
  const ScalarField a = random_field(g, rng);
  s[0][1] = a;
  const auto out = jet_compose(p, c, 0.0, s);
  for (int l : {0, 1, 3}) CHECK(out.g[l].max_abs() == 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(out.g[2][i] == doctest::Approx(a[i] * a[i]));
}

TEST_CASE("order-parameter outputs vanish without order-parameter input") {
  const auto g = PeriodicGrid::make(1, 16);
  std::mt19937_64 rng(2);
  PotentialSeries p(3);
  p.set(1, cst(1.0)).set(3, cst(2.0));
  CouplingSeries c(3);
  for (int i = 1; i <= 3; ++i) c.set_linear(i, cst(-1.0));
  c.set_fi(1, {2, 1, 0, 0}, cst(1.0)).set_fi(3, {1, 0, 1, 1}, cst(0.5));
  StateJets s = zero_jets(g, 3);
  for (int l = 0; l <= 3; ++l) s[0][l] = random_field(g, rng);
  const auto out = jet_compose(p, c, 0.0, s);
  for (const auto& f : out.f)
    for (int l = 0; l <= 3; ++l) CHECK(f[l].max_abs() == 0.0);
}

TEST_CASE("order-3 composition matches Faa di Bruno") {
  const auto g = PeriodicGrid::make(1, 16);
  std::mt19937_64 rng(3);
  PotentialSeries p(3);
  p.set(1, cst(1.0)).set(2, cst(1.0)).set(3, cst(1.0));  // y + y^2/2 + y^3/6
  CouplingSeries c(1);
  StateJets s = zero_jets(g, 3);
  for (int l = 1; l <= 3; ++l) s[0][l] = random_field(g, rng);
  const auto out = jet_compose(p, c, 0.0, s);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const std::vector<double> ud = {s[0][1][i], 2.0 * s[0][2][i], 6.0 * s[0][3][i]};
    for (int l = 1; l <= 3; ++l) {
      const double ref = oracle::faa_di_bruno(l, {1.0, 1.0, 1.0}, ud);
      CHECK(std::abs(out.g[l][i] * factorial(l) - ref) <= 1e-12);
    }
  }

  // only u^(1) present: the order-l output is g^(l) (u^(1))^l / l!
  PotentialSeries p3(3);
  p3.set(3, cst(5.0));
  StateJets s1 = zero_jets(g, 3);
  s1[0][1] = s[0][1];
  const auto o3 = jet_compose(p3, c, 0.0, s1);
  for (std::size_t i = 0; i < g->size(); ++i)
    CHECK(o3.g[3][i] * 6.0 == doctest::Approx(5.0 * std::pow(s[0][1][i], 3)));
  CHECK(oracle::bell(3, 3, {0.7, 0.0, 0.0}) == doctest::Approx(std::pow(0.7, 3)));
}

TEST_CASE("order-0 slice equals pointwise evaluation exactly") {
  const auto g = PeriodicGrid::make(1, 16);
  std::mt19937_64 rng(4);
  PotentialSeries p(3);
  p.set(1, cst(0.3)).set(2, CoefficientField::expression("cos(pi*x1)", 1)).set(3, cst(-1.0));
  CouplingSeries c(3);
  c.set_f0({1, 0, 0, 0}, cst(1.0)).set_f0({1, 2, 0, 0}, cst(0.4)).set_linear(2, cst(-2.0));
  c.set_fi(2, {1, 0, 1, 0}, cst(0.2));
  StateJets s = zero_jets(g, 2);
  StateFields s0;
  for (std::size_t v = 0; v < 4; ++v) {
    for (int l = 0; l <= 2; ++l) s[v][l] = random_field(g, rng);
    s0[v] = s[v][0];
  }
  const auto jets = jet_compose(p, c, 0.3, s);
  const auto vals = eval_nonlinearities(p, c, 0.3, s0);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(jets.g[0][i] == vals.g[i]);
    CHECK(jets.f0[0][i] == vals.f0[i]);
    for (std::size_t k = 0; k < 3; ++k) CHECK(jets.f[k][0][i] == vals.f[k][i]);
  }
}

TEST_CASE("linearity in the top jet coefficient") {
  const auto g = PeriodicGrid::make(1, 16);
  std::mt19937_64 rng(5);
  PotentialSeries p(3);
  p.set(1, cst(0.5)).set(2, cst(0.3)).set(3, cst(0.7));
  CouplingSeries c(1);
  StateJets s = zero_jets(g, 3);
  for (int l = 0; l <= 3; ++l) s[0][l] = random_field(g, rng);
  const ScalarField delta = random_field(g, rng, 1e-3);
  StateJets s2 = s;
  s2[0][3] += delta;
  const auto a = jet_compose(p, c, 0.0, s), b = jet_compose(p, c, 0.0, s2);
  for (int l = 0; l < 3; ++l) CHECK((b.g[l] - a.g[l]).max_abs() == 0.0);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double y = s[0][0][i];
    const double dg = 0.5 + 0.3 * y + 0.7 * y * y / 2;
    CHECK(std::abs(b.g[3][i] - a.g[3][i] - dg * delta[i]) <= 1e-10);
  }
}

TEST_CASE("mismatched jet orders are rejected") {
  const auto g = PeriodicGrid::make(1, 8);
  StateJets s = {JetField(g, 2), JetField(g, 2), JetField(g, 3), JetField(g, 2)};
  CHECK_THROWS_AS(jet_compose(PotentialSeries(1), CouplingSeries(1), 0.0, s), InvalidInput);
}

TEST_CASE("jet arithmetic") {
  const auto g = PeriodicGrid::make(1, 8);
  JetField a(g, 2), b(g, 2);
  a[0] = ScalarField(g, 1.0);
  a[1] = ScalarField(g, 2.0);
  b[1] = ScalarField(g, 3.0);
  b[2] = ScalarField(g, 5.0);
  const JetField c = a * b;  // (1 + 2e)(3e + 5e^2) = 3e + 11e^2 + O(e^3)
  CHECK(c[0][0] == 0.0);
  CHECK(c[1][0] == 3.0);
  CHECK(c[2][0] == 11.0);
  CHECK(c.derivative(2)[0] == 22.0);
  CHECK(JetField::linear_seed(ScalarField(g, 1.0), 2)[1][0] == 1.0);
}

TEST_CASE("admissibility checks") {
  PotentialSeries dw(3);
  dw.set(1, cst(-1.0)).set(3, cst(6.0));  // u^3 - u
  CouplingSeries c(3);
  c.set_f0({1, 0, 0, 0}, cst(0.5)).set_f0({1, 1, 0, 0}, cst(1.0));
  for (int i = 1; i <= 3; ++i) c.set_linear(i, cst(-1.0));
  c.set_fi(1, {1, 1, 0, 0}, cst(0.3));
  ProbeBox box;
  box.samples = 2000;
  const auto rep = validate_admissible(dw, c, box);
  CHECK(rep.ok());
  CHECK(rep.lipschitz_g > 0.0);

  CouplingSeries bad = c;
  bad.set_fi(1, {2, 0, 0, 0}, cst(1.0));
  const auto r2 = validate_admissible(dw, bad, box);
  CHECK_FALSE(r2.ok());
  bool flagged = false;
  for (const auto& k : r2.conditions)
    if (k.name == "fi-no-pure-concentration-terms") flagged = !k.passed;
  CHECK(flagged);

  CouplingSeries bad0 = c;
  bad0.set_f0({0, 1, 0, 0}, cst(1.0));
  CHECK_FALSE(validate_admissible(dw, bad0, box).ok());

  // the Lipschitz estimate never decreases when the box grows
  double prev = 0.0;
  for (double r : {0.25, 0.5, 1.0, 2.0}) {
    ProbeBox b = box;
    b.radius = r;
    const auto rr = validate_admissible(dw, c, b);
    CHECK(rr.lipschitz_g >= prev);
    prev = rr.lipschitz_g;
  }
}
