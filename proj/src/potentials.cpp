#include "chac/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <variant>

#include "chac/error.hpp"
#include "chac/expression.hpp"
#include "chac/interpolation.hpp"

namespace chac {

// ---------------------------------------------------------------- params

SystemParams::SystemParams(double c1_, double c2_) : c1(c1_), c2(c2_) {
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw InvalidInput("system constants c1 and c2 must be positive");
}

SystemParams SystemParams::from_physical(double mobility, double kinetic, double alpha, double beta) {
  SystemParams p(mobility * alpha, kinetic * beta);
  p.physical = Physical{mobility, kinetic, alpha, beta};
  return p;
}

// ---------------------------------------------------------------- coefficients

struct CoefficientField::Impl {
  struct Constant {
    double value;
  };
  struct Sampled {
    std::vector<double> times;
    std::vector<ScalarField> samples;
    std::optional<BarycentricInterpolator> interp;
  };

  std::variant<Constant, Expression, Callback, Sampled> source;
  std::string descriptor;
  bool time_dependent = false;
};

CoefficientField CoefficientField::constant(double value) {
  if (!std::isfinite(value)) throw InvalidInput("coefficient constant must be finite");
  CoefficientField c;
  std::ostringstream os;
  os.precision(17);
  os << value;
  c.impl_ = std::make_shared<const Impl>(Impl{Impl::Constant{value}, os.str(), false});
  return c;
}

CoefficientField CoefficientField::expression(const std::string& text, int dim) {
  Expression e = Expression::parse(text, dim);
  if (e.is_constant()) {
    const double x0[3] = {0.0, 0.0, 0.0};
    CoefficientField c = constant(e.evaluate(std::span<const double>(x0, static_cast<std::size_t>(dim)), 0.0));
    auto impl = *c.impl_;
    impl.descriptor = text;
    c.impl_ = std::make_shared<const Impl>(std::move(impl));
    return c;
  }
  CoefficientField c;
  const bool td = e.depends_on_time();
  c.impl_ = std::make_shared<const Impl>(Impl{std::move(e), text, td});
  return c;
}

CoefficientField CoefficientField::callback(Callback fn, std::string descriptor, bool time_dependent) {
  if (!fn) throw InvalidInput("coefficient callback is empty");
  CoefficientField c;
  c.impl_ = std::make_shared<const Impl>(Impl{std::move(fn), std::move(descriptor), time_dependent});
  return c;
}

CoefficientField CoefficientField::sampled(std::vector<double> times, std::vector<ScalarField> samples,
                                           std::string descriptor) {
  if (times.empty() || times.size() != samples.size())
    throw InvalidInput("sampled coefficient needs one field per time");
  for (const auto& s : samples) {
    if (s.empty() || !(s.grid() == samples.front().grid()))
      throw InvalidInput("sampled coefficient fields must share one grid");
    if (!s.all_finite()) throw InvalidInput("sampled coefficient contains non-finite values");
  }
  Impl::Sampled data{times, std::move(samples), std::nullopt};
  if (times.size() > 1) data.interp.emplace(times);
  CoefficientField c;
  const bool td = times.size() > 1;
  c.impl_ = std::make_shared<const Impl>(Impl{std::move(data), std::move(descriptor), td});
  return c;
}

namespace {

double sampled_at_index(const CoefficientField::Impl& impl, std::size_t flat, double t) {
  const auto& s = std::get<3>(impl.source);
  if (!s.interp) return s.samples.front()[flat];
  const auto basis = s.interp->basis(t);
  double v = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) v += basis[k] * s.samples[k][flat];
  return v;
}

}  // namespace

double CoefficientField::operator()(std::span<const double> x, double t) const {
  const Impl& impl = *impl_;
  switch (impl.source.index()) {
    case 0: return std::get<0>(impl.source).value;
    case 1: return std::get<1>(impl.source).evaluate(x, t);
    case 2: return std::get<2>(impl.source)(x, t);
    default: {
      const auto& grid = std::get<3>(impl.source).samples.front().grid();
      if (static_cast<int>(x.size()) != grid.dim()) throw InvalidInput("coefficient evaluated at wrong rank");
      const double h = grid.spacing();
      const int n = grid.points_per_axis();
      std::size_t flat = 0;
      for (double xa : x) {
        const double pos = (xa + 1.0) / h;
        const double r = std::round(pos);
        if (std::abs(pos - r) > 1e-9) throw InvalidInput("sampled coefficient evaluated off the grid");
        const int i = ((static_cast<int>(r) % n) + n) % n;
        flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
      }
      return sampled_at_index(impl, flat, t);
    }
  }
}

ScalarField CoefficientField::on_grid(const GridPtr& grid, double t) const {
  const Impl& impl = *impl_;
  if (impl.source.index() == 0) return ScalarField(grid, std::get<0>(impl.source).value);
  if (impl.source.index() == 3) {
    const auto& s = std::get<3>(impl.source);
    if (!(s.samples.front().grid() == *grid)) throw InvalidInput("sampled coefficient grid mismatch");
    ScalarField out(grid);
    if (!s.interp) {
      out = ScalarField(grid, std::vector<double>(s.samples.front().values().begin(),
                                                  s.samples.front().values().end()));
      return out;
    }
    const auto basis = s.interp->basis(t);
    for (std::size_t k = 0; k < basis.size(); ++k)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += basis[k] * s.samples[k][i];
    return out;
  }
  return ScalarField::from_function(grid, [&](std::span<const double> x) { return (*this)(x, t); });
}

const std::string& CoefficientField::descriptor() const noexcept { return impl_->descriptor; }
bool CoefficientField::depends_on_time() const noexcept { return impl_->time_dependent; }

std::optional<double> CoefficientField::constant_value() const noexcept {
  if (impl_->source.index() == 0) return std::get<0>(impl_->source).value;
  return std::nullopt;
}

// ---------------------------------------------------------------- series

PotentialSeries::PotentialSeries(int n_max) : n_max_(n_max) {
  if (n_max < 1) throw InvalidInput("potential truncation order must be >= 1");
}

PotentialSeries& PotentialSeries::set(int ell, CoefficientField c) {
  if (ell < 1)
    throw InvalidInput("potential series starts at order 1; a constant term (order " + std::to_string(ell) +
                       ") is not admissible");
  if (ell > n_max_) throw InvalidInput("potential order " + std::to_string(ell) + " exceeds truncation");
  coeffs_.insert_or_assign(ell, std::move(c));
  return *this;
}

PotentialSeries& PotentialSeries::clear(int ell) {
  coeffs_.erase(ell);
  return *this;
}

const CoefficientField* PotentialSeries::coefficient(int ell) const {
  auto it = coeffs_.find(ell);
  return it == coeffs_.end() ? nullptr : &it->second;
}

bool PotentialSeries::depends_on_time() const {
  return std::any_of(coeffs_.begin(), coeffs_.end(), [](const auto& kv) { return kv.second.depends_on_time(); });
}

CouplingSeries::CouplingSeries(int order) : order_(order) {
  if (order < 1) throw InvalidInput("coupling truncation order must be >= 1");
}

void CouplingSeries::check_index(const MultiIndex& index) const {
  for (int l : index)
    if (l < 0) throw InvalidInput("multi-index entries must be non-negative");
  if (degree(index) > order_) throw InvalidInput("multi-index degree exceeds coupling truncation order");
}

CouplingSeries& CouplingSeries::set_f0(const MultiIndex& index, CoefficientField c) {
  check_index(index);
  f0_.insert_or_assign(index, std::move(c));
  return *this;
}

CouplingSeries& CouplingSeries::set_linear(int i, CoefficientField c) {
  if (i < 1 || i > 3) throw InvalidInput("order parameter index must be 1, 2 or 3");
  linear_[static_cast<std::size_t>(i - 1)] = std::move(c);
  return *this;
}

CouplingSeries& CouplingSeries::set_fi(int i, const MultiIndex& index, CoefficientField c) {
  if (i < 1 || i > 3) throw InvalidInput("order parameter index must be 1, 2 or 3");
  check_index(index);
  fi_[static_cast<std::size_t>(i - 1)].insert_or_assign(index, std::move(c));
  return *this;
}

const CouplingSeries::TermMap& CouplingSeries::fi_terms(int i) const {
  if (i < 1 || i > 3) throw InvalidInput("order parameter index must be 1, 2 or 3");
  return fi_[static_cast<std::size_t>(i - 1)];
}

const CoefficientField* CouplingSeries::linear(int i) const {
  if (i < 1 || i > 3) throw InvalidInput("order parameter index must be 1, 2 or 3");
  const auto& l = linear_[static_cast<std::size_t>(i - 1)];
  return l ? &*l : nullptr;
}

const CoefficientField* CouplingSeries::f0_pure(int l0) const {
  auto it = f0_.find(MultiIndex{l0, 0, 0, 0});
  return it == f0_.end() ? nullptr : &it->second;
}

bool CouplingSeries::depends_on_time() const {
  auto any = [](const TermMap& m) {
    return std::any_of(m.begin(), m.end(), [](const auto& kv) { return kv.second.depends_on_time(); });
  };
  if (any(f0_)) return true;
  for (const auto& l : linear_)
    if (l && l->depends_on_time()) return true;
  return std::any_of(fi_.begin(), fi_.end(), any);
}

// ---------------------------------------------------------------- jets

JetField::JetField(GridPtr grid, int order) : grid_(std::move(grid)) {
  if (order < 0) throw InvalidInput("jet order must be non-negative");
  coeffs_.assign(static_cast<std::size_t>(order) + 1, ScalarField(grid_));
}

JetField JetField::constant(const ScalarField& value, int order) {
  JetField j(value.grid_ptr(), order);
  j[0] = value;
  return j;
}

JetField JetField::linear_seed(const ScalarField& seed, int order) {
  if (order < 1) throw InvalidInput("a seeded jet needs order >= 1");
  JetField j(seed.grid_ptr(), order);
  j[1] = seed;
  return j;
}

bool JetField::is_zero() const noexcept {
  for (const auto& c : coeffs_)
    for (double v : c.values())
      if (v != 0.0) return false;
  return true;
}

ScalarField JetField::derivative(int l) const {
  double fact = 1.0;
  for (int k = 2; k <= l; ++k) fact *= k;
  return (*this)[l] * fact;
}

JetField& JetField::operator+=(const JetField& o) {
  if (o.order() != order()) throw InvalidInput("jet order mismatch");
  for (std::size_t l = 0; l < coeffs_.size(); ++l) coeffs_[l] += o.coeffs_[l];
  return *this;
}

JetField& JetField::axpy(const ScalarField& coeff, const JetField& x) {
  if (x.order() != order()) throw InvalidInput("jet order mismatch");
  const std::size_t n = coeff.size();
  for (std::size_t l = 0; l < coeffs_.size(); ++l) {
    auto dst = coeffs_[l].values();
    auto src = x.coeffs_[l].values();
    for (std::size_t i = 0; i < n; ++i) dst[i] += coeff[i] * src[i];
  }
  return *this;
}

JetField operator*(const JetField& a, const JetField& b) {
  if (a.order() != b.order()) throw InvalidInput("jet order mismatch");
  const int n = a.order();
  JetField out(a.grid_ptr(), n);
  std::vector<bool> az(static_cast<std::size_t>(n) + 1), bz(static_cast<std::size_t>(n) + 1);
  for (int l = 0; l <= n; ++l) {
    az[static_cast<std::size_t>(l)] = a[l].max_abs() == 0.0;
    bz[static_cast<std::size_t>(l)] = b[l].max_abs() == 0.0;
  }
  const std::size_t size = a[0].size();
  for (int k = 0; k <= n; ++k) {
    auto dst = out[k].values();
    for (int i = 0; i <= k; ++i) {
      if (az[static_cast<std::size_t>(i)] || bz[static_cast<std::size_t>(k - i)]) continue;
      auto x = a[i].values();
      auto y = b[k - i].values();
      for (std::size_t p = 0; p < size; ++p) dst[p] += x[p] * y[p];
    }
  }
  return out;
}

// ---------------------------------------------------------------- composition

CoefficientSnapshot sample_coefficients(const PotentialSeries& p, const CouplingSeries& c, const GridPtr& grid,
                                        double t) {
  CoefficientSnapshot s;
  s.grid = grid;
  s.time = t;
  s.g.resize(static_cast<std::size_t>(p.order()) + 1);
  for (int l = 1; l <= p.order(); ++l)
    if (const auto* coeff = p.coefficient(l)) s.g[static_cast<std::size_t>(l)] = coeff->on_grid(grid, t);
  for (const auto& [idx, coeff] : c.f0_terms()) s.f0.emplace_back(idx, coeff.on_grid(grid, t));
  for (int i = 1; i <= 3; ++i) {
    if (const auto* b = c.linear(i)) s.linear[static_cast<std::size_t>(i - 1)] = b->on_grid(grid, t);
    for (const auto& [idx, coeff] : c.fi_terms(i))
      s.fi[static_cast<std::size_t>(i - 1)].emplace_back(idx, coeff.on_grid(grid, t));
  }
  return s;
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Lazily built truncated powers of the four state jets.
class PowerTable {
 public:
  PowerTable(const StateJets& state) : state_(state) {
    for (std::size_t v = 0; v < 4; ++v) zero_[v] = state[v].is_zero();
  }

  bool vanishes(const MultiIndex& m) const {
    for (std::size_t v = 0; v < 4; ++v)
      if (m[v] > 0 && zero_[v]) return true;
    return false;
  }

  const JetField& power(std::size_t var, int k) {
    auto& table = powers_[var];
    if (table.empty()) {
      JetField one(state_[0].grid_ptr(), state_[0].order());
      one[0] = ScalarField(state_[0].grid_ptr(), 1.0);
      table.push_back(std::move(one));
    }
    while (static_cast<int>(table.size()) <= k) table.push_back(table.back() * state_[var]);
    return table[static_cast<std::size_t>(k)];
  }

  JetField monomial(const MultiIndex& m) {
    JetField acc = power(0, m[0]);
    for (std::size_t v = 1; v < 4; ++v)
      if (m[v] > 0) acc = acc * power(v, m[v]);
    return acc;
  }

 private:
  const StateJets& state_;
  std::array<bool, 4> zero_{};
  std::array<std::vector<JetField>, 4> powers_;
};

void check_state(const StateJets& state) {
  const int n = state[0].order();
  for (const auto& j : state) {
    if (!j.grid_ptr()) throw InvalidInput("state jet has no grid");
    if (j.order() != n) throw InvalidInput("state jets must share one order");
    if (!(*j.grid_ptr() == *state[0].grid_ptr())) throw InvalidInput("state jets must share one grid");
  }
}

}  // namespace

NonlinearJets jet_compose(const CoefficientSnapshot& coeffs, const StateJets& state) {
  check_state(state);
  const auto& grid = state[0].grid_ptr();
  if (coeffs.grid && !(*coeffs.grid == *grid)) throw InvalidInput("coefficient snapshot grid mismatch");
  const int n = state[0].order();
  PowerTable pw(state);

  NonlinearJets out{JetField(grid, n), JetField(grid, n),
                    {JetField(grid, n), JetField(grid, n), JetField(grid, n)}};

  if (!state[0].is_zero()) {
    for (std::size_t l = 1; l < coeffs.g.size(); ++l) {
      if (!coeffs.g[l]) continue;
      out.g.axpy(*coeffs.g[l] * (1.0 / factorial(static_cast<int>(l))), pw.power(0, static_cast<int>(l)));
    }
  }

  auto accumulate = [&](JetField& dst, const std::vector<std::pair<MultiIndex, ScalarField>>& terms) {
    for (const auto& [idx, field] : terms) {
      if (pw.vanishes(idx)) continue;
      dst.axpy(field * (1.0 / factorial(degree(idx))), pw.monomial(idx));
    }
  };
  accumulate(out.f0, coeffs.f0);
  for (std::size_t i = 0; i < 3; ++i) {
    if (coeffs.linear[i] && !state[i + 1].is_zero()) out.f[i].axpy(*coeffs.linear[i], state[i + 1]);
    accumulate(out.f[i], coeffs.fi[i]);
  }
  return out;
}

NonlinearJets jet_compose(const PotentialSeries& p, const CouplingSeries& c, double t, const StateJets& state) {
  check_state(state);
  return jet_compose(sample_coefficients(p, c, state[0].grid_ptr(), t), state);
}

NonlinearValues eval_nonlinearities(const CoefficientSnapshot& coeffs, const StateFields& state) {
  StateJets jets;
  for (std::size_t v = 0; v < 4; ++v) {
    if (state[v].empty()) throw InvalidInput("state field missing");
    jets[v] = JetField::constant(state[v], 0);
  }
  NonlinearJets j = jet_compose(coeffs, jets);
  NonlinearValues out{j.g[0], j.f0[0], {j.f[0][0], j.f[1][0], j.f[2][0]}};
  auto guard = [](const ScalarField& f, const char* name) {
    for (double v : f.values())
      if (!(std::abs(v) <= 1e100))
        throw BlowUp(std::string("nonlinearity ") + name + " overflowed (|value| > 1e100)", -1);
  };
  guard(out.g, "g");
  guard(out.f0, "f0");
  guard(out.f[0], "f1");
  guard(out.f[1], "f2");
  guard(out.f[2], "f3");
  return out;
}

NonlinearValues eval_nonlinearities(const PotentialSeries& p, const CouplingSeries& c, double t,
                                    const StateFields& state) {
  if (state[0].empty()) throw InvalidInput("state field missing");
  return eval_nonlinearities(sample_coefficients(p, c, state[0].grid_ptr(), t), state);
}

// ---------------------------------------------------------------- admissibility

bool AdmissibilityReport::ok() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const ConditionCheck& c) { return c.passed; });
}

namespace {

double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

std::string index_text(const MultiIndex& m) {
  return std::to_string(m[0]) + std::to_string(m[1]) + std::to_string(m[2]) + std::to_string(m[3]);
}

// Polynomial value of a series at a single point given pre-evaluated coefficients.
double eval_terms(const std::vector<std::pair<MultiIndex, double>>& terms, const std::array<double, 4>& z) {
  double s = 0.0;
  for (const auto& [idx, c] : terms) {
    double m = c / factorial(degree(idx));
    for (std::size_t v = 0; v < 4; ++v) m *= std::pow(z[v], idx[v]);
    s += m;
  }
  return s;
}

}  // namespace

AdmissibilityReport validate_admissible(const PotentialSeries& p, const CouplingSeries& c, const ProbeBox& box) {
  if (!(box.radius > 0.0)) throw InvalidInput("probe box radius must be positive");
  if (box.samples < 1) throw InvalidInput("probe box needs at least one sample");
  AdmissibilityReport report;

  // 1: g starts at order 1 (enforced by PotentialSeries at construction).
  report.conditions.push_back({"g-series-starts-at-order-1", true, "no constant term in g"});

  // 2: among degree-1 terms of f0 only c_1000 may be present; no constant term.
  {
    ConditionCheck chk{"f0-degree-1-sparsity", true, "ok"};
    for (const auto& [idx, coeff] : c.f0_terms()) {
      const int d = degree(idx);
      if (d == 0 || (d == 1 && idx[0] != 1)) {
        chk.passed = false;
        chk.detail = "f0 has forbidden term c_" + index_text(idx);
        break;
      }
    }
    report.conditions.push_back(chk);
  }

  // 3: f_i linear part is diagonal (b_i z_i) and b_{i,l0 000} vanish.
  {
    ConditionCheck chk{"fi-no-pure-concentration-terms", true, "ok"};
    for (int i = 1; i <= 3 && chk.passed; ++i) {
      for (const auto& [idx, coeff] : c.fi_terms(i)) {
        const bool pure_u0 = idx[1] == 0 && idx[2] == 0 && idx[3] == 0;
        if (pure_u0 || degree(idx) < 2) {
          chk.passed = false;
          chk.detail = "f" + std::to_string(i) + " has forbidden term b_{" + std::to_string(i) + "," +
                       index_text(idx) + "}";
          break;
        }
      }
    }
    report.conditions.push_back(chk);
  }

  // 4: sampled Lipschitz constants about zero. Probe points are dyadic
  // rescalings 2^j s_k of a fixed quasi-random set, kept when inside the box,
  // so the probe set only grows with the radius.
  std::vector<int> levels;
  for (int j = -30; j <= 30; ++j) levels.push_back(j);

  double lg = 0.0;
  std::array<double, 4> lf{};
  std::vector<std::pair<MultiIndex, double>> f0_terms;
  std::array<std::vector<std::pair<MultiIndex, double>>, 3> fi_terms;
  std::vector<double> gvals(static_cast<std::size_t>(p.order()) + 1);
  std::array<double, 3> blin{};

  for (int k = 0; k < box.samples; ++k) {
    const auto kk = static_cast<std::uint64_t>(k) + 1;
    double x[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < box.dim; ++a) x[a] = -1.0 + 2.0 * radical_inverse(kk, kPrimes[a]);
    const double t = box.t_max * radical_inverse(kk, kPrimes[3]);
    std::array<double, 4> s{};
    for (std::size_t v = 0; v < 4; ++v) s[v] = -1.0 + 2.0 * radical_inverse(kk, kPrimes[4 + v]);
    const std::span<const double> xs(x, static_cast<std::size_t>(box.dim));

    for (int l = 1; l <= p.order(); ++l) {
      const auto* coeff = p.coefficient(l);
      gvals[static_cast<std::size_t>(l)] = coeff ? (*coeff)(xs, t) : 0.0;
    }
    f0_terms.clear();
    for (const auto& [idx, coeff] : c.f0_terms()) f0_terms.emplace_back(idx, coeff(xs, t));
    for (int i = 1; i <= 3; ++i) {
      auto& dst = fi_terms[static_cast<std::size_t>(i - 1)];
      dst.clear();
      for (const auto& [idx, coeff] : c.fi_terms(i)) dst.emplace_back(idx, coeff(xs, t));
      const auto* b = c.linear(i);
      blin[static_cast<std::size_t>(i - 1)] = b ? (*b)(xs, t) : 0.0;
    }

    const double smax = std::max({std::abs(s[0]), std::abs(s[1]), std::abs(s[2]), std::abs(s[3])});
    for (int j : levels) {
      const double scale = std::ldexp(1.0, j);
      if (scale * smax > box.radius) break;
      std::array<double, 4> z{};
      for (std::size_t v = 0; v < 4; ++v) z[v] = scale * s[v];

      // g about zero along the concentration coordinate
      if (std::abs(s[0]) > 0.0 && scale * std::abs(s[0]) <= box.radius) {
        double gy = 0.0;
        for (int l = p.order(); l >= 1; --l) gy = (gy + gvals[static_cast<std::size_t>(l)] / factorial(l)) * z[0];
        lg = std::max(lg, std::abs(gy) / std::abs(z[0]));
      }

      const std::array<double, 4> zero{};
      const double zn = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3]);
      if (zn == 0.0) continue;
      lf[0] = std::max(lf[0], std::abs(eval_terms(f0_terms, z) - eval_terms(f0_terms, zero)) / zn);
      for (std::size_t i = 0; i < 3; ++i) {
        const double fz = blin[i] * z[i + 1] + eval_terms(fi_terms[i], z);
        const double f0v = eval_terms(fi_terms[i], zero);
        lf[i + 1] = std::max(lf[i + 1], std::abs(fz - f0v) / zn);
      }
    }
  }

  report.lipschitz_g = lg;
  report.lipschitz_f = lf;
  const bool finite = std::isfinite(lg) && std::all_of(lf.begin(), lf.end(), [](double v) { return std::isfinite(v); });
  std::ostringstream os;
  os << "L_g=" << lg << " L_f0=" << lf[0] << " L_f1=" << lf[1] << " L_f2=" << lf[2] << " L_f3=" << lf[3]
     << " on radius " << box.radius;
  report.conditions.push_back({"lipschitz-on-probe-box", finite, os.str()});
  return report;
}

}  // namespace chac
