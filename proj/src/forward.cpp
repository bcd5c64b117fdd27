#include "chac/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "chac/error.hpp"

namespace chac {

namespace {

bool is_zero_field(const ScalarField& f) {
  for (double v : f.values())
    if (v != 0.0) return false;
  return true;
}

bool is_zero_spectrum(const Spectrum& s) {
  for (const auto& c : s.coefficients())
    if (c != std::complex<double>(0.0, 0.0)) return false;
  return true;
}

std::vector<double> weights(const PeriodicGrid& grid, int k) {
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = sobolev_weight(grid, i, k);
  return w;
}

double weighted_square(const Spectrum& s, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += std::norm(s[i]) * w[i];
  return acc * s.grid().volume();
}

void validate_config(const SolverConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InvalidInput("dt must be positive");
  if (!(cfg.final_time > 0.0) || !std::isfinite(cfg.final_time)) throw InvalidInput("final time must be positive");
  if (cfg.dt > cfg.final_time * (1.0 + 1e-12)) throw InvalidInput("dt must not exceed the final time");
}

}  // namespace

StateVec StateVec::zeros(const GridPtr& grid) {
  StateVec s;
  for (auto& f : s.u) f = ScalarField(grid, 0.0);
  return s;
}

double suggested_dt(const SystemParams& params, const PeriodicGrid& grid, double rho) {
  if (!(rho > 0.0)) throw InvalidInput("amplification estimate must be positive");
  double xmax = 0.0;
  for (double x : grid.wavenumbers()) xmax = std::max(xmax, std::abs(x));
  const double xi4 = std::pow(xmax * xmax * grid.dim(), 2);
  return 0.5 / (params.c1 * xi4 * rho);
}

// ------------------------------------------------------------ JetIntegrator

JetIntegrator::JetIntegrator(Model model, SolverConfig cfg, const StateJets& initial, Sources sources)
    : model_(std::move(model)), cfg_(std::move(cfg)), sources_(std::move(sources)) {
  if (!(cfg_.dt > 0.0)) throw InvalidInput("dt must be positive");
  grid_ = initial[0].grid_ptr();
  if (!grid_) throw InvalidInput("initial state has no grid");
  order_ = initial[0].order();
  for (const auto& j : initial) {
    if (!j.grid_ptr() || !(*j.grid_ptr() == *grid_)) throw InvalidInput("initial fields must share one grid");
    if (j.order() != order_) throw InvalidInput("initial jets must share one order");
    for (int l = 0; l <= order_; ++l)
      if (!j[l].all_finite()) throw InvalidInput("initial data must be finite");
  }
  t0_ = 0.0;
  state_ = initial;

  const std::size_t N = grid_->size();
  laplacian_.resize(N);
  Spectrum probe(grid_);
  for (std::size_t i = 0; i < N; ++i) laplacian_[i] = -probe.xi_squared(i);
  implicit_[0].resize(N);
  for (std::size_t i = 0; i < N; ++i) implicit_[0][i] = model_.params.c1 * laplacian_[i] * laplacian_[i];
  for (std::size_t f = 1; f < 4; ++f) {
    implicit_[f].resize(N);
    for (std::size_t i = 0; i < N; ++i) implicit_[f][i] = -model_.params.c2 * laplacian_[i];
  }

  const std::size_t slots = 4 * static_cast<std::size_t>(order_ + 1);
  hat_.reserve(slots);
  for (int f = 0; f < 4; ++f)
    for (int l = 0; l <= order_; ++l)
      hat_.push_back(is_zero_field(state_[static_cast<std::size_t>(f)][l])
                         ? Spectrum(grid_)
                         : to_spectrum(state_[static_cast<std::size_t>(f)][l]));

  if (!model_.potential.depends_on_time() && !model_.coupling.depends_on_time())
    frozen_coeffs_ = sample_coefficients(model_.potential, model_.coupling, grid_, 0.0);
}

const CoefficientSnapshot& JetIntegrator::coefficients_at(double t) {
  if (frozen_coeffs_) return *frozen_coeffs_;
  if (!coeffs_ || coeffs_->time != t) coeffs_ = sample_coefficients(model_.potential, model_.coupling, grid_, t);
  return *coeffs_;
}

void JetIntegrator::ensure_rhs() {
  if (rhs_ready_) return;
  const double t = time();
  NonlinearJets nl;
  try {
    nl = jet_compose(coefficients_at(t), state_);
  } catch (const BlowUp& e) {
    throw BlowUp(e.what(), steps_);
  }

  const std::size_t slots = hat_.size();
  nl_.assign(slots, Spectrum());
  rhs_.assign(slots, Spectrum());

  for (int l = 0; l <= order_; ++l) {
    ScalarField flux = nl.f0[l];
    flux += nl.g[l];
    Spectrum s = is_zero_field(flux) ? Spectrum(grid_) : to_spectrum(flux);
    for (std::size_t i = 0; i < s.coefficients().size(); ++i) s[i] *= laplacian_[i];
    if (l == 0 && sources_.u0) {
      const ScalarField src = sources_.u0(t);
      if (!is_zero_field(src)) {
        const Spectrum ss = to_spectrum(src);
        for (std::size_t i = 0; i < s.coefficients().size(); ++i) s[i] += ss[i];
      }
    }
    nl_[slot(0, l)] = std::move(s);
    for (int f = 1; f < 4; ++f) {
      const ScalarField& fi = nl.f[static_cast<std::size_t>(f - 1)][l];
      Spectrum si = is_zero_field(fi) ? Spectrum(grid_) : to_spectrum(fi);
      if (l == 0 && sources_.ui[static_cast<std::size_t>(f - 1)]) {
        const ScalarField src = sources_.ui[static_cast<std::size_t>(f - 1)](t);
        if (!is_zero_field(src)) {
          const Spectrum ss = to_spectrum(src);
          for (std::size_t i = 0; i < si.coefficients().size(); ++i) si[i] += ss[i];
        }
      }
      nl_[slot(f, l)] = std::move(si);
    }
  }
  if (cfg_.dealias)
    for (auto& s : nl_) truncate_two_thirds(s);

  for (int f = 0; f < 4; ++f) {
    const auto& A = implicit_[static_cast<std::size_t>(f)];
    for (int l = 0; l <= order_; ++l) {
      const std::size_t k = slot(f, l);
      Spectrum r(grid_);
      for (std::size_t i = 0; i < A.size(); ++i) r[i] = nl_[k][i] - A[i] * hat_[k][i];
      rhs_[k] = std::move(r);
    }
  }
  rhs_ready_ = true;
}

void JetIntegrator::advance() {
  ensure_rhs();
  const double dt = cfg_.dt;
  const bool second = cfg_.scheme == Scheme::imex2 && have_prev_;
  std::vector<Spectrum> next(hat_.size());

  for (int f = 0; f < 4; ++f) {
    const auto& A = implicit_[static_cast<std::size_t>(f)];
    for (int l = 0; l <= order_; ++l) {
      const std::size_t k = slot(f, l);
      Spectrum out(grid_);
      if (second) {
        for (std::size_t i = 0; i < A.size(); ++i)
          out[i] = (4.0 * hat_[k][i] - hat_prev_[k][i] + 2.0 * dt * (2.0 * nl_[k][i] - nl_prev_[k][i])) /
                   (3.0 + 2.0 * dt * A[i]);
      } else {
        for (std::size_t i = 0; i < A.size(); ++i) out[i] = (hat_[k][i] + dt * nl_[k][i]) / (1.0 + dt * A[i]);
      }
      next[k] = std::move(out);
    }
  }

  hat_prev_ = std::move(hat_);
  nl_prev_ = std::move(nl_);
  hat_ = std::move(next);
  have_prev_ = true;
  ++steps_;
  rhs_ready_ = false;

  for (int f = 0; f < 4; ++f) {
    for (int l = 0; l <= order_; ++l) {
      const Spectrum& s = hat_[slot(f, l)];
      ScalarField& dst = state_[static_cast<std::size_t>(f)][l];
      dst = is_zero_spectrum(s) ? ScalarField(grid_, 0.0) : to_physical_real(s);
      for (double v : dst.values()) {
        if (!(std::abs(v) <= cfg_.blowup_threshold)) {
          std::ostringstream msg;
          msg << "solution blew up at step " << steps_ << " (field u" << f;
          if (order_ > 0) msg << ", order " << l;
          msg << ", |value| > " << cfg_.blowup_threshold << ")";
          throw BlowUp(msg.str(), steps_);
        }
      }
    }
  }
}

const Spectrum& JetIntegrator::spectral_state(int f, int l) const {
  if (f < 0 || f > 3 || l < 0 || l > order_) throw InvalidInput("spectral_state: index out of range");
  return hat_[slot(f, l)];
}

const Spectrum& JetIntegrator::spectral_rhs(int f, int l) {
  if (f < 0 || f > 3 || l < 0 || l > order_) throw InvalidInput("spectral_rhs: index out of range");
  ensure_rhs();
  return rhs_[slot(f, l)];
}

StateJets JetIntegrator::time_derivative() {
  ensure_rhs();
  StateJets out;
  for (int f = 0; f < 4; ++f) {
    JetField j(grid_, order_);
    for (int l = 0; l <= order_; ++l) {
      const Spectrum& s = rhs_[slot(f, l)];
      j[l] = is_zero_spectrum(s) ? ScalarField(grid_, 0.0) : to_physical_real(s);
    }
    out[static_cast<std::size_t>(f)] = std::move(j);
  }
  return out;
}

// ------------------------------------------------------------ drivers

StateVec step(const StateVec& state, const Model& model, const SolverConfig& cfg) {
  StateJets jets;
  for (std::size_t f = 0; f < 4; ++f) {
    if (state.u[f].empty()) throw InvalidInput("state field missing");
    jets[f] = JetField::constant(state.u[f], 0);
  }
  JetIntegrator it(model, cfg, jets);
  it.advance();
  StateVec out;
  for (std::size_t f = 0; f < 4; ++f) out.u[f] = it.state()[f][0];
  out.time = state.time + cfg.dt;
  return out;
}

StepPlan plan_steps(const SolverConfig& cfg) {
  validate_config(cfg);
  StepPlan plan;
  const double ratio = cfg.final_time / cfg.dt;
  plan.total_steps = std::max(1L, std::lround(ratio));
  if (std::abs(ratio - static_cast<double>(plan.total_steps)) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "final time " << cfg.final_time << " is not a multiple of dt; snapped to "
        << static_cast<double>(plan.total_steps) * cfg.dt;
    plan.warnings.push_back(msg.str());
  }
  const double tol = 1e-9 * cfg.final_time;
  for (double t : cfg.record_times) {
    if (!(t > 0.0) || t > cfg.final_time + tol) {
      std::ostringstream msg;
      msg << "record time " << t << " outside (0, " << cfg.final_time << "]";
      throw InvalidInput(msg.str());
    }
    const double r = t / cfg.dt;
    long k = std::clamp(std::lround(r), 1L, plan.total_steps);
    if (std::abs(r - static_cast<double>(k)) > 1e-9 * std::max(1.0, r)) {
      std::ostringstream msg;
      msg << "record time " << t << " snapped to " << static_cast<double>(k) * cfg.dt;
      plan.warnings.push_back(msg.str());
    }
    if (!plan.record_steps.empty() && k <= plan.record_steps.back()) {
      if (k == plan.record_steps.back()) {
        std::ostringstream msg;
        msg << "record time " << t << " coincides with the previous one after snapping; dropped";
        plan.warnings.push_back(msg.str());
        continue;
      }
      throw InvalidInput("record times must be sorted");
    }
    plan.record_steps.push_back(k);
  }
  if (cfg.record_times.empty()) plan.record_steps.push_back(plan.total_steps);
  return plan;
}

double initial_data_norm(const StateVec& initial) {
  double s = norm(initial.u[0], NormKind::Hk(4));
  for (std::size_t i = 1; i < 4; ++i) s += norm(initial.u[i], NormKind::Hk(3));
  return s;
}

Trajectory solve_forward(const StateVec& initial, const Model& model, const SolverConfig& cfg,
                         const Sources& sources) {
  const StepPlan plan = plan_steps(cfg);
  Trajectory traj;
  traj.dt = cfg.dt;
  traj.warnings = plan.warnings;

  if (cfg.small_data_delta) {
    const double n0 = initial_data_norm(initial);
    if (n0 > *cfg.small_data_delta) {
      std::ostringstream msg;
      msg << "initial data norm " << n0 << " exceeds the small-data radius " << *cfg.small_data_delta;
      traj.warnings.push_back(msg.str());
    }
  }

  StateJets jets;
  for (std::size_t f = 0; f < 4; ++f) {
    if (initial.u[f].empty()) throw InvalidInput("initial field missing");
    jets[f] = JetField::constant(initial.u[f], 0);
  }
  JetIntegrator it(model, cfg, jets, sources);
  const PeriodicGrid& grid = *initial.u[0].grid_ptr();
  const auto w2 = weights(grid, 2), w4 = weights(grid, 4), w6 = weights(grid, 6);

  // running trapezoid sums of squared norms
  std::array<double, 8> integral{};
  std::array<double, 8> prev{};
  std::size_t next_record = 0;

  for (long n = 0;; ++n) {
    std::array<double, 8> cur{};
    cur[0] = weighted_square(it.spectral_state(0, 0), w6);
    cur[1] = weighted_square(it.spectral_rhs(0, 0), w4);
    for (int f = 1; f < 4; ++f) {
      cur[static_cast<std::size_t>(2 * f)] = weighted_square(it.spectral_state(f, 0), w4);
      cur[static_cast<std::size_t>(2 * f + 1)] = weighted_square(it.spectral_rhs(f, 0), w2);
    }
    if (n > 0)
      for (std::size_t k = 0; k < 8; ++k) integral[k] += 0.5 * cfg.dt * (prev[k] + cur[k]);
    prev = cur;

    const double t = initial.time + static_cast<double>(n) * cfg.dt;
    StepRecord rec{t, it.state()[0][0].mean(), l2_norm(it.state()[0][0]), 0.0};
    for (std::size_t f = 1; f < 4; ++f) rec.ui_l2 += l2_norm(it.state()[f][0]);
    traj.history.push_back(rec);

    if (next_record < plan.record_steps.size() && plan.record_steps[next_record] == n) {
      Snapshot snap;
      for (std::size_t f = 0; f < 4; ++f) snap.state.u[f] = it.state()[f][0];
      snap.state.time = t;
      snap.du0_dt = to_physical_real(it.spectral_rhs(0, 0));
      traj.snapshots.push_back(std::move(snap));
      ++next_record;
    }
    if (n == plan.total_steps) break;
    it.advance();
  }

  for (double v : integral) traj.aggregate += std::sqrt(v);
  return traj;
}

DiagnosticsReport diagnostics(const Trajectory& traj) {
  if (traj.history.empty()) throw InvalidInput("diagnostics need a non-empty trajectory");
  DiagnosticsReport r;
  r.history = traj.history;
  r.aggregate = traj.aggregate;
  const double m0 = traj.history.front().mass;
  for (std::size_t i = 0; i < traj.history.size(); ++i) {
    const auto& h = traj.history[i];
    r.mass_drift = std::max(r.mass_drift, std::abs(h.mass - m0));
    r.max_u0_l2 = std::max(r.max_u0_l2, h.u0_l2);
    r.max_ui_l2 = std::max(r.max_ui_l2, h.ui_l2);
    if (i > 0 && h.u0_l2 > traj.history[i - 1].u0_l2) r.u0_l2_monotone_decreasing = false;
  }
  return r;
}

// ------------------------------------------------------------ linear CH

LinearChTrajectory solve_linear_ch(const CoefficientField& b, const std::function<ScalarField(double)>& source,
                                   const ScalarField& psi, const SolverConfig& cfg) {
  if (psi.empty()) throw InvalidInput("initial field missing");
  if (!psi.all_finite()) throw InvalidInput("initial data must be finite");
  const StepPlan plan = plan_steps(cfg);
  const GridPtr& grid = psi.grid_ptr();
  const std::size_t N = grid->size();

  LinearChTrajectory traj;
  traj.dt = cfg.dt;
  traj.warnings = plan.warnings;

  std::vector<double> lap(N), bih(N);
  Spectrum hat = to_spectrum(psi);
  for (std::size_t i = 0; i < N; ++i) {
    lap[i] = -hat.xi_squared(i);
    bih[i] = lap[i] * lap[i];
  }
  const auto w1 = weights(*grid, 1);
  std::vector<double> wd(N);
  for (std::size_t i = 0; i < N; ++i) wd[i] = bih[i] * w1[i];

  const std::optional<double> bconst = b.constant_value();
  const bool bzero = bconst && *bconst == 0.0;
  std::optional<ScalarField> bfrozen;
  if (!bzero && !b.depends_on_time()) bfrozen = b.on_grid(grid, 0.0);

  auto explicit_part = [&](const Spectrum& u, double t) {
    Spectrum s(grid);
    if (!bzero) {
      ScalarField bu = bfrozen ? *bfrozen : b.on_grid(grid, t);
      bu *= to_physical_real(u);
      s = to_spectrum(bu);
      for (std::size_t i = 0; i < N; ++i) s[i] *= lap[i];
    }
    if (source) {
      const ScalarField p = source(t);
      if (!is_zero_field(p)) {
        const Spectrum ps = to_spectrum(p);
        for (std::size_t i = 0; i < N; ++i) s[i] += ps[i];
      }
    }
    if (cfg.dealias) truncate_two_thirds(s);
    return s;
  };

  Spectrum prev_hat, prev_nl;
  std::size_t next_record = 0;
  for (long n = 0;; ++n) {
    const double t = static_cast<double>(n) * cfg.dt;
    const Spectrum nl = explicit_part(hat, t);
    traj.times.push_back(t);
    traj.energy.push_back(weighted_square(hat, w1));
    traj.dissipation.push_back(weighted_square(hat, wd));

    if (next_record < plan.record_steps.size() && plan.record_steps[next_record] == n) {
      Spectrum v = hat, r(grid);
      for (std::size_t i = 0; i < N; ++i) {
        v[i] *= lap[i];
        r[i] = nl[i] - bih[i] * hat[i];
      }
      traj.snapshots.push_back({t, to_physical_real(hat), to_physical_real(v), to_physical_real(r)});
      ++next_record;
    }
    if (n == plan.total_steps) break;

    Spectrum next(grid);
    const bool second = cfg.scheme == Scheme::imex2 && n > 0;
    for (std::size_t i = 0; i < N; ++i) {
      if (second)
        next[i] = (4.0 * hat[i] - prev_hat[i] + 2.0 * cfg.dt * (2.0 * nl[i] - prev_nl[i])) /
                  (3.0 + 2.0 * cfg.dt * bih[i]);
      else
        next[i] = (hat[i] + cfg.dt * nl[i]) / (1.0 + cfg.dt * bih[i]);
    }
    prev_hat = std::move(hat);
    prev_nl = nl;
    hat = std::move(next);
    for (const auto& c : hat.coefficients())
      if (!(std::abs(c) <= cfg.blowup_threshold)) throw BlowUp("linear solve blew up", n + 1);
  }
  return traj;
}

EnergyInequalityReport check_energy_inequality(const LinearChTrajectory& traj, double rel_tol) {
  EnergyInequalityReport r;
  if (traj.energy.empty()) return r;
  r.initial = traj.energy.front();
  const double scale = r.initial > 0.0 ? r.initial : 1.0;
  double diss = 0.0;
  for (std::size_t n = 0; n + 1 < traj.energy.size(); ++n) {
    const double excess = (traj.energy[n + 1] + 2.0 * traj.dt * traj.dissipation[n + 1] - traj.energy[n]) / scale;
    r.worst_step_excess = std::max(r.worst_step_excess, excess);
    diss += traj.dissipation[n + 1];
  }
  r.accumulated = traj.energy.back() + 2.0 * traj.dt * diss;
  r.holds = r.worst_step_excess <= rel_tol && r.accumulated <= r.initial * (1.0 + rel_tol);
  return r;
}

UniquenessCheck zero_uniqueness_check(const GridPtr& grid, const Model& model, const SolverConfig& cfg,
                                      double horizon, double tol) {
  SolverConfig run = cfg;
  run.final_time = horizon;
  run.record_times.clear();
  run.small_data_delta.reset();
  UniquenessCheck out;
  try {
    const Trajectory traj = solve_forward(StateVec::zeros(grid), model, run);
    for (const auto& h : traj.history) out.sup_norm = std::max(out.sup_norm, h.u0_l2 + h.ui_l2);
  } catch (const BlowUp&) {
    out.sup_norm = std::numeric_limits<double>::infinity();
  }
  out.passed = out.sup_norm <= tol;
  return out;
}

}  // namespace chac
