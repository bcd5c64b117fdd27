#include "chac/invert.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "chac/error.hpp"
#include "chac/interpolation.hpp"

namespace chac {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what) {
  if (a.empty() || b.empty() || !(a.grid() == b.grid())) throw InvalidInput(std::string(what) + ": grid mismatch");
}

}  // namespace

const OrderSnapshot& MeasurementBundle::at(int ell, std::size_t time_index) const {
  if (ell < 1 || ell > max_order()) throw InvalidInput("bundle has no data for the requested order");
  const auto& row = orders[static_cast<std::size_t>(ell - 1)];
  if (time_index >= row.size()) throw InvalidInput("bundle time index out of range");
  return row[time_index];
}

void MeasurementBundle::validate() const {
  if (times.empty()) throw InvalidInput("bundle needs at least one time");
  if (orders.empty()) throw InvalidInput("bundle needs order-1 data");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0)) throw InvalidInput("bundle times must be positive");
    if (k > 0 && !(times[k] > times[k - 1])) throw InvalidInput("bundle times must be strictly increasing");
  }
  if (seed.empty()) throw InvalidInput("bundle seed missing");
  for (const auto& row : orders) {
    if (row.size() != times.size()) throw InvalidInput("bundle order data must cover every time");
    for (std::size_t k = 0; k < row.size(); ++k) {
      require_same_grid(seed, row[k].u0, "bundle");
      require_same_grid(seed, row[k].du0_dt, "bundle");
      if (row[k].time != times[k]) throw InvalidInput("bundle snapshot time mismatch");
    }
  }
}

std::vector<char> division_mask(const ScalarField& w, double tau) {
  const double cut = tau * w.max_abs();
  std::vector<char> m(w.size(), 0);
  for (std::size_t i = 0; i < w.size(); ++i) m[i] = (w[i] != 0.0 && std::abs(w[i]) >= cut) ? 1 : 0;
  return m;
}

GaugedProfile reconstruct_order(int ell, const MeasurementBundle& bundle, std::size_t time_index, const Model& known,
                                const ReconstructOptions& opts) {
  if (ell < 1) throw InvalidInput("reconstruction order must be at least 1");
  const OrderSnapshot& data = bundle.at(ell, time_index);
  const double t = data.time;
  const GridPtr& grid = data.u0.grid_ptr();

  PotentialSeries lower(ell);
  for (int m = 1; m < ell && m <= known.potential.order(); ++m)
    if (const auto* c = known.potential.coefficient(m)) lower.set(m, *c);

  StateJets jets{JetField(grid, ell), JetField(grid, ell), JetField(grid, ell), JetField(grid, ell)};
  for (int m = 1; m <= ell; ++m) jets[0][m] = bundle.at(m, time_index).u0 * (1.0 / factorial(m));
  const NonlinearJets nl = jet_compose(lower, known.coupling, t, jets);
  ScalarField F = nl.f0[ell];
  F += nl.g[ell];
  F *= factorial(ell);

  const Spectrum du = to_spectrum(data.du0_dt);
  const Spectrum u = to_spectrum(data.u0);
  const Spectrum Fs = to_spectrum(F);
  Spectrum R(grid);
  double n_du = 0.0, n_bih = 0.0, n_flux = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double x2 = R.xi_squared(i);
    const auto bih = known.params.c1 * x2 * x2 * u[i];
    const auto flux = x2 * Fs[i];
    R[i] = du[i] + bih + flux;
    n_du += std::norm(du[i]);
    n_bih += std::norm(bih);
    n_flux += std::norm(flux);
  }
  const double vol = grid->volume();
  const double scale = std::sqrt(vol) * (std::sqrt(n_du) + std::sqrt(n_bih) + std::sqrt(n_flux));

  GaugedProfile out;
  out.order = ell;
  out.time = t;
  out.experiment_id = bundle.experiment_id;
  out.solvability_defect = scale > 0.0 ? std::abs(R[0]) * std::sqrt(vol) / scale : 0.0;
  if (out.solvability_defect > opts.solvability_tol) {
    std::ostringstream msg;
    msg << "order-" << ell << " residual at t=" << t << " has mean defect " << out.solvability_defect
        << " above tolerance " << opts.solvability_tol << " (experiment " << bundle.experiment_id << ")";
    throw InconsistentMeasurement(msg.str());
  }
  R[0] = 0.0;
  out.G = solve_poisson_periodic(to_physical_real(R), std::numeric_limits<double>::infinity()).solution;

  const ScalarField& u1 = bundle.at(1, time_index).u0;
  out.w = ScalarField(grid, 1.0);
  for (int m = 0; m < ell; ++m) out.w *= u1;
  out.mask = division_mask(out.w, opts.tau);
  out.coverage = static_cast<double>(std::count(out.mask.begin(), out.mask.end(), 1)) / static_cast<double>(grid->size());
  if (out.coverage < opts.min_coverage) {
    std::ostringstream msg;
    msg << "division mask covers only " << 100.0 * out.coverage << "% of the domain at t=" << t
        << "; choose a seed profile whose order-1 response stays away from zero, e.g. 1 + cos(pi x)";
    throw IllPosed(msg.str());
  }
  return out;
}

ReconstructionResult resolve_gauge(const std::vector<GaugedProfile>& profiles, const ReconstructOptions& opts) {
  const std::size_t K = profiles.size();
  if (K < 2) throw InvalidInput("gauge resolution needs at least two experiments");
  const GridPtr& grid = profiles[0].G.grid_ptr();
  for (const auto& p : profiles) {
    require_same_grid(profiles[0].G, p.G, "resolve_gauge");
    if (p.order != profiles[0].order) throw InvalidInput("resolve_gauge: profiles of different orders");
  }
  const std::size_t N = grid->size();

  Eigen::MatrixXd AtA = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  Eigen::VectorXd Atb = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = a + 1; b < K; ++b) {
      const auto& P = profiles[a];
      const auto& Q = profiles[b];
      double pp = 0.0, qq = 0.0, pq = 0.0;
      std::size_t common = 0;
      for (std::size_t i = 0; i < N; ++i) {
        if (!P.mask[i] || !Q.mask[i]) continue;
        ++common;
        const double p = 1.0 / P.w[i], q = -1.0 / Q.w[i];
        const double rhs = Q.G[i] / Q.w[i] - P.G[i] / P.w[i];
        pp += p * p;
        qq += q * q;
        pq += p * q;
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        AtA(ia, ia) += p * p;
        AtA(ib, ib) += q * q;
        AtA(ia, ib) += p * q;
        AtA(ib, ia) += p * q;
        Atb(ia) += p * rhs;
        Atb(ib) += q * rhs;
      }
      if (common == 0) throw DegenerateGauge("experiments " + P.experiment_id + " and " + Q.experiment_id +
                                             " share no valid points");
      const double cosang = std::min(1.0, std::abs(pq) / std::sqrt(pp * qq));
      const double angle = std::acos(cosang);
      if (!(angle >= opts.angle_tol)) {
        std::ostringstream msg;
        msg << "experiments " << P.experiment_id << " and " << Q.experiment_id
            << " have proportional weights (angle " << angle << " rad); use seeds with different shapes";
        throw DegenerateGauge(msg.str());
      }
    }
  }
  const Eigen::VectorXd c = AtA.ldlt().solve(Atb);

  ReconstructionResult res;
  res.order = profiles[0].order;
  res.time = profiles[0].time;
  res.estimate = ScalarField(grid, 0.0);
  res.mask.assign(N, 0);
  for (std::size_t a = 0; a < K; ++a) {
    res.gauge_constants.push_back(c(static_cast<Eigen::Index>(a)));
    res.experiment_ids.push_back(profiles[a].experiment_id);
    res.solvability_defect = std::max(res.solvability_defect, profiles[a].solvability_defect);
  }
  for (std::size_t i = 0; i < N; ++i) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t a = 0; a < K; ++a) {
      if (!profiles[a].mask[i]) continue;
      sum += (profiles[a].G[i] + res.gauge_constants[a]) / profiles[a].w[i];
      ++count;
    }
    if (count > 0) {
      res.estimate[i] = sum / count;
      res.mask[i] = 1;
    }
  }
  double fit = 0.0;
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a + 1; b < K; ++b)
      for (std::size_t i = 0; i < N; ++i) {
        if (!profiles[a].mask[i] || !profiles[b].mask[i]) continue;
        const double d = (profiles[a].G[i] + res.gauge_constants[a]) / profiles[a].w[i] -
                         (profiles[b].G[i] + res.gauge_constants[b]) / profiles[b].w[i];
        fit += d * d;
      }
  res.fit_residual = std::sqrt(fit * grid->cell_volume());
  return res;
}

ReconstructionResult anchor_gauge(const GaugedProfile& profile, std::size_t flat, double value) {
  const std::size_t N = profile.G.size();
  if (flat >= N) throw InvalidInput("anchor point outside the grid");
  if (!profile.mask[flat]) throw IllPosed("anchor point lies outside the division mask");
  ReconstructionResult res;
  res.order = profile.order;
  res.time = profile.time;
  res.experiment_ids = {profile.experiment_id};
  const double c = value * profile.w[flat] - profile.G[flat];
  res.gauge_constants = {c};
  res.solvability_defect = profile.solvability_defect;
  res.mask = profile.mask;
  res.estimate = ScalarField(profile.G.grid_ptr(), 0.0);
  for (std::size_t i = 0; i < N; ++i)
    if (profile.mask[i]) res.estimate[i] = (profile.G[i] + c) / profile.w[i];
  res.estimate[flat] = value;
  return res;
}

ReconstructionResult reconstruct_single_shot(int ell, const std::vector<MeasurementBundle>& bundles,
                                             std::size_t time_index, const Model& known,
                                             const ReconstructOptions& opts, const std::optional<Anchor>& anchor) {
  if (bundles.empty()) throw InvalidInput("reconstruction needs at least one bundle");
  std::vector<std::future<GaugedProfile>> pending;
  for (const auto& b : bundles)
    pending.push_back(std::async(std::launch::async, [&, ell, time_index] {
      return reconstruct_order(ell, b, time_index, known, opts);
    }));
  std::vector<GaugedProfile> profiles;
  for (auto& f : pending) profiles.push_back(f.get());
  if (profiles.size() == 1) {
    if (!anchor) throw DegenerateGauge("a single experiment needs an anchor value to fix the gauge");
    return anchor_gauge(profiles[0], anchor->flat, anchor->value);
  }
  return resolve_gauge(profiles, opts);
}

ConstantFourierResult reconstruct_constant_fourier(const ScalarField& seed, const ScalarField& u1, double t1,
                                                   double c1, double c1000, double floor) {
  require_same_grid(seed, u1, "reconstruct_constant_fourier");
  if (!(t1 > 0.0)) throw InvalidInput("measurement time must be positive");
  const Spectrum fp = to_spectrum(seed);
  const Spectrum fu = to_spectrum(u1);
  double max_u = 0.0, max_p = 0.0;
  for (std::size_t i = 1; i < fu.coefficients().size(); ++i) {
    max_u = std::max(max_u, std::abs(fu[i]));
    max_p = std::max(max_p, std::abs(fp[i]));
  }
  ConstantFourierResult res;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, best = -1.0;
  std::size_t best_slot = 0;
  for (std::size_t i = 1; i < fu.coefficients().size(); ++i) {
    const double au = std::abs(fu[i]), ap = std::abs(fp[i]);
    if (au == 0.0 || ap == 0.0 || au < floor * max_u || ap < floor * max_p) continue;
    const double x2 = fu.xi_squared(i);
    const double g = (std::log(ap) - std::log(au) - c1 * t1 * x2 * x2 - c1000 * t1 * x2) / (t1 * x2);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
    ++res.modes_used;
    if (au > best) {
      best = au;
      best_slot = i;
      res.value = g;
    }
  }
  if (res.modes_used == 0)
    throw IllPosed("no nonzero Fourier mode of the data is usable; choose a seed such as 1 + cos(pi x)");
  res.spread = hi - lo;
  const PeriodicGrid& g = seed.grid();
  int idx[3];
  g.unravel(best_slot, idx);
  for (int a = 0; a < g.dim(); ++a) res.xi1.push_back(g.frequency(idx[a]));
  return res;
}

ScalarField TimeDependentResult::evaluate(double t) const {
  if (nodes.empty()) throw InvalidInput("no successful reconstruction times to interpolate");
  const BarycentricInterpolator interp(nodes);
  const auto l = interp.basis(t);
  ScalarField out(per_time[0].estimate.grid_ptr(), 0.0);
  for (std::size_t k = 0; k < l.size(); ++k) out += per_time[k].estimate * l[k];
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!mask[i]) out[i] = 0.0;
  return out;
}

TimeDependentResult reconstruct_time_dependent(int ell, const std::vector<MeasurementBundle>& bundles,
                                               const Model& known, double derivative_bound, double final_time,
                                               const ReconstructOptions& opts, const std::optional<Anchor>& anchor) {
  if (bundles.empty()) throw InvalidInput("reconstruction needs at least one bundle");
  if (!(derivative_bound >= 0.0)) throw InvalidInput("derivative bound must be non-negative");
  const auto& times = bundles[0].times;
  for (const auto& b : bundles) {
    b.validate();
    if (b.times != times) throw InvalidInput("all experiments must share the measurement times");
  }
  if (!(final_time >= times.back())) throw InvalidInput("final time precedes the last measurement time");

  TimeDependentResult res;
  res.order = ell;
  res.final_time = final_time;
  for (std::size_t k = 0; k < times.size(); ++k) {
    try {
      res.per_time.push_back(reconstruct_single_shot(ell, bundles, k, known, opts, anchor));
      res.nodes.push_back(times[k]);
    } catch (const Error& e) {
      res.failed.emplace_back(times[k], e.what());
    }
  }
  if (res.nodes.empty()) return res;
  res.mask.assign(res.per_time[0].mask.size(), 1);
  for (const auto& r : res.per_time)
    for (std::size_t i = 0; i < r.mask.size(); ++i) res.mask[i] = res.mask[i] && r.mask[i];
  res.remainder_bound = derivative_bound * max_nodal_polynomial(res.nodes, 0.0, final_time) /
                        factorial(static_cast<int>(res.nodes.size()));
  return res;
}

std::vector<double> suggested_nodes(double final_time, int count) {
  if (count < 1 || !(final_time > 0.0)) throw InvalidInput("need a positive final time and node count");
  std::vector<double> t;
  for (int i = 1; i <= count; ++i) t.push_back(final_time * i / count);
  return t;
}

MeasurementBundle generate_measurements(const Model& truth, const ScalarField& seed, const std::vector<double>& times,
                                        int orders, const SolverConfig& cfg, std::string experiment_id,
                                        const std::optional<NoiseRecord>& noise) {
  if (times.empty()) throw InvalidInput("measurement times missing");
  for (double t : times)
    if (!(t > 0.0) || t > cfg.final_time * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "measurement time " << t << " outside (0, " << cfg.final_time << "]";
      throw InvalidInput(msg.str());
    }
  CascadeResult c = solve_cascade(seed, truth, orders, times, cfg);
  MeasurementBundle b;
  b.experiment_id = std::move(experiment_id);
  b.seed = seed;
  b.times = c.times;
  b.orders = std::move(c.orders);
  if (noise && noise->sigma > 0.0) {
    std::mt19937_64 rng(noise->seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto perturb = [&](ScalarField& f) {
      const double amp = noise->sigma * f.max_abs();
      for (double& v : f.values()) v += amp * normal(rng);
    };
    for (auto& row : b.orders)
      for (auto& s : row) {
        perturb(s.u0);
        perturb(s.du0_dt);
      }
  }
  if (noise) b.noise = noise;
  return b;
}

}  // namespace chac
