#include "chac/linearize.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

#include "chac/error.hpp"

namespace chac {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

bool all_zero(const ScalarField& f) {
  for (double v : f.values())
    if (v != 0.0) return false;
  return true;
}

// Solution u0 at the planned record steps for initial data (eps*seed, 0, 0, 0).
std::vector<ScalarField> scaled_solve(const ScalarField& seed, double eps, const Model& model,
                                      const SolverConfig& cfg) {
  StateVec init = StateVec::zeros(seed.grid_ptr());
  init.u[0] = seed * eps;
  const Trajectory traj = solve_forward(init, model, cfg);
  std::vector<ScalarField> out;
  out.reserve(traj.snapshots.size());
  for (const auto& s : traj.snapshots) out.push_back(s.state.u[0]);
  return out;
}

}  // namespace

const OrderSnapshot& CascadeResult::at(int ell, std::size_t time_index) const {
  if (ell < 1 || ell > order) throw InvalidInput("cascade order out of range");
  const auto& row = orders[static_cast<std::size_t>(ell - 1)];
  if (time_index >= row.size()) throw InvalidInput("cascade time index out of range");
  return row[time_index];
}

CascadeResult solve_cascade(const ScalarField& seed, const Model& model, int n, const std::vector<double>& times,
                            const SolverConfig& cfg, double vanishing_tol) {
  if (seed.empty() || all_zero(seed)) throw InvalidInput("cascade seed must not vanish identically");
  if (!seed.all_finite()) throw InvalidInput("cascade seed must be finite");
  if (n < 1) throw InvalidInput("cascade order must be at least 1");
  if (n > model.potential.order())
    throw InvalidInput("cascade order exceeds the truncation order of the potential series");

  SolverConfig run = cfg;
  run.record_times = times;
  const StepPlan plan = plan_steps(run);

  CascadeResult res;
  res.seed = seed;
  res.order = n;
  res.dt = cfg.dt;
  res.warnings = plan.warnings;
  res.orders.assign(static_cast<std::size_t>(n), {});

  const GridPtr& grid = seed.grid_ptr();
  StateJets jets{JetField::linear_seed(seed, n), JetField(grid, n), JetField(grid, n), JetField(grid, n)};
  JetIntegrator it(model, run, jets);

  std::size_t next = 0;
  for (long s = 0;; ++s) {
    for (std::size_t f = 1; f < 4; ++f)
      for (int l = 1; l <= n; ++l)
        res.vanishing_residual =
            std::max(res.vanishing_residual, factorial(l) * l2_norm(it.state()[f][l]));

    if (next < plan.record_steps.size() && plan.record_steps[next] == s) {
      const double t = static_cast<double>(s) * cfg.dt;
      res.times.push_back(t);
      for (int l = 1; l <= n; ++l) {
        OrderSnapshot snap;
        snap.time = t;
        snap.u0 = it.state()[0].derivative(l);
        snap.du0_dt = to_physical_real(it.spectral_rhs(0, l)) * factorial(l);
        res.orders[static_cast<std::size_t>(l - 1)].push_back(std::move(snap));
      }
      ++next;
    }
    if (s == plan.total_steps) break;
    it.advance();
  }

  if (res.vanishing_residual > vanishing_tol) {
    std::ostringstream msg;
    msg << "order-parameter linearizations do not vanish (max L2 norm " << res.vanishing_residual
        << "); the couplings contain pure-concentration terms";
    throw InvalidInput(msg.str());
  }
  return res;
}

std::vector<double> central_fd_weights(int half_width, int derivative) {
  if (half_width < 1 || derivative < 0 || derivative > 2 * half_width)
    throw InvalidInput("invalid finite-difference stencil");
  const int npts = 2 * half_width + 1;
  const int m = derivative;
  std::vector<double> x(static_cast<std::size_t>(npts));
  for (int i = 0; i < npts; ++i) x[static_cast<std::size_t>(i)] = i - half_width;

  // delta[k][j] for the current node count, Fornberg (1988)
  std::vector<std::vector<double>> d(static_cast<std::size_t>(m + 1), std::vector<double>(static_cast<std::size_t>(npts), 0.0));
  d[0][0] = 1.0;
  double c1 = 1.0;
  for (int i = 1; i < npts; ++i) {
    double c2 = 1.0;
    const int mn = std::min(i, m);
    for (int j = 0; j < i; ++j) {
      const double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
      c2 *= c3;
      for (int k = mn; k >= 0; --k) {
        const auto uk = static_cast<std::size_t>(k);
        if (j == i - 1) {
          const double prev = k > 0 ? d[uk - 1][static_cast<std::size_t>(i - 1)] : 0.0;
          d[uk][static_cast<std::size_t>(i)] = c1 * (k * prev - x[static_cast<std::size_t>(i - 1)] * d[uk][static_cast<std::size_t>(i - 1)]) / c2;
        }
        const double prev = k > 0 ? d[uk - 1][static_cast<std::size_t>(j)] : 0.0;
        d[uk][static_cast<std::size_t>(j)] = (x[static_cast<std::size_t>(i)] * d[uk][static_cast<std::size_t>(j)] - k * prev) / c3;
      }
    }
    c1 = c2;
  }
  return d[static_cast<std::size_t>(m)];
}

FdProbeResult fd_epsilon_probe(const ScalarField& seed, const Model& model, double eps0, int n,
                               const std::vector<double>& times, const SolverConfig& cfg, int jobs) {
  if (!(eps0 > 0.0)) throw InvalidInput("probe step must be positive");
  if (n < 1) throw InvalidInput("probe order must be at least 1");
  if (seed.empty()) throw InvalidInput("probe seed missing");

  SolverConfig run = cfg;
  run.record_times = times;
  const StepPlan plan = plan_steps(run);

  FdProbeResult out;
  out.eps0 = eps0;
  for (long s : plan.record_steps) out.times.push_back(static_cast<double>(s) * cfg.dt);
  if (eps0 < 1e-4) {
    std::ostringstream msg;
    msg << "probe step " << eps0 << " is below 1e-4; finite differences suffer from cancellation";
    out.warnings.push_back(msg.str());
  }

  const int npts = 2 * n + 1;
  std::vector<std::vector<ScalarField>> runs(static_cast<std::size_t>(npts));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int limit = std::max(1, jobs > 0 ? jobs : static_cast<int>(hw));
  for (int start = 0; start < npts; start += limit) {
    std::vector<std::future<std::vector<ScalarField>>> pending;
    const int stop = std::min(npts, start + limit);
    for (int j = start; j < stop; ++j) {
      const double eps = (j - n) * eps0;
      pending.push_back(std::async(std::launch::async, [&, eps] { return scaled_solve(seed, eps, model, run); }));
    }
    for (int j = start; j < stop; ++j) runs[static_cast<std::size_t>(j)] = pending[static_cast<std::size_t>(j - start)].get();
  }

  out.estimates.assign(static_cast<std::size_t>(n), {});
  for (int l = 1; l <= n; ++l) {
    const auto w = central_fd_weights(n, l);
    const double scale = 1.0 / std::pow(eps0, l);
    for (std::size_t k = 0; k < out.times.size(); ++k) {
      ScalarField acc(seed.grid_ptr(), 0.0);
      for (int j = 0; j < npts; ++j) {
        const double wj = w[static_cast<std::size_t>(j)];
        if (wj != 0.0) acc += runs[static_cast<std::size_t>(j)][k] * wj;
      }
      acc *= scale;
      out.estimates[static_cast<std::size_t>(l - 1)].push_back(std::move(acc));
    }
  }
  return out;
}

TaylorReport taylor_consistency_check(const ScalarField& seed, const Model& model, const CascadeResult& cascade,
                                      const std::vector<double>& eps_list, int n, std::size_t time_index,
                                      const SolverConfig& cfg, double floor) {
  if (n < 1 || n > cascade.order) throw InvalidInput("Taylor order exceeds the cascade order");
  if (time_index >= cascade.times.size()) throw InvalidInput("cascade time index out of range");
  if (eps_list.size() < 2) throw InvalidInput("Taylor check needs at least two eps values");

  TaylorReport rep;
  rep.order = n;
  rep.time = cascade.times[time_index];
  SolverConfig run = cfg;
  run.record_times = {rep.time};

  bool at_floor = true;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw InvalidInput("eps values must be positive");
    const ScalarField u = scaled_solve(seed, eps, model, run).front();
    ScalarField r = u;
    for (int l = 1; l <= n; ++l) r -= cascade.at(l, time_index).u0 * (std::pow(eps, l) / factorial(l));
    const double rn = l2_norm(r);
    rep.eps.push_back(eps);
    rep.residuals.push_back(rn);
    if (rn > floor * std::max(l2_norm(u), 1e-300)) at_floor = false;
  }

  if (at_floor) {
    rep.slope_skipped = true;
    rep.notice = "Taylor remainder at the roundoff floor for every eps; slope test skipped";
    return rep;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(rep.eps.size());
  for (std::size_t i = 0; i < rep.eps.size(); ++i) {
    const double x = std::log(rep.eps[i]);
    const double y = std::log(std::max(rep.residuals[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return rep;
}

}  // namespace chac
