#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chac/forward.hpp"

namespace chac {

/// u0^(l)(., t) and its right-hand-side time derivative at one record time.
struct OrderSnapshot {
  double time = 0.0;
  ScalarField u0;
  ScalarField du0_dt;
};

struct CascadeResult {
  ScalarField seed;
  int order = 0;
  double dt = 0.0;
  std::vector<double> times;
  /// orders[l-1][k] holds u0^(l) at times[k].
  std::vector<std::vector<OrderSnapshot>> orders;
  /// max over i, l and every step of ||u_i^(l)||_{L2}.
  double vanishing_residual = 0.0;
  std::vector<std::string> warnings;

  const OrderSnapshot& at(int ell, std::size_t time_index) const;
};

/// Propagates the state jet (eps * seed, 0, 0, 0) through the IMEX scheme and
/// returns u0^(l) = l! * a_l for l = 1..n at the requested times (the final
/// time when `times` is empty). Throws InvalidInput when the order-parameter
/// jets fail to vanish within `vanishing_tol`.
CascadeResult solve_cascade(const ScalarField& seed, const Model& model, int n, const std::vector<double>& times,
                            const SolverConfig& cfg, double vanishing_tol = 1e-10);

/// Central finite-difference weights on the nodes -m..m (unit spacing) for
/// the given derivative order (Fornberg's recursion).
std::vector<double> central_fd_weights(int half_width, int derivative);

struct FdProbeResult {
  double eps0 = 0.0;
  std::vector<double> times;
  /// estimates[l-1][k] approximates u0^(l) at times[k].
  std::vector<std::vector<ScalarField>> estimates;
  std::vector<std::string> warnings;
};

/// Runs 2n+1 nonlinear solves with initial u0 = eps * seed, eps in
/// {-n eps0, ..., n eps0}, concurrently, and differentiates in eps.
FdProbeResult fd_epsilon_probe(const ScalarField& seed, const Model& model, double eps0, int n,
                               const std::vector<double>& times, const SolverConfig& cfg, int jobs = 0);

struct TaylorReport {
  int order = 0;
  double time = 0.0;
  std::vector<double> eps;
  std::vector<double> residuals;
  std::optional<double> slope;
  bool slope_skipped = false;
  std::string notice;
};

/// r(eps) = ||u0(eps) - sum_{l<=n} eps^l u0^(l) / l!||_{L2} at cascade time
/// `time_index`, with the log-log slope fitted by least squares. When every
/// residual sits at the roundoff floor (relative `floor`) the slope is skipped.
TaylorReport taylor_consistency_check(const ScalarField& seed, const Model& model, const CascadeResult& cascade,
                                      const std::vector<double>& eps_list, int n, std::size_t time_index,
                                      const SolverConfig& cfg, double floor = 1e-10);

}  // namespace chac
