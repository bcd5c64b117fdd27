#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chac/linearize.hpp"

namespace chac {

struct NoiseRecord {
  double sigma = 0.0;      ///< relative amplitude (times ||field||_inf)
  std::uint64_t seed = 0;  ///< mt19937_64 seed
};

/// Synthetic or measured data of one experiment: (u0^(l), d_t u0^(l)) at each
/// time for l = 1..max_order, together with the seed profile.
struct MeasurementBundle {
  std::string experiment_id;
  ScalarField seed;
  std::vector<double> times;
  /// orders[l-1][k] at times[k].
  std::vector<std::vector<OrderSnapshot>> orders;
  std::optional<NoiseRecord> noise;

  int max_order() const noexcept { return static_cast<int>(orders.size()); }
  const OrderSnapshot& at(int ell, std::size_t time_index) const;
  /// Throws InvalidInput when times, orders or grids are inconsistent.
  void validate() const;
};

struct ReconstructOptions {
  double tau = 1e-3;             ///< mask threshold relative to max |w|
  double min_coverage = 0.5;     ///< minimum masked fraction of the grid
  double solvability_tol = 1e-8; ///< |mean R| relative to ||R||_{L2}
  double angle_tol = 1e-3;       ///< radians, between the 1/w columns of two experiments
};

/// Ungauged single-experiment reconstruction: g^(l) = (G + c) / w on the mask.
struct GaugedProfile {
  int order = 0;
  double time = 0.0;
  std::string experiment_id;
  ScalarField G;
  ScalarField w;
  std::vector<char> mask;
  double coverage = 0.0;
  double solvability_defect = 0.0;  ///< |mean R| / ||R||_{L2}
};

struct ReconstructionResult {
  int order = 0;
  double time = 0.0;
  ScalarField estimate;    ///< zero and flagged outside the mask
  std::vector<char> mask;  ///< 1 where at least one experiment is valid
  std::vector<std::string> experiment_ids;
  std::vector<double> gauge_constants;
  double solvability_defect = 0.0;
  double fit_residual = 0.0;  ///< L2 mismatch between gauged experiments on the common mask
};

/// Validity mask |w| >= tau * max |w|; nondecreasing tau never enlarges it.
std::vector<char> division_mask(const ScalarField& w, double tau);

/// Order-l residual R of the linearized equation at bundle time `time_index`,
/// solved for G with Lap G = R. `known` supplies c1, the couplings and the
/// lower-order g^(m) (m < l); its g^(m) for m >= l are ignored.
GaugedProfile reconstruct_order(int ell, const MeasurementBundle& bundle, std::size_t time_index, const Model& known,
                                const ReconstructOptions& opts = {});

/// Least-squares gauge over two or more experiments plus the fused estimate.
ReconstructionResult resolve_gauge(const std::vector<GaugedProfile>& profiles, const ReconstructOptions& opts = {});

/// One-experiment gauge from a known value g^(l)(x0) at grid point `flat`.
ReconstructionResult anchor_gauge(const GaugedProfile& profile, std::size_t flat, double value);

struct Anchor {
  std::size_t flat = 0;
  double value = 0.0;
};

/// reconstruct_order over all bundles followed by resolve_gauge, or anchor_gauge
/// when a single bundle and an anchor are given.
ReconstructionResult reconstruct_single_shot(int ell, const std::vector<MeasurementBundle>& bundles,
                                             std::size_t time_index, const Model& known,
                                             const ReconstructOptions& opts = {},
                                             const std::optional<Anchor>& anchor = std::nullopt);

struct ConstantFourierResult {
  double value = 0.0;
  std::vector<int> xi1;  ///< integer frequency of the selected mode
  double spread = 0.0;   ///< max - min over admissible modes
  std::size_t modes_used = 0;
};

/// Closed-form recovery of a constant g^(1) from one Fourier mode of the
/// order-1 data, valid for constant c1000 and g^(1).
ConstantFourierResult reconstruct_constant_fourier(const ScalarField& seed, const ScalarField& u1, double t1,
                                                   double c1, double c1000, double floor = 1e-8);

struct TimeDependentResult {
  int order = 0;
  std::vector<double> nodes;  ///< successful times
  std::vector<ReconstructionResult> per_time;
  std::vector<std::pair<double, std::string>> failed;
  std::vector<char> mask;  ///< intersection of the per-time masks
  double final_time = 0.0;
  /// B * max_{[0,T]} |prod (t - t_i)| / (N+1)! for the degree-N interpolant
  /// through the N+1 successful nodes; B bounds the (N+1)-th time derivative.
  double remainder_bound = 0.0;

  /// Interpolated estimate at time t (zero outside the mask).
  ScalarField evaluate(double t) const;
};

TimeDependentResult reconstruct_time_dependent(int ell, const std::vector<MeasurementBundle>& bundles,
                                               const Model& known, double derivative_bound, double final_time,
                                               const ReconstructOptions& opts = {},
                                               const std::optional<Anchor>& anchor = std::nullopt);

/// Equispaced nodes t_i = T * i / N, i = 1..N.
std::vector<double> suggested_nodes(double final_time, int count);

/// Runs solve_cascade on the truth model and samples every order at `times`,
/// with optional Gaussian perturbation sigma * ||field||_inf per field.
MeasurementBundle generate_measurements(const Model& truth, const ScalarField& seed, const std::vector<double>& times,
                                        int orders, const SolverConfig& cfg, std::string experiment_id,
                                        const std::optional<NoiseRecord>& noise = std::nullopt);

}  // namespace chac
