#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chac/potentials.hpp"
#include "chac/spectral.hpp"

namespace chac {

enum class Scheme { imex1, imex2 };

struct SolverConfig {
  double dt = 1e-4;
  Scheme scheme = Scheme::imex1;
  double final_time = 0.1;
  bool dealias = false;
  /// Sorted times in (0, final_time]; snapped to multiples of dt.
  std::vector<double> record_times;
  /// Warn when the initial data exceed this small-data radius.
  std::optional<double> small_data_delta;
  double blowup_threshold = 1e10;
};

/// Known physics of the coupled system: constants, potential g, couplings f0..f3.
struct Model {
  SystemParams params;
  PotentialSeries potential{1};
  CouplingSeries coupling{1};
};

/// Optional explicit forcing added to the right-hand sides (u0 then u1..u3).
struct Sources {
  std::function<ScalarField(double)> u0;
  std::array<std::function<ScalarField(double)>, 3> ui;
};

struct StateVec {
  StateFields u;  ///< u[0] concentration, u[1..3] order parameters
  double time = 0.0;

  static StateVec zeros(const GridPtr& grid);
};

/// Semi-implicit time stepper acting on truncated epsilon-series of states.
///
/// The stiff parts (c1 biharmonic for u0, c2 Laplacian for u1..u3) are
/// implicit and diagonal in Fourier space; the nonlinear fluxes come from
/// jet_compose and are explicit. imex1 is backward/forward Euler, imex2 is
/// SBDF2 with extrapolated explicit terms and an imex1 start-up step. Since
/// the scheme is linear in the implicit part, coefficient l of the stepped jet
/// is exactly the l-th epsilon derivative of the discrete nonlinear solution.
/// An order-0 jet is the plain forward solve.
class JetIntegrator {
 public:
  JetIntegrator(Model model, SolverConfig cfg, const StateJets& initial, Sources sources = {});

  void advance();

  double time() const noexcept { return t0_ + static_cast<double>(steps_) * cfg_.dt; }
  long steps_taken() const noexcept { return steps_; }
  int order() const noexcept { return order_; }
  const StateJets& state() const noexcept { return state_; }
  const Model& model() const noexcept { return model_; }

  /// Continuous right-hand side at the current state, per field and order.
  StateJets time_derivative();

  /// Spectrum of field f (0..3) at jet order l; rhs() is the full right-hand side.
  const Spectrum& spectral_state(int f, int l) const;
  const Spectrum& spectral_rhs(int f, int l);

 private:
  void ensure_rhs();
  const CoefficientSnapshot& coefficients_at(double t);
  std::size_t slot(int f, int l) const { return static_cast<std::size_t>(f * (order_ + 1) + l); }

  Model model_;
  SolverConfig cfg_;
  Sources sources_;
  GridPtr grid_;
  int order_;
  double t0_;
  long steps_ = 0;

  std::array<std::vector<double>, 4> implicit_;  // diagonal implicit symbol per field
  std::vector<double> laplacian_;

  StateJets state_;
  std::vector<Spectrum> hat_;       // current state
  std::vector<Spectrum> hat_prev_;  // previous state (imex2)
  std::vector<Spectrum> nl_;        // explicit terms at current state
  std::vector<Spectrum> nl_prev_;
  std::vector<Spectrum> rhs_;
  bool rhs_ready_ = false;
  bool have_prev_ = false;

  std::optional<CoefficientSnapshot> frozen_coeffs_;
  std::optional<CoefficientSnapshot> coeffs_;
};

/// Explicit-part stability guard dt <= 0.5 / (c1 * |xi_max|^4 * rho), where rho
/// estimates the amplification of the nonlinear flux. Advisory only.
double suggested_dt(const SystemParams& params, const PeriodicGrid& grid, double rho = 1.0);

/// Advances a state by one step. For imex2 this is the start-up (imex1) step.
StateVec step(const StateVec& state, const Model& model, const SolverConfig& cfg);

struct Snapshot {
  StateVec state;
  ScalarField du0_dt;  ///< right-hand-side evaluation at the snapshot
};

struct StepRecord {
  double time;
  double mass;      ///< mean of u0
  double u0_l2;
  double ui_l2;     ///< sum over the order parameters
};

struct Trajectory {
  double dt = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<StepRecord> history;
  /// Time integral behind the small-data energy bound (q = 2):
  /// ||u0||_{L2 H6} + ||d_t u0||_{L2 H4} + sum_i (||u_i||_{L2 H4} + ||d_t u_i||_{L2 H2}).
  double aggregate = 0.0;
  std::vector<std::string> warnings;
};

/// Integer step counts for the record times and final time; out-of-grid
/// times are snapped with a warning, times outside (0, T] are rejected.
struct StepPlan {
  long total_steps;
  std::vector<long> record_steps;
  std::vector<std::string> warnings;
};
StepPlan plan_steps(const SolverConfig& cfg);

Trajectory solve_forward(const StateVec& initial, const Model& model, const SolverConfig& cfg,
                         const Sources& sources = {});

/// Small-data norm ||phi0||_{H4} + sum_i ||phi_i||_{H3} (q = 2).
double initial_data_norm(const StateVec& initial);

struct DiagnosticsReport {
  double mass_drift = 0.0;
  double max_u0_l2 = 0.0;
  double max_ui_l2 = 0.0;
  bool u0_l2_monotone_decreasing = true;
  double aggregate = 0.0;
  std::vector<StepRecord> history;
};

DiagnosticsReport diagnostics(const Trajectory& traj);

// ------------------------------------------------------------ linear CH

struct LinearChSnapshot {
  double time;
  ScalarField u;
  ScalarField v;      ///< Laplacian of u
  ScalarField du_dt;  ///< right-hand-side evaluation
};

struct LinearChTrajectory {
  double dt = 0.0;
  std::vector<LinearChSnapshot> snapshots;
  std::vector<double> times;
  std::vector<double> energy;       ///< ||u||^2 + ||grad u||^2 per step
  std::vector<double> dissipation;  ///< ||v||^2 + ||grad v||^2 per step
  std::vector<std::string> warnings;
};

/// u_t = -Lap^2 u + Lap(b u) + p with v = Lap u, for unit biharmonic weight
/// (general weights reduce to this by rescaling x by its fourth root).
LinearChTrajectory solve_linear_ch(const CoefficientField& b, const std::function<ScalarField(double)>& source,
                                   const ScalarField& psi, const SolverConfig& cfg);

struct EnergyInequalityReport {
  bool holds = true;
  double worst_step_excess = 0.0;  ///< max_n (E_{n+1} + 2 dt D_{n+1} - E_n) / E_0
  double accumulated = 0.0;        ///< E_N + 2 dt sum_{n>=1} D_n
  double initial = 0.0;            ///< E_0
};

/// Discrete dissipation inequality E_{n+1} + 2 dt D_{n+1} <= E_n (b = 0, p = 0).
EnergyInequalityReport check_energy_inequality(const LinearChTrajectory& traj, double rel_tol = 1e-12);

struct UniquenessCheck {
  bool passed = false;
  double sup_norm = 0.0;  ///< sup_t sum_j ||u_j(t)||_{L2}
};

/// Integrates from zero data up to `horizon` and checks the solution stays zero.
UniquenessCheck zero_uniqueness_check(const GridPtr& grid, const Model& model, const SolverConfig& cfg,
                                      double horizon, double tol = 1e-12);

}  // namespace chac
