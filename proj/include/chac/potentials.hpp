#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chac/spectral.hpp"

namespace chac {

/// Positive constants of the coupled system: c1 multiplies the biharmonic
/// term of the concentration equation, c2 the Laplacian of the order
/// parameters. Optionally built from the physical quadruple (M, L, alpha,
/// beta) with c1 = M*alpha and c2 = L*beta.
struct SystemParams {
  struct Physical {
    double mobility;     // M
    double kinetic;      // L
    double alpha;
    double beta;
  };

  double c1 = 1.0;
  double c2 = 1.0;
  std::optional<Physical> physical;

  SystemParams() = default;
  SystemParams(double c1, double c2);
  static SystemParams from_physical(double mobility, double kinetic, double alpha, double beta);
};

/// A real coefficient a(x, t) on Q = Omega x [0, T].
///
/// Backed by a parsed closed-form expression, an arbitrary callback, or
/// time-indexed grid samples interpolated in t with barycentric Lagrange
/// interpolation. Immutable and cheap to copy.
class CoefficientField {
 public:
  using Callback = std::function<double(std::span<const double>, double)>;

  static CoefficientField constant(double value);
  static CoefficientField expression(const std::string& text, int dim);
  static CoefficientField callback(Callback fn, std::string descriptor, bool time_dependent = true);
  /// Samples must share one grid; a single sample gives a time-independent field.
  static CoefficientField sampled(std::vector<double> times, std::vector<ScalarField> samples,
                                  std::string descriptor);

  /// Pointwise value. Sampled coefficients require x on a grid node.
  double operator()(std::span<const double> x, double t) const;
  ScalarField on_grid(const GridPtr& grid, double t) const;

  const std::string& descriptor() const noexcept;
  bool depends_on_time() const noexcept;
  std::optional<double> constant_value() const noexcept;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

/// g(x,t,y) = sum_{l=1}^{n_max} g^(l)(x,t) / l! * y^l. Missing orders are zero.
class PotentialSeries {
 public:
  explicit PotentialSeries(int n_max);

  int order() const noexcept { return n_max_; }
  /// Sets g^(l); l outside [1, n_max] is rejected.
  PotentialSeries& set(int ell, CoefficientField c);
  PotentialSeries& clear(int ell);
  const CoefficientField* coefficient(int ell) const;
  bool depends_on_time() const;

 private:
  int n_max_;
  std::map<int, CoefficientField> coeffs_;
};

/// Exponents (l0, l1, l2, l3) of z0^l0 z1^l1 z2^l2 z3^l3.
using MultiIndex = std::array<int, 4>;

inline int degree(const MultiIndex& m) { return m[0] + m[1] + m[2] + m[3]; }

/// Known couplings f0 and f1..f3.
///
/// f0 = sum_l c_l / |l|! z^l, and f_i = b_i z_i + sum_l b_{i,l} / |l|! z^l.
/// Terms are stored sparsely; storage accepts any index up to the truncation
/// order so that inadmissible inputs can be represented and reported by
/// validate_admissible.
class CouplingSeries {
 public:
  using TermMap = std::map<MultiIndex, CoefficientField>;

  explicit CouplingSeries(int order);

  int order() const noexcept { return order_; }

  CouplingSeries& set_f0(const MultiIndex& index, CoefficientField c);
  /// Diagonal linear coefficient b_i of f_i (i = 1..3).
  CouplingSeries& set_linear(int i, CoefficientField c);
  CouplingSeries& set_fi(int i, const MultiIndex& index, CoefficientField c);

  const TermMap& f0_terms() const noexcept { return f0_; }
  const TermMap& fi_terms(int i) const;
  const CoefficientField* linear(int i) const;
  /// c_{l000} when present, else nullptr.
  const CoefficientField* f0_pure(int l0) const;
  bool depends_on_time() const;

 private:
  void check_index(const MultiIndex& index) const;

  int order_;
  TermMap f0_;
  std::array<std::optional<CoefficientField>, 3> linear_;
  std::array<TermMap, 3> fi_;
};

/// Truncated epsilon-series u(eps) = sum_{l<=n} a_l eps^l with field-valued
/// coefficients a_l = u^(l) / l! (normalized Taylor coefficients).
class JetField {
 public:
  JetField() = default;
  JetField(GridPtr grid, int order);

  /// a_0 = value, higher coefficients zero.
  static JetField constant(const ScalarField& value, int order);
  /// eps * seed (a_1 = seed).
  static JetField linear_seed(const ScalarField& seed, int order);

  int order() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  ScalarField& operator[](int l) { return coeffs_.at(static_cast<std::size_t>(l)); }
  const ScalarField& operator[](int l) const { return coeffs_.at(static_cast<std::size_t>(l)); }

  bool is_zero() const noexcept;
  /// l! * a_l, the l-th epsilon derivative at eps = 0.
  ScalarField derivative(int l) const;

  JetField& operator+=(const JetField& o);
  JetField& axpy(const ScalarField& coeff, const JetField& x);  // this += coeff * x
  friend JetField operator*(const JetField& a, const JetField& b);

 private:
  GridPtr grid_;
  std::vector<ScalarField> coeffs_;
};

/// All coefficient fields of (g, f0, f1..f3) sampled on a grid at one time.
struct CoefficientSnapshot {
  GridPtr grid;
  double time = 0.0;
  std::vector<std::optional<ScalarField>> g;  // slot l holds g^(l)
  std::vector<std::pair<MultiIndex, ScalarField>> f0;
  std::array<std::optional<ScalarField>, 3> linear;
  std::array<std::vector<std::pair<MultiIndex, ScalarField>>, 3> fi;
};

CoefficientSnapshot sample_coefficients(const PotentialSeries& p, const CouplingSeries& c,
                                        const GridPtr& grid, double t);

struct NonlinearValues {
  ScalarField g;
  ScalarField f0;
  std::array<ScalarField, 3> f;
};

struct NonlinearJets {
  JetField g;
  JetField f0;
  std::array<JetField, 3> f;
};

using StateFields = std::array<ScalarField, 4>;
using StateJets = std::array<JetField, 4>;

/// Pointwise series evaluation; throws BlowUp when any value exceeds 1e100.
NonlinearValues eval_nonlinearities(const PotentialSeries& p, const CouplingSeries& c, double t,
                                    const StateFields& state);
NonlinearValues eval_nonlinearities(const CoefficientSnapshot& coeffs, const StateFields& state);

/// Truncated composition of the series with the state jets. Output
/// coefficient l equals (1/l!) d^l/deps^l of the nonlinearity at eps = 0.
NonlinearJets jet_compose(const PotentialSeries& p, const CouplingSeries& c, double t,
                          const StateJets& state);
NonlinearJets jet_compose(const CoefficientSnapshot& coeffs, const StateJets& state);

struct ProbeBox {
  double radius = 1.0;  ///< state values sampled in [-radius, radius]^m
  double t_max = 1.0;   ///< coefficient times sampled in [0, t_max]
  int dim = 1;
  int samples = 10000;
};

struct ConditionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct AdmissibilityReport {
  std::vector<ConditionCheck> conditions;
  double lipschitz_g = 0.0;
  std::array<double, 4> lipschitz_f{};  ///< f0..f3
  bool ok() const;
};

/// Structural checks of the admissibility conditions plus a sampled estimate
/// of the Lipschitz constants of g and f0..f3 about zero on the probe box.
AdmissibilityReport validate_admissible(const PotentialSeries& p, const CouplingSeries& c,
                                        const ProbeBox& box);

}  // namespace chac
