#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace chac {

/// Uniform periodic grid on the box [-1,1]^dim.
///
/// Points sit at x_j = -1 + j*h, j = 0..n-1, with h = 2/n. Wavenumbers along
/// each axis are xi_k = pi*k in standard FFT order (0, 1, ..., n/2-1, -n/2,
/// ..., -1), so the fundamental period is the full box length 2.
class PeriodicGrid {
 public:
  PeriodicGrid(int dim, int points_per_axis);

  static std::shared_ptr<const PeriodicGrid> make(int dim, int points_per_axis) {
    return std::make_shared<const PeriodicGrid>(dim, points_per_axis);
  }

  int dim() const noexcept { return dim_; }
  int points_per_axis() const noexcept { return n_; }
  std::size_t size() const noexcept { return total_; }
  double spacing() const noexcept { return 2.0 / n_; }
  /// Quadrature weight h^dim of one cell.
  double cell_volume() const noexcept;
  /// |Omega| = 2^dim.
  double volume() const noexcept;

  /// Integer frequency of FFT slot i along any axis.
  int frequency(int i) const noexcept { return i < n_ / 2 ? i : i - n_; }
  std::span<const double> wavenumbers() const noexcept { return xi_; }
  double coordinate(int i) const noexcept { return -1.0 + i * spacing(); }

  /// Splits a flat row-major index into per-axis indices (axis 0 slowest).
  void unravel(std::size_t flat, int* idx) const noexcept;
  /// Physical coordinates of flat point `flat`, written to out[0..dim).
  void point(std::size_t flat, double* out) const noexcept;

  bool operator==(const PeriodicGrid& o) const noexcept {
    return dim_ == o.dim_ && n_ == o.n_;
  }

 private:
  int dim_;
  int n_;
  std::size_t total_;
  std::vector<double> xi_;
};

using GridPtr = std::shared_ptr<const PeriodicGrid>;

/// Real samples of a periodic scalar on a grid, row-major.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid, double fill = 0.0);
  ScalarField(GridPtr grid, std::vector<double> values);

  template <class F>
  static ScalarField from_function(GridPtr grid, F&& f) {
    ScalarField out(grid);
    double x[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < grid->size(); ++i) {
      grid->point(i, x);
      out.values_[i] = f(std::span<const double>(x, static_cast<std::size_t>(grid->dim())));
    }
    return out;
  }

  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const PeriodicGrid& grid() const noexcept { return *grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return !grid_; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  bool all_finite() const noexcept;
  double mean() const noexcept;
  double max_abs() const noexcept;
  /// Quadrature of f*g over the box.
  double inner(const ScalarField& other) const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(const ScalarField& o);
  ScalarField& operator*=(double s) noexcept;
  ScalarField& operator+=(double s) noexcept;

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

 private:
  void require_same_grid(const ScalarField& o) const;

  GridPtr grid_;
  std::vector<double> values_;
};

/// Fourier-series coefficients c(k) = (1/N) sum_x f(x) exp(-i xi_k . x).
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(GridPtr grid);
  Spectrum(GridPtr grid, std::vector<std::complex<double>> coeffs);

  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const PeriodicGrid& grid() const noexcept { return *grid_; }
  std::span<std::complex<double>> coefficients() noexcept { return coeffs_; }
  std::span<const std::complex<double>> coefficients() const noexcept { return coeffs_; }
  std::complex<double>& operator[](std::size_t i) noexcept { return coeffs_[i]; }
  const std::complex<double>& operator[](std::size_t i) const noexcept { return coeffs_[i]; }

  /// Flat slot of the mode with the given integer frequencies (one per axis).
  std::size_t index_of(std::span<const int> freq) const;
  /// |xi|^2 of flat slot i.
  double xi_squared(std::size_t i) const noexcept;

  /// max_k |c(k) - conj(c(-k))| / max_k |c(k)|.
  double conjugate_asymmetry() const;

 private:
  GridPtr grid_;
  std::vector<std::complex<double>> coeffs_;
};

Spectrum to_spectrum(const ScalarField& f);

/// Inverse of to_spectrum. Imaginary residue up to `imag_tol` relative to the
/// largest output magnitude is dropped; larger residue throws SpectrumAsymmetry.
ScalarField to_physical(const Spectrum& s, double imag_tol = 1e-10);
/// Inverse transform keeping only the real part, for spectra of real data
/// whose cancellation leaves roundoff-level imaginary residue.
ScalarField to_physical_real(const Spectrum& s);

struct DiffOp {
  enum class Kind { gradient, laplacian, biharmonic };
  Kind kind;
  int axis = 0;

  static DiffOp gradient(int axis) { return {Kind::gradient, axis}; }
  static DiffOp laplacian() { return {Kind::laplacian, 0}; }
  static DiffOp biharmonic() { return {Kind::biharmonic, 0}; }
};

/// Multiplies a spectrum in place by the symbol of `op`
/// (gradient: i*xi_j with the Nyquist slot zeroed, laplacian: -|xi|^2,
/// biharmonic: |xi|^4).
void apply_symbol(Spectrum& s, DiffOp op);
ScalarField apply_operator(const ScalarField& f, DiffOp op);

/// Zeroes every mode with some |k_axis| > n/3 (2/3-rule dealiasing).
void truncate_two_thirds(Spectrum& s);
ScalarField dealias(const ScalarField& f);

struct PoissonSolution {
  ScalarField solution;   ///< mean-zero G with Laplacian(G) = rhs - mean(rhs)
  double discarded_mean;  ///< mean(rhs)
};

/// Periodic Poisson solve. Throws SolvabilityError when
/// |mean(rhs)| > tol_mean * ||rhs||_{L2}.
PoissonSolution solve_poisson_periodic(const ScalarField& rhs, double tol_mean = 1e-8);

struct NormKind {
  enum class Family { L, H, C };
  Family family;
  int order;

  static NormKind Lk(int k) { return {Family::L, k}; }
  static NormKind Hk(int k) { return {Family::H, k}; }
  static NormKind Ck(int k) { return {Family::C, k}; }
};

double norm(const ScalarField& f, NormKind kind);
double l2_norm(const ScalarField& f);

/// Spectral H^k seminorm-sum weight sum_{|alpha|<=k} prod_j xi_j^{2 alpha_j}
/// of flat slot i (odd derivative orders vanish at the Nyquist slot).
double sobolev_weight(const PeriodicGrid& grid, std::size_t slot, int k);

}  // namespace chac
