#include "chac/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "chac/error.hpp"

namespace chac {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// FFTW planning is not thread-safe; execution with fftw_execute_dft is.
// Plans are created once per (dim, n, sign) and kept for the process lifetime.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int dim, int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(dim, n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    int dims[3] = {n, n, n};
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(n);
    std::vector<std::complex<double>> scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft(dim, dims, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

void execute(const PeriodicGrid& g, std::vector<std::complex<double>>& data, int sign) {
  fftw_plan p = PlanCache::instance().get(g.dim(), g.points_per_axis(), sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p, buf, buf);
}

// exp(-i xi_k . x_0) with x_0 = (-1,...,-1) is (-1)^{sum k}.
double origin_phase(const PeriodicGrid& g, std::size_t slot) {
  int idx[3];
  g.unravel(slot, idx);
  int parity = 0;
  for (int a = 0; a < g.dim(); ++a) parity += g.frequency(idx[a]);
  return (parity % 2 == 0) ? 1.0 : -1.0;
}

bool is_nyquist(const PeriodicGrid& g, int i) { return g.frequency(i) == -g.points_per_axis() / 2; }

}  // namespace

// ---------------------------------------------------------------- grid

PeriodicGrid::PeriodicGrid(int dim, int points_per_axis) : dim_(dim), n_(points_per_axis) {
  if (dim < 1 || dim > 3) throw InvalidInput("grid dimension must be 1, 2 or 3");
  if (points_per_axis < 8 || !is_power_of_two(points_per_axis))
    throw InvalidInput("points per axis must be a power of two >= 8, got " +
                       std::to_string(points_per_axis));
  total_ = 1;
  for (int i = 0; i < dim; ++i) total_ *= static_cast<std::size_t>(n_);
  xi_.resize(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) xi_[static_cast<std::size_t>(i)] = std::numbers::pi * frequency(i);
}

double PeriodicGrid::cell_volume() const noexcept { return std::pow(spacing(), dim_); }
double PeriodicGrid::volume() const noexcept { return std::pow(2.0, dim_); }

void PeriodicGrid::unravel(std::size_t flat, int* idx) const noexcept {
  const auto n = static_cast<std::size_t>(n_);
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % n);
    flat /= n;
  }
}

void PeriodicGrid::point(std::size_t flat, double* out) const noexcept {
  int idx[3];
  unravel(flat, idx);
  for (int a = 0; a < dim_; ++a) out[a] = coordinate(idx[a]);
}

// ---------------------------------------------------------------- field

ScalarField::ScalarField(GridPtr grid, double fill) : grid_(std::move(grid)) {
  if (!grid_) throw InvalidInput("field requires a grid");
  values_.assign(grid_->size(), fill);
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw InvalidInput("field requires a grid");
  if (values_.size() != grid_->size())
    throw InvalidInput("field has " + std::to_string(values_.size()) + " values, grid expects " +
                       std::to_string(grid_->size()));
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::mean() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v;
  return values_.empty() ? 0.0 : s / static_cast<double>(values_.size());
}

double ScalarField::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::inner(const ScalarField& other) const {
  require_same_grid(other);
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
  return s * grid_->cell_volume();
}

void ScalarField::require_same_grid(const ScalarField& o) const {
  if (!grid_ || !o.grid_ || !(*grid_ == *o.grid_)) throw InvalidInput("fields live on different grids");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(const ScalarField& o) {
  require_same_grid(o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double s) noexcept {
  for (double& v : values_) v += s;
  return *this;
}

// ---------------------------------------------------------------- spectrum

Spectrum::Spectrum(GridPtr grid) : grid_(std::move(grid)) {
  if (!grid_) throw InvalidInput("spectrum requires a grid");
  coeffs_.assign(grid_->size(), {0.0, 0.0});
}

Spectrum::Spectrum(GridPtr grid, std::vector<std::complex<double>> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (!grid_) throw InvalidInput("spectrum requires a grid");
  if (coeffs_.size() != grid_->size()) throw InvalidInput("spectrum size does not match grid");
}

std::size_t Spectrum::index_of(std::span<const int> freq) const {
  const int n = grid_->points_per_axis();
  if (static_cast<int>(freq.size()) != grid_->dim()) throw InvalidInput("frequency rank mismatch");
  std::size_t flat = 0;
  for (int k : freq) {
    if (k < -n / 2 || k >= n / 2) throw InvalidInput("frequency outside resolvable band");
    flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>((k + n) % n);
  }
  return flat;
}

double Spectrum::xi_squared(std::size_t i) const noexcept {
  int idx[3];
  grid_->unravel(i, idx);
  double s = 0.0;
  auto xi = grid_->wavenumbers();
  for (int a = 0; a < grid_->dim(); ++a) s += xi[static_cast<std::size_t>(idx[a])] * xi[static_cast<std::size_t>(idx[a])];
  return s;
}

double Spectrum::conjugate_asymmetry() const {
  const auto& g = *grid_;
  const int n = g.points_per_axis();
  double worst = 0.0;
  double scale = 0.0;
  int idx[3];
  int mirror[3];
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    scale = std::max(scale, std::abs(coeffs_[i]));
    g.unravel(i, idx);
    for (int a = 0; a < g.dim(); ++a) mirror[a] = -g.frequency(idx[a]);
    // -(-n/2) aliases back onto the Nyquist slot itself
    for (int a = 0; a < g.dim(); ++a)
      if (mirror[a] == n / 2) mirror[a] = -n / 2;
    std::size_t j = index_of(std::span<const int>(mirror, static_cast<std::size_t>(g.dim())));
    worst = std::max(worst, std::abs(coeffs_[i] - std::conj(coeffs_[j])));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

Spectrum to_spectrum(const ScalarField& f) {
  if (f.empty()) throw InvalidInput("to_spectrum on an empty field");
  if (!f.all_finite()) throw InvalidInput("to_spectrum: field contains non-finite values");
  const auto& g = f.grid();
  std::vector<std::complex<double>> data(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) data[i] = {f[i], 0.0};
  execute(g, data, FFTW_FORWARD);
  const double inv = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= inv * origin_phase(g, i);
  return Spectrum(f.grid_ptr(), std::move(data));
}

ScalarField to_physical(const Spectrum& s, double imag_tol) {
  const auto& g = s.grid();
  std::vector<std::complex<double>> data(s.coefficients().begin(), s.coefficients().end());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= origin_phase(g, i);
  execute(g, data, FFTW_BACKWARD);
  double max_mag = 0.0;
  double max_imag = 0.0;
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    max_mag = std::max(max_mag, std::abs(data[i]));
    max_imag = std::max(max_imag, std::abs(data[i].imag()));
    out[i] = data[i].real();
  }
  if (max_imag > imag_tol * max_mag)
    throw SpectrumAsymmetry("to_physical: imaginary residue " + std::to_string(max_imag) +
                            " exceeds tolerance; spectrum is not conjugate-symmetric");
  return ScalarField(s.grid_ptr(), std::move(out));
}

ScalarField to_physical_real(const Spectrum& s) {
  return to_physical(s, std::numeric_limits<double>::infinity());
}

// ---------------------------------------------------------------- operators

void apply_symbol(Spectrum& s, DiffOp op) {
  const auto& g = s.grid();
  auto xi = g.wavenumbers();
  int idx[3];
  for (std::size_t i = 0; i < g.size(); ++i) {
    switch (op.kind) {
      case DiffOp::Kind::gradient: {
        if (op.axis < 0 || op.axis >= g.dim()) throw InvalidInput("gradient axis out of range");
        g.unravel(i, idx);
        const int slot = idx[op.axis];
        s[i] *= is_nyquist(g, slot) ? std::complex<double>{0.0, 0.0}
                                    : std::complex<double>{0.0, xi[static_cast<std::size_t>(slot)]};
        break;
      }
      case DiffOp::Kind::laplacian:
        s[i] *= -s.xi_squared(i);
        break;
      case DiffOp::Kind::biharmonic: {
        const double k2 = s.xi_squared(i);
        s[i] *= k2;
        s[i] *= k2;
        break;
      }
    }
  }
}

ScalarField apply_operator(const ScalarField& f, DiffOp op) {
  Spectrum s = to_spectrum(f);
  apply_symbol(s, op);
  return to_physical(s);
}

void truncate_two_thirds(Spectrum& s) {
  const auto& g = s.grid();
  const int n = g.points_per_axis();
  int idx[3];
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.unravel(i, idx);
    for (int a = 0; a < g.dim(); ++a) {
      if (3 * std::abs(g.frequency(idx[a])) > n) {
        s[i] = {0.0, 0.0};
        break;
      }
    }
  }
}

ScalarField dealias(const ScalarField& f) {
  Spectrum s = to_spectrum(f);
  truncate_two_thirds(s);
  return to_physical(s);
}

PoissonSolution solve_poisson_periodic(const ScalarField& rhs, double tol_mean) {
  const double mean = rhs.mean();
  const double l2 = l2_norm(rhs);
  if (std::abs(mean) > tol_mean * l2)
    throw SolvabilityError("periodic Poisson: right-hand side mean " + std::to_string(mean) +
                           " violates solvability (||rhs|| = " + std::to_string(l2) + ")");
  Spectrum s = to_spectrum(rhs);
  for (std::size_t i = 0; i < s.grid().size(); ++i) {
    const double k2 = s.xi_squared(i);
    s[i] = k2 == 0.0 ? std::complex<double>{0.0, 0.0} : s[i] / (-k2);
  }
  return {to_physical(s), mean};
}

// ---------------------------------------------------------------- norms

double sobolev_weight(const PeriodicGrid& grid, std::size_t slot, int k) {
  int idx[3];
  grid.unravel(slot, idx);
  auto xi = grid.wavenumbers();
  // poly[m] = sum over multi-indices of total order m seen so far
  std::vector<double> poly(static_cast<std::size_t>(k) + 1, 0.0);
  poly[0] = 1.0;
  for (int a = 0; a < grid.dim(); ++a) {
    const double x2 = xi[static_cast<std::size_t>(idx[a])] * xi[static_cast<std::size_t>(idx[a])];
    const bool nyq = is_nyquist(grid, idx[a]);
    std::vector<double> next(poly.size(), 0.0);
    for (int m = 0; m <= k; ++m) {
      double p = 1.0;
      for (int j = 0; m + j <= k; ++j, p *= x2) {
        if (nyq && j % 2 == 1) continue;
        next[static_cast<std::size_t>(m + j)] += poly[static_cast<std::size_t>(m)] * p;
      }
    }
    poly = std::move(next);
  }
  double s = 0.0;
  for (double v : poly) s += v;
  return s;
}

double l2_norm(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return std::sqrt(s * f.grid().cell_volume());
}

namespace {

void enumerate_multi_indices(int dim, int k, std::vector<std::array<int, 3>>& out) {
  std::array<int, 3> a{0, 0, 0};
  for (a[0] = 0; a[0] <= k; ++a[0])
    for (a[1] = 0; a[1] <= (dim > 1 ? k : 0); ++a[1])
      for (a[2] = 0; a[2] <= (dim > 2 ? k : 0); ++a[2])
        if (a[0] + a[1] + a[2] <= k) out.push_back(a);
}

double sup_derivative(const Spectrum& base, const std::array<int, 3>& alpha) {
  Spectrum s = base;
  for (int axis = 0; axis < base.grid().dim(); ++axis)
    for (int r = 0; r < alpha[static_cast<std::size_t>(axis)]; ++r) apply_symbol(s, DiffOp::gradient(axis));
  return to_physical(s).max_abs();
}

}  // namespace

double norm(const ScalarField& f, NormKind kind) {
  if (kind.order < 0) throw InvalidInput("norm order must be non-negative");
  switch (kind.family) {
    case NormKind::Family::L: {
      if (kind.order < 1) throw InvalidInput("L^k norm requires k >= 1");
      double s = 0.0;
      for (double v : f.values()) s += std::pow(std::abs(v), kind.order);
      return std::pow(s * f.grid().cell_volume(), 1.0 / kind.order);
    }
    case NormKind::Family::H: {
      Spectrum s = to_spectrum(f);
      double acc = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i)
        acc += std::norm(s[i]) * sobolev_weight(f.grid(), i, kind.order);
      return std::sqrt(acc * f.grid().volume());
    }
    case NormKind::Family::C: {
      Spectrum s = to_spectrum(f);
      std::vector<std::array<int, 3>> alphas;
      enumerate_multi_indices(f.grid().dim(), kind.order, alphas);
      double acc = 0.0;
      for (const auto& alpha : alphas) acc += sup_derivative(s, alpha);
      return acc;
    }
  }
  return 0.0;
}

}  // namespace chac
