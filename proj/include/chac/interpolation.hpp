#pragma once

#include <span>
#include <vector>

namespace chac {

/// Barycentric Lagrange interpolation on distinct nodes (second form).
class BarycentricInterpolator {
 public:
  explicit BarycentricInterpolator(std::vector<double> nodes);

  std::span<const double> nodes() const noexcept { return nodes_; }

  /// Lagrange basis values l_i(t); exact unit vector when t hits a node.
  std::vector<double> basis(double t) const;
  double evaluate(std::span<const double> values, double t) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// max over t in [a,b] of |prod_i (t - nodes_i)|.
double max_nodal_polynomial(std::span<const double> nodes, double a, double b);

}  // namespace chac
