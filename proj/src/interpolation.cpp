#include "chac/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include "chac/error.hpp"

namespace chac {

BarycentricInterpolator::BarycentricInterpolator(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvalidInput("interpolation needs at least one node");
  weights_.assign(nodes_.size(), 1.0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (i == j) continue;
      const double d = nodes_[i] - nodes_[j];
      if (d == 0.0) throw InvalidInput("interpolation nodes must be distinct");
      weights_[i] /= d;
    }
  }
}

std::vector<double> BarycentricInterpolator::basis(double t) const {
  std::vector<double> l(nodes_.size(), 0.0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (t == nodes_[i]) {
      l[i] = 1.0;
      return l;
    }
  }
  double denom = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    l[i] = weights_[i] / (t - nodes_[i]);
    denom += l[i];
  }
  for (double& v : l) v /= denom;
  return l;
}

double BarycentricInterpolator::evaluate(std::span<const double> values, double t) const {
  if (values.size() != nodes_.size()) throw InvalidInput("interpolation value count mismatch");
  const auto l = basis(t);
  double s = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) s += l[i] * values[i];
  return s;
}

namespace {

double nodal(std::span<const double> nodes, double t) {
  double p = 1.0;
  for (double n : nodes) p *= (t - n);
  return p;
}

// |prod| has exactly one critical point strictly between consecutive roots.
double golden_max(std::span<const double> nodes, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    if (std::abs(nodal(nodes, c)) > std::abs(nodal(nodes, d))) b = d;
    else a = c;
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return std::abs(nodal(nodes, 0.5 * (a + b)));
}

}  // namespace

double max_nodal_polynomial(std::span<const double> nodes, double a, double b) {
  if (b < a) throw InvalidInput("max_nodal_polynomial: empty interval");
  std::vector<double> pts;
  for (double n : nodes)
    if (n > a && n < b) pts.push_back(n);
  std::sort(pts.begin(), pts.end());
  double best = std::max(std::abs(nodal(nodes, a)), std::abs(nodal(nodes, b)));
  std::vector<double> edges;
  edges.push_back(a);
  edges.insert(edges.end(), pts.begin(), pts.end());
  edges.push_back(b);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (edges[i + 1] > edges[i]) best = std::max(best, golden_max(nodes, edges[i], edges[i + 1]));
  return best;
}

}  // namespace chac
