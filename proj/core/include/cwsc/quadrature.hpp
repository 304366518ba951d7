#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "cwsc/error.hpp"

namespace cwsc::quadrature {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const Rule& gauss_legendre(std::size_t points);

/// Fixed-order rule mapped onto [a, b].
template <class F>
double fixed(F&& f, double a, double b, const Rule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
  }
  return half * sum;
}

struct Tolerance {
  double absolute = 1e-12;
  double relative = 1e-13;
  int max_depth = 40;
  /// Relative size of evaluation noise in the integrand.
  double noise = 1e-12;
};

namespace detail {

struct Budget {
  long panels_left;
  double noise;
  int failures = 0;
};

template <class F>
double adapt(F& f, double a, double b, double whole, double tol, int depth, const Rule& rule, Budget& budget) {
  const double mid = 0.5 * (a + b);
  const double left = fixed(f, a, mid, rule);
  const double right = fixed(f, mid, b, rule);
  const double refined = left + right;
  const double diff = std::abs(refined - whole);
  // Differences at the integrand's evaluation-noise level cannot be refined further.
  const double floor = budget.noise * (std::abs(left) + std::abs(right));
  if (diff <= tol || diff <= floor || mid <= a || mid >= b) return refined;
  if (depth <= 0 || --budget.panels_left <= 0) {
    ++budget.failures;
    return refined;
  }
  return adapt(f, a, mid, left, 0.5 * tol, depth - 1, rule, budget) +
         adapt(f, mid, b, right, 0.5 * tol, depth - 1, rule, budget);
}

}  // namespace detail

/// Adaptive 20-point Gauss-Legendre panels on [a, b], split first at the
/// sorted `breaks` lying strictly inside. A panel is accepted once halving it
/// changes its estimate by less than its share of the tolerance.
template <class F>
double integrate(F&& f, double a, double b, Tolerance tol = {}, std::span<const double> breaks = {}) {
  const Rule& rule = gauss_legendre(20);
  std::vector<double> edges{a};
  for (double x : breaks) {
    if (x > edges.back() && x < b) edges.push_back(x);
  }
  edges.push_back(b);

  // Coarse pass to set the relative scale.
  double coarse = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) coarse += fixed(f, edges[k], edges[k + 1], rule);
  const double target = std::max(tol.absolute, tol.relative * std::abs(coarse));

  detail::Budget budget{200000, tol.noise};
  double total = 0.0;
  const double span = b - a;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double lo = edges[k];
    const double hi = edges[k + 1];
    const double whole = fixed(f, lo, hi, rule);
    total += detail::adapt(f, lo, hi, whole, target * (hi - lo) / span, tol.max_depth, rule, budget);
  }
  if (budget.failures > 0) {
    fail(ErrorKind::NumericalFailure, "adaptive quadrature hit its depth limit");
  }
  return total;
}

}  // namespace cwsc::quadrature
