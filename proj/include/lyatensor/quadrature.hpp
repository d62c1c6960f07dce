#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"

namespace lyatensor {

struct QuadratureRule {
  std::vector<double> nodes;    // on [0, 1]
  std::vector<double> weights;  // sum to 1
};

// Gauss-Legendre nodes/weights on [0,1]: Newton iteration on P_n starting
// from the Chebyshev guess.  Rules are cached per order.
inline const QuadratureRule& gauss_legendre_01(int order) {
  if (order < 1 || order > 256)
    throw ContractViolation("gauss_legendre_01: order out of range [1, 256]");
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      // Evaluate P_n(x) and P_{n-1}(x) by recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    // Map [-1,1] -> [0,1]; the symmetric partner comes along for free.
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  auto [pos, inserted] = cache.emplace(order, std::move(rule));
  (void)inserted;
  return pos->second;
}

}  // namespace lyatensor
