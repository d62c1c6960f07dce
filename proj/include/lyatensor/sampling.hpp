#pragma once

#include <cmath>
#include <cstdint>

#include "lyatensor/errors.hpp"
#include "lyatensor/field.hpp"
#include "lyatensor/linalg.hpp"

namespace lyatensor {

// Halton radical-inverse sequence: deterministic, platform-independent
// low-discrepancy draws, so certificates and reports reproduce exactly.
inline double halton(int64_t index, int base) {
  double f = 1.0, r = 0.0;
  int64_t i = index;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

inline constexpr int kHaltonPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

// Standard-normal draws via Box-Muller on Halton pairs.  `index` >= 0 selects
// the point in the stream; `seed` offsets the stream deterministically.
inline Vec gaussian_draw(int dim, int64_t index, uint64_t seed) {
  const int64_t idx = index + 1 + static_cast<int64_t>(seed % 100003) * 7919;
  Vec out(dim);
  for (int c = 0; c < dim; c += 2) {
    const int b1 = kHaltonPrimes[(c + 0) % 10];
    const int b2 = kHaltonPrimes[(c + 1) % 10];
    double u1 = halton(idx, b1);
    const double u2 = halton(idx, b2);
    if (u1 <= 0.0) u1 = 0.5 / 4096.0;
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[c] = r * std::cos(2.0 * M_PI * u2);
    if (c + 1 < dim) out[c + 1] = r * std::sin(2.0 * M_PI * u2);
  }
  return out;
}

// Unit direction in the g(t,y)-norm.
inline Vec g_unit_direction(const FibreMetric& g, double t, const Vec& y, int64_t index,
                            uint64_t seed) {
  const int dim = static_cast<int>(y.size());
  Vec v = gaussian_draw(dim, index, seed);
  const Mat gm = metric_value(g, t, y);
  const double n = std::sqrt(dot(v, matvec(gm, v)));
  if (!(n > 0.0) || !std::isfinite(n))
    throw NumericFailure("could not normalize sampled direction in the metric");
  return vscale(v, 1.0 / n);
}

// Uniform draw in [lo, hi] from the same deterministic stream.
inline double uniform_draw(double lo, double hi, int64_t index, uint64_t seed) {
  const int64_t idx = index + 1 + static_cast<int64_t>(seed % 100003) * 7919;
  return lo + (hi - lo) * halton(idx, 2);
}

}  // namespace lyatensor
