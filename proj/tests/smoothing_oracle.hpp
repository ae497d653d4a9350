#pragma once

// Brute-force reference for smoothing restricted to operators diagonal in
// the eigenbasis of rho. Test-only; shares nothing with the greedy and
// bisection code in qpa/entropy.hpp.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline double half_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

/// Smallest support size of a diagonal state within distance epsilon of
/// `lambda`, over every subset of the coordinates. For each subset the
/// candidate moves all outside mass onto the first kept coordinate and its
/// distance is measured directly.
inline std::size_t min_rank(const std::vector<double>& lambda, double epsilon) {
  const std::size_t d = lambda.size();
  std::size_t best = d;
  for (std::size_t mask = 1; mask < (std::size_t{1} << d); ++mask) {
    std::vector<double> sigma(d, 0.0);
    double outside = 0.0;
    std::size_t first = d;
    std::size_t size = 0;
    for (std::size_t i = 0; i < d; ++i) {
      if (mask >> i & 1U) {
        sigma[i] = lambda[i];
        if (first == d) first = i;
        ++size;
      } else {
        outside += lambda[i];
      }
    }
    sigma[first] += outside;
    if (half_l1(sigma, lambda) <= epsilon && size < best) best = size;
  }
  return best;
}

/// Smallest cap c on the grid {k * step} for which a diagonal state with all
/// entries <= c exists within distance epsilon: clip at c, then pour the
/// clipped mass into the coordinates below c in index order.
inline double min_cap_on_grid(const std::vector<double>& lambda, double epsilon, double step) {
  const std::size_t d = lambda.size();
  const auto steps = static_cast<long>(std::ceil(1.0 / step));
  for (long k = 1; k <= steps; ++k) {
    const double c = static_cast<double>(k) * step;
    std::vector<double> sigma(d);
    double clipped = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      sigma[i] = std::min(lambda[i], c);
      clipped += lambda[i] - sigma[i];
    }
    for (std::size_t i = 0; i < d && clipped > 0.0; ++i) {
      const double add = std::min(c - sigma[i], clipped);
      sigma[i] += add;
      clipped -= add;
    }
    if (clipped > 1e-15) continue;  // mass does not fit under the cap
    if (half_l1(sigma, lambda) <= epsilon) return c;
  }
  return 1.0;
}

}  // namespace oracle
