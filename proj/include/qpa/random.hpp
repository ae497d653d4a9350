#pragma once

// Seedable, portable randomness for the randomized suites.
//
// std::mt19937_64 has a fully specified output sequence; the standard
// distributions do not, so the conversions to doubles and normals are done
// here by hand. Other implementations reproduce a run from the seed and the
// algorithm name alone.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qpa/linalg.hpp"
#include "qpa/rational.hpp"
#include "qpa/states.hpp"

namespace qpa {

class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/u53/box-muller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  complex complex_normal() {
    const double re = normal();
    return {re, normal()};
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Matrix of i.i.d. complex Gaussian entries.
inline ComplexMatrix random_ginibre(Rng& rng, std::size_t rows, std::size_t cols) {
  ComplexMatrix g(rows, cols);
  for (auto& z : g.entries()) z = rng.complex_normal();
  return g;
}

/// Haar-ish unitary from Gram-Schmidt on a Ginibre matrix.
inline ComplexMatrix random_unitary(Rng& rng, std::size_t dim) {
  ComplexMatrix u = random_ginibre(rng, dim, dim);
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      complex overlap{0.0, 0.0};
      for (std::size_t i = 0; i < dim; ++i) overlap += std::conj(u(i, j)) * u(i, k);
      for (std::size_t i = 0; i < dim; ++i) u(i, k) -= overlap * u(i, j);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) norm += std::norm(u(i, k));
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < dim; ++i) u(i, k) /= norm;
  }
  return u;
}

/// Random Hermitian matrix with Gaussian entries.
inline HermitianOperator random_hermitian(Rng& rng, std::size_t dim) {
  ComplexMatrix g = random_ginibre(rng, dim, dim);
  return HermitianOperator((g + g.adjoint()) * complex{0.5, 0.0});
}

/// U diag(values) U^dagger with a random unitary U.
inline ComplexMatrix random_with_spectrum(Rng& rng, const std::vector<double>& values) {
  const ComplexMatrix u = random_unitary(rng, values.size());
  return u * ComplexMatrix::diagonal(values) * u.adjoint();
}

/// Density operator G G^dagger / tr with G of shape dim x rank, so the rank
/// is `rank` with probability one.
inline DensityOperator random_density(Rng& rng, std::size_t dim, std::size_t rank = 0) {
  if (rank == 0 || rank > dim) rank = dim;
  const ComplexMatrix g = random_ginibre(rng, dim, rank);
  ComplexMatrix rho = g * g.adjoint();
  rho *= complex{1.0 / rho.trace().real(), 0.0};
  return DensityOperator(HermitianOperator(std::move(rho)));
}

/// Diagonal density operator with random weights.
inline DensityOperator random_diagonal_density(Rng& rng, std::size_t dim) {
  std::vector<double> w(dim);
  double total = 0.0;
  for (auto& x : w) {
    x = -std::log(1.0 - rng.uniform());
    total += x;
  }
  for (auto& x : w) x /= total;
  return DensityOperator::diagonal(w);
}

/// Random distribution with probabilities k_i / denominator, every k_i >= 0.
inline ClassicalDistribution random_rational_distribution(Rng& rng, std::size_t size,
                                                          std::int64_t denominator = 64) {
  std::vector<std::int64_t> cuts;
  cuts.reserve(size + 1);
  cuts.push_back(0);
  for (std::size_t i = 0; i + 1 < size; ++i) cuts.push_back(static_cast<std::int64_t>(rng.below(denominator + 1)));
  cuts.push_back(denominator);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Rational> probs;
  probs.reserve(size);
  for (std::size_t i = 0; i < size; ++i) probs.emplace_back(cuts[i + 1] - cuts[i], denominator);
  return ClassicalDistribution(std::move(probs));
}

/// Random cq ensemble: rational probabilities, random mixed conditionals.
inline CqEnsemble random_ensemble(Rng& rng, std::size_t values, std::size_t adversary_dim) {
  auto probs = random_rational_distribution(rng, values);
  std::vector<DensityOperator> conds;
  conds.reserve(values);
  for (std::size_t i = 0; i < values; ++i) {
    const std::size_t rank = 1 + rng.below(adversary_dim);
    conds.push_back(random_density(rng, adversary_dim, rank));
  }
  return CqEnsemble(std::move(probs), std::move(conds));
}

}  // namespace qpa
