#pragma once

// Distance measures between distributions and density operators, and the
// two non-uniformity functionals of a classical variable given a quantum
// adversary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qpa/error.hpp"
#include "qpa/linalg.hpp"
#include "qpa/states.hpp"

namespace qpa {

inline double variational_distance(const ClassicalDistribution& p, const ClassicalDistribution& q) {
  if (p.size() != q.size()) {
    raise(ErrorKind::RangeMismatch,
          "distributions over " + std::to_string(p.size()) + " and " + std::to_string(q.size()) + " symbols");
  }
  double s = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) s += std::abs(p[x] - q[x]);
  return 0.5 * s;
}

/// Joint distribution of a pair (X, X') with prescribed marginals.
struct Coupling {
  std::size_t size = 0;
  std::vector<double> joint;  // row-major, joint[x * size + x']

  double operator()(std::size_t x, std::size_t y) const { return joint[x * size + y]; }

  double prob_differ() const {
    double s = 0.0;
    for (std::size_t x = 0; x < size; ++x)
      for (std::size_t y = 0; y < size; ++y)
        if (x != y) s += (*this)(x, y);
    return s;
  }

  std::vector<double> first_marginal() const {
    std::vector<double> m(size, 0.0);
    for (std::size_t x = 0; x < size; ++x)
      for (std::size_t y = 0; y < size; ++y) m[x] += (*this)(x, y);
    return m;
  }

  std::vector<double> second_marginal() const {
    std::vector<double> m(size, 0.0);
    for (std::size_t x = 0; x < size; ++x)
      for (std::size_t y = 0; y < size; ++y) m[y] += (*this)(x, y);
    return m;
  }
};

/// Coupling with Pr[X != X'] = delta(P, Q): min(P, Q) on the diagonal, the
/// leftover mass of P matched to the leftover mass of Q in index order.
inline Coupling maximal_coupling(const ClassicalDistribution& p, const ClassicalDistribution& q) {
  if (p.size() != q.size()) raise(ErrorKind::RangeMismatch, "coupling of distributions over different ranges");
  const std::size_t n = p.size();
  Coupling c{n, std::vector<double>(n * n, 0.0)};
  std::vector<double> rest_p(n), rest_q(n);
  for (std::size_t x = 0; x < n; ++x) {
    const double common = std::min(p[x], q[x]);
    c.joint[x * n + x] = common;
    rest_p[x] = p[x] - common;
    rest_q[x] = q[x] - common;
  }
  std::size_t x = 0, y = 0;
  while (x < n && y < n) {
    if (rest_p[x] <= 0.0) {
      ++x;
      continue;
    }
    if (rest_q[y] <= 0.0) {
      ++y;
      continue;
    }
    const double moved = std::min(rest_p[x], rest_q[y]);
    c.joint[x * n + y] += moved;
    rest_p[x] -= moved;
    rest_q[y] -= moved;
  }
  return c;
}

/// (1/2) tr|A - B| for Hermitian A, B given as raw matrices.
inline double half_trace_norm_of_difference(const ComplexMatrix& a, const ComplexMatrix& b) {
  return 0.5 * trace_norm(HermitianOperator(a - b));
}

inline double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  if (rho.dim() != sigma.dim()) {
    raise(ErrorKind::DimensionMismatch,
          "trace distance between dimensions " + std::to_string(rho.dim()) + " and " + std::to_string(sigma.dim()));
  }
  return half_trace_norm_of_difference(rho.matrix(), sigma.matrix());
}

/// tr((rho - sigma)^2), the squared Hilbert-Schmidt distance.
inline double hs_square_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  if (rho.dim() != sigma.dim()) raise(ErrorKind::DimensionMismatch, "Hilbert-Schmidt distance dimension mismatch");
  return (rho.matrix() - sigma.matrix()).frobenius_sq();
}

/// The pair of operators compared by both non-uniformity measures:
/// sum_x P(x)|x><x| (x) rho_x and (1/|X|) 1 (x) [rho].
struct NonuniformityPair {
  DensityOperator real;
  DensityOperator ideal;
};

inline NonuniformityPair nonuniformity_operators(const CqEnsemble& e,
                                                 std::size_t dimension_cap = kDefaultDimensionCap) {
  const auto avg = average_density(e);
  const auto uniform = embed_classical(ClassicalDistribution::uniform(e.size()));
  return {cq_state(e, dimension_cap), kron(uniform, avg, dimension_cap)};
}

/// d(X|rho). Both operators are block diagonal in the classical basis, so the
/// trace norm splits into one small eigenproblem per value x.
inline double nonuniformity(const CqEnsemble& e) {
  const ComplexMatrix reference = average_density(e).matrix() * complex{1.0 / static_cast<double>(e.size()), 0.0};
  double total = 0.0;
  for (std::size_t x = 0; x < e.size(); ++x) total += trace_norm(HermitianOperator(cq_block(e, x) - reference));
  return 0.5 * total;
}

/// D(X|rho), again evaluated block by block.
inline double hs_nonuniformity(const CqEnsemble& e) {
  const ComplexMatrix reference = average_density(e).matrix() * complex{1.0 / static_cast<double>(e.size()), 0.0};
  double total = 0.0;
  for (std::size_t x = 0; x < e.size(); ++x) total += (cq_block(e, x) - reference).frobenius_sq();
  return total;
}

/// tr(sum_x P(x)^2 rho_x^2 - [rho]^2 / |X|).
inline double hs_nonuniformity_closed_form(const CqEnsemble& e) {
  double total = 0.0;
  for (std::size_t x = 0; x < e.size(); ++x) {
    const auto& m = e.conditional(x).matrix();
    total += e.prob(x) * e.prob(x) * trace_of_product(m, m).real();
  }
  const auto avg = average_density(e);
  total -= trace_of_product(avg.matrix(), avg.matrix()).real() / static_cast<double>(e.size());
  return total;
}

}  // namespace qpa
