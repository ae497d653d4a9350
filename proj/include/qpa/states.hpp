#pragma once

// Random states over finite sample spaces and classical-quantum hybrids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qpa/error.hpp"
#include "qpa/linalg.hpp"
#include "qpa/rational.hpp"

namespace qpa {

inline constexpr double kProbabilityFloor = 1e-15;
inline constexpr double kNormalizationTolerance = 1e-12;
inline constexpr double kDensityTolerance = 1e-9;

class ClassicalDistribution {
 public:
  ClassicalDistribution() = default;

  explicit ClassicalDistribution(std::vector<double> probs) : probs_(std::move(probs)) { validate(); }

  /// Exact probabilities; the double view is derived from them.
  explicit ClassicalDistribution(std::vector<Rational> exact) : exact_(std::move(exact)) {
    probs_.reserve(exact_->size());
    Rational total{0};
    for (const auto& r : *exact_) {
      if (r < Rational{0}) raise(ErrorKind::InvalidDistribution, "probs: negative entry " + r.to_string());
      total += r;
      probs_.push_back(r.to_double());
    }
    if (total != Rational{1}) {
      raise(ErrorKind::InvalidDistribution, "probs: exact probabilities sum to " + total.to_string());
    }
    validate();
  }

  static ClassicalDistribution uniform(std::size_t size) {
    if (size == 0) raise(ErrorKind::InvalidDistribution, "probs: empty range");
    if (size < (std::size_t{1} << 62)) {
      return ClassicalDistribution(std::vector<Rational>(size, Rational(1, static_cast<std::int64_t>(size))));
    }
    return ClassicalDistribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
  }

  static ClassicalDistribution point_mass(std::size_t size, std::size_t at) {
    std::vector<Rational> p(size, Rational{0});
    p.at(at) = Rational{1};
    return ClassicalDistribution(std::move(p));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::optional<std::vector<Rational>>& exact() const noexcept { return exact_; }

 private:
  void validate() const {
    if (probs_.empty()) raise(ErrorKind::InvalidDistribution, "probs: empty range");
    double total = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0) raise(ErrorKind::InvalidDistribution, "probs: negative or non-finite entry");
      total += p;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      raise(ErrorKind::InvalidDistribution, "probs: entries sum to " + std::to_string(total));
    }
  }

  std::vector<double> probs_;
  std::optional<std::vector<Rational>> exact_;
};

/// Positive semidefinite, unit-trace Hermitian operator. The eigenvalues are
/// computed once during validation and kept for entropy evaluations.
class DensityOperator {
 public:
  DensityOperator() = default;

  explicit DensityOperator(HermitianOperator op) : op_(std::move(op)) {
    const double tr = op_.trace();
    if (std::abs(tr - 1.0) > kDensityTolerance) {
      raise(ErrorKind::NotDensityOperator, "trace is " + std::to_string(tr));
    }
    eigenvalues_ = qpa::eigenvalues(op_);
    if (eigenvalues_.back() < -kDensityTolerance) {
      raise(ErrorKind::NotDensityOperator, "negative eigenvalue " + std::to_string(eigenvalues_.back()));
    }
  }

  explicit DensityOperator(ComplexMatrix m) : DensityOperator(HermitianOperator(std::move(m))) {}

  static DensityOperator diagonal(std::span<const double> values) {
    return DensityOperator(HermitianOperator::diagonal(values));
  }
  static DensityOperator diagonal(std::initializer_list<double> values) {
    return diagonal(std::span<const double>(values.begin(), values.size()));
  }

  /// The one-dimensional state, i.e. an adversary holding nothing.
  static DensityOperator trivial() { return diagonal({1.0}); }

  static DensityOperator maximally_mixed(std::size_t dim) {
    return diagonal(std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
  }

  /// |k><k| in the canonical basis.
  static DensityOperator basis_state(std::size_t dim, std::size_t k) {
    std::vector<double> d(dim, 0.0);
    d.at(k) = 1.0;
    return diagonal(d);
  }

  std::size_t dim() const noexcept { return op_.dim(); }
  const HermitianOperator& op() const noexcept { return op_; }
  const ComplexMatrix& matrix() const noexcept { return op_.matrix(); }
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

 private:
  HermitianOperator op_;
  std::vector<double> eigenvalues_;
};

/// Tensor product of density operators.
inline DensityOperator kron(const DensityOperator& a, const DensityOperator& b,
                            std::size_t dimension_cap = kDefaultDimensionCap) {
  return DensityOperator(kron(a.op(), b.op(), dimension_cap));
}

/// A classical variable X together with the conditional states rho_x.
/// The order of the value list fixes the classical basis {|x>}.
class CqEnsemble {
 public:
  CqEnsemble() = default;

  CqEnsemble(ClassicalDistribution probs, std::vector<DensityOperator> conditionals,
             std::vector<std::string> labels = {})
      : probs_(std::move(probs)), conditionals_(std::move(conditionals)), labels_(std::move(labels)) {
    if (conditionals_.size() != probs_.size()) {
      raise(ErrorKind::ValidationError, "conditionals: expected " + std::to_string(probs_.size()) +
                                            " conditional states, got " + std::to_string(conditionals_.size()));
    }
    const std::size_t d = conditionals_.front().dim();
    for (const auto& rho : conditionals_) {
      if (rho.dim() != d) raise(ErrorKind::DimensionMismatch, "conditionals: states have different dimensions");
    }
    if (labels_.empty()) {
      labels_.reserve(probs_.size());
      for (std::size_t i = 0; i < probs_.size(); ++i) labels_.push_back(std::to_string(i));
    } else if (labels_.size() != probs_.size()) {
      raise(ErrorKind::ValidationError, "values: label count does not match probs");
    }
  }

  /// X distributed as `probs` and independent of an adversary holding `rho`.
  static CqEnsemble independent(ClassicalDistribution probs, const DensityOperator& rho) {
    std::vector<DensityOperator> conds(probs.size(), rho);
    return CqEnsemble(std::move(probs), std::move(conds));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  std::size_t adversary_dim() const noexcept { return conditionals_.front().dim(); }
  const ClassicalDistribution& distribution() const noexcept { return probs_; }
  double prob(std::size_t x) const { return probs_[x]; }
  const DensityOperator& conditional(std::size_t x) const { return conditionals_.at(x); }
  std::span<const DensityOperator> conditionals() const noexcept { return conditionals_; }
  std::span<const std::string> labels() const noexcept { return labels_; }

 private:
  ClassicalDistribution probs_;
  std::vector<DensityOperator> conditionals_;
  std::vector<std::string> labels_;
};

/// Sum_x P(x) rho_x as a raw matrix (no validation).
inline ComplexMatrix weighted_sum(const CqEnsemble& e, std::span<const std::size_t> event) {
  const std::size_t d = e.adversary_dim();
  ComplexMatrix acc(d, d);
  for (std::size_t x : event) {
    if (x >= e.size()) raise(ErrorKind::RangeMismatch, "event references unknown value " + std::to_string(x));
    const double p = e.prob(x);
    if (p == 0.0) continue;
    acc += e.conditional(x).matrix() * complex{p, 0.0};
  }
  return acc;
}

inline DensityOperator average_density(const CqEnsemble& e) {
  std::vector<std::size_t> all(e.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return DensityOperator(weighted_sum(e, all));
}

inline double event_probability(const CqEnsemble& e, std::span<const std::size_t> event) {
  double p = 0.0;
  for (std::size_t x : event) p += e.prob(x);
  return p;
}

/// [rho | X in event], renormalized.
inline DensityOperator conditioned_density(const CqEnsemble& e, std::span<const std::size_t> event) {
  const double p = event_probability(e, event);
  if (p <= kProbabilityFloor) {
    raise(ErrorKind::ZeroProbabilityEvent, "event probability " + std::to_string(p));
  }
  return DensityOperator(weighted_sum(e, event) * complex{1.0 / p, 0.0});
}

/// Block x of the cq state: P(x) rho_x.
inline ComplexMatrix cq_block(const CqEnsemble& e, std::size_t x) {
  return e.conditional(x).matrix() * complex{e.prob(x), 0.0};
}

/// The block-diagonal operator sum_x P(x) |x><x| (x) rho_x, classical factor
/// first.
inline DensityOperator cq_state(const CqEnsemble& e, std::size_t dimension_cap = kDefaultDimensionCap) {
  const std::size_t d = e.adversary_dim();
  const std::size_t dim = e.size() * d;
  if (dim > dimension_cap) {
    raise(ErrorKind::DimensionOverflow,
          "cq state dimension " + std::to_string(dim) + " exceeds cap " + std::to_string(dimension_cap));
  }
  ComplexMatrix m(dim, dim);
  for (std::size_t x = 0; x < e.size(); ++x) {
    const double p = e.prob(x);
    const auto& rho = e.conditional(x).matrix();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) m(x * d + i, x * d + j) = p * rho(i, j);
  }
  return DensityOperator(std::move(m));
}

/// Spectrum of the cq state assembled from its blocks: P(x) * eig(rho_x).
inline std::vector<double> cq_eigenvalues(const CqEnsemble& e) {
  std::vector<double> out;
  out.reserve(e.size() * e.adversary_dim());
  for (std::size_t x = 0; x < e.size(); ++x)
    for (double lambda : e.conditional(x).eigenvalues()) out.push_back(e.prob(x) * lambda);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

/// diag(P): the quantum representation of a classical random variable.
inline DensityOperator embed_classical(const ClassicalDistribution& p) {
  return DensityOperator::diagonal(p.probs());
}

}  // namespace qpa
