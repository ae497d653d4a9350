#pragma once

// Randomized property checks shared by the command-line tool and the test
// suite. Each check draws one random instance from its own generator, seeded
// from (base seed, check index, trial index), and returns the two sides of
// the stated relation. A failing trial is therefore replayable from three
// integers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qpa/entropy.hpp"
#include "qpa/error.hpp"
#include "qpa/linalg.hpp"
#include "qpa/metrics.hpp"
#include "qpa/pa.hpp"
#include "qpa/parallel.hpp"
#include "qpa/random.hpp"
#include "qpa/states.hpp"

namespace qpa {

namespace channels {

inline DensityOperator conjugate(const DensityOperator& rho, const ComplexMatrix& u) {
  return DensityOperator(u * rho.matrix() * u.adjoint());
}

/// Traces out the second factor of a (da x db)-dimensional operator.
inline DensityOperator partial_trace_second(const DensityOperator& rho, std::size_t da, std::size_t db) {
  if (rho.dim() != da * db) raise(ErrorKind::DimensionMismatch, "partial trace dimensions do not match");
  ComplexMatrix out(da, da);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j)
      for (std::size_t k = 0; k < db; ++k) out(i, j) += rho.matrix()(i * db + k, j * db + k);
  return DensityOperator(std::move(out));
}

/// Keeps the diagonal in the computational basis.
inline DensityOperator pinch(const DensityOperator& rho) {
  ComplexMatrix out(rho.dim(), rho.dim());
  for (std::size_t i = 0; i < rho.dim(); ++i) out(i, i) = rho.matrix()(i, i);
  return DensityOperator(std::move(out));
}

/// Outcome distribution of the projective measurement whose projector for
/// outcome `group[k]` contains basis column k of `basis`.
inline ClassicalDistribution measure(const DensityOperator& rho, const ComplexMatrix& basis,
                                     std::span<const std::size_t> group, std::size_t outcomes) {
  std::vector<double> p(outcomes, 0.0);
  const auto& m = rho.matrix();
  for (std::size_t k = 0; k < basis.cols(); ++k) {
    complex v{0.0, 0.0};
    for (std::size_t i = 0; i < basis.rows(); ++i)
      for (std::size_t j = 0; j < basis.rows(); ++j) v += std::conj(basis(i, k)) * m(i, j) * basis(j, k);
    p[group[k]] += v.real();
  }
  for (auto& x : p) x = std::max(x, 0.0);
  double total = 0.0;
  for (double x : p) total += x;
  for (auto& x : p) x /= total;
  return ClassicalDistribution(std::move(p));
}

}  // namespace channels

enum class Relation { AtMost, Equal };

/// The two sides of one checked relation: lhs <= rhs or lhs == rhs.
struct TrialResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct PropertyCheck {
  std::string name;
  std::string statement;
  Relation relation = Relation::AtMost;
  double tolerance = 1e-9;
  std::function<std::pair<double, double>(Rng&)> draw;
};

/// Seed of trial `trial` of check `check` (splitmix64 finalizer over the mix).
inline std::uint64_t trial_seed(std::uint64_t base, std::size_t check, std::size_t trial) {
  std::uint64_t z = base ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(check) + 1)) ^
                    (0xbf58476d1ce4e5b9ULL * (static_cast<std::uint64_t>(trial) + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {

inline std::size_t dim_between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

inline DensityOperator any_density(Rng& rng, std::size_t d) { return random_density(rng, d, 1 + rng.below(d)); }

inline CqEnsemble paired_conditionals(Rng& rng, const ClassicalDistribution& p, std::size_t d) {
  std::vector<DensityOperator> conds;
  for (std::size_t x = 0; x < p.size(); ++x) conds.push_back(any_density(rng, d));
  return CqEnsemble(p, std::move(conds));
}

// A small instance whose family can be averaged exactly in well under a
// second: toeplitz or gf2n_mult with n <= 3, or all_functions with n <= 3.
inline PaInstance small_instance(Rng& rng, bool any_family = true) {
  const unsigned n = 1 + static_cast<unsigned>(rng.below(3));
  const unsigned s = 1 + static_cast<unsigned>(rng.below(n));
  const std::size_t pick = any_family ? rng.below(3) : rng.below(2);
  const FamilyKind kind = pick == 0 ? FamilyKind::Toeplitz : pick == 1 ? FamilyKind::Gf2nMult : FamilyKind::AllFunctions;
  auto source = random_ensemble(rng, std::size_t{1} << n, dim_between(rng, 1, 3));
  return PaInstance(std::move(source), HashFamily(kind, n, s), 0.0);
}

}  // namespace detail

/// Every property in the suite, in a fixed order.
inline const std::vector<PropertyCheck>& property_checks() {
  using detail::any_density;
  using detail::dim_between;
  static const std::vector<PropertyCheck> checks = {
      {"schur_inequality", "sum |lambda_i|^2 <= tr(A A^dagger) for a random A with known eigenvalues",
       Relation::AtMost, 1e-9,
       [](Rng& rng) {
         // A = U T U^dagger with T upper triangular, so the eigenvalues are diag(T).
         const std::size_t n = dim_between(rng, 2, 6);
         ComplexMatrix t(n, n);
         double eig_sq = 0.0;
         for (std::size_t i = 0; i < n; ++i) {
           t(i, i) = rng.complex_normal();
           eig_sq += std::norm(t(i, i));
           for (std::size_t j = i + 1; j < n; ++j) t(i, j) = rng.complex_normal();
         }
         const auto u = random_unitary(rng, n);
         const auto a = u * t * u.adjoint();
         return std::pair{eig_sq, a.frobenius_sq()};
       }},
      {"schur_equality_hermitian", "sum lambda_i^2 = tr(A^2) for Hermitian A", Relation::Equal, 1e-9,
       [](Rng& rng) {
         const auto h = random_hermitian(rng, dim_between(rng, 1, 6));
         double eig_sq = 0.0;
         for (double v : eigenvalues(h)) eig_sq += v * v;
         return std::pair{eig_sq, h.matrix().frobenius_sq()};
       }},
      {"rank_trace_norm_bound", "tr|A| <= sqrt(rank A) sqrt(tr(A A^dagger)) for Hermitian A of forced rank",
       Relation::AtMost, 1e-9,
       [](Rng& rng) {
         const std::size_t n = dim_between(rng, 2, 8);
         const std::size_t r = 1 + rng.below(n);
         std::vector<double> values(n, 0.0);
         for (std::size_t k = 0; k < r; ++k) values[k] = rng.normal();
         const HermitianOperator a(random_with_spectrum(rng, values));
         return std::pair{trace_norm(a), std::sqrt(static_cast<double>(numeric_rank(a)) * a.matrix().frobenius_sq())};
       }},
      {"renyi_order_monotonicity", "S_beta(rho) <= S_alpha(rho) for alpha <= beta", Relation::AtMost, 1e-9,
       [](Rng& rng) {
         const auto rho = any_density(rng, dim_between(rng, 1, 5));
         double alpha = rng.uniform(0.0, 4.0);
         double beta = rng.uniform(0.0, 4.0);
         if (alpha > beta) std::swap(alpha, beta);
         switch (rng.below(4)) {
           case 0: alpha = 0.0; break;
           case 1: beta = kInfinity; break;
           case 2: alpha = std::min(alpha, 1.0), beta = std::max(beta, 1.0); break;
           default: break;
         }
         return std::pair{renyi_entropy(rho, beta), renyi_entropy(rho, alpha)};
       }},
      {"trace_distance_subadditivity", "delta(r (x) r', s (x) s') <= delta(r, s) + delta(r', s')", Relation::AtMost,
       1e-9,
       [](Rng& rng) {
         const std::size_t d1 = dim_between(rng, 1, 3);
         const std::size_t d2 = dim_between(rng, 1, 3);
         const auto r = any_density(rng, d1), s = any_density(rng, d1);
         const auto r2 = any_density(rng, d2), s2 = any_density(rng, d2);
         return std::pair{trace_distance(kron(r, r2), kron(s, s2)), trace_distance(r, s) + trace_distance(r2, s2)};
       }},
      {"trace_distance_tensor_invariance", "delta(r (x) t, s (x) t) = delta(r, s)", Relation::Equal, 1e-9,
       [](Rng& rng) {
         const std::size_t d1 = dim_between(rng, 1, 3);
         const auto r = any_density(rng, d1), s = any_density(rng, d1);
         const auto t = any_density(rng, dim_between(rng, 1, 3));
         return std::pair{trace_distance(kron(r, t), kron(s, t)), trace_distance(r, s)};
       }},
      {"channel_contractivity", "delta(E(r), E(s)) <= delta(r, s) for unitary, partial trace and pinching channels",
       Relation::AtMost, 1e-9,
       [](Rng& rng) {
         const std::size_t which = rng.below(3);
         if (which == 1) {
           const std::size_t da = dim_between(rng, 1, 3), db = dim_between(rng, 1, 3);
           const auto r = any_density(rng, da * db), s = any_density(rng, da * db);
           return std::pair{trace_distance(channels::partial_trace_second(r, da, db), channels::partial_trace_second(s, da, db)),
                            trace_distance(r, s)};
         }
         const std::size_t d = dim_between(rng, 1, 5);
         const auto r = any_density(rng, d), s = any_density(rng, d);
         if (which == 0) {
           const auto u = random_unitary(rng, d);
           return std::pair{trace_distance(channels::conjugate(r, u), channels::conjugate(s, u)), trace_distance(r, s)};
         }
         return std::pair{trace_distance(channels::pinch(r), channels::pinch(s)), trace_distance(r, s)};
       }},
      {"measurement_contractivity", "delta(P, Q) <= delta(r, s) for outcome distributions of a projective measurement",
       Relation::AtMost, 1e-9,
       [](Rng& rng) {
         const std::size_t d = dim_between(rng, 1, 5);
         const auto r = any_density(rng, d), s = any_density(rng, d);
         const auto basis = random_unitary(rng, d);
         const std::size_t outcomes = 1 + rng.below(d);
         std::vector<std::size_t> group(d);
         for (std::size_t k = 0; k < d; ++k) group[k] = k < outcomes ? k : rng.below(outcomes);
         return std::pair{variational_distance(channels::measure(r, basis, group, outcomes),
                                               channels::measure(s, basis, group, outcomes)),
                          trace_distance(r, s)};
       }},
      {"maximal_coupling", "Pr[X != X'] = delta(P, Q) for the constructed coupling with exact marginals",
       Relation::Equal, 1e-9,
       [](Rng& rng) {
         const std::size_t n = dim_between(rng, 1, 8);
         const auto p = random_rational_distribution(rng, n);
         const auto q = random_rational_distribution(rng, n);
         const auto c = maximal_coupling(p, q);
         const auto m1 = c.first_marginal();
         const auto m2 = c.second_marginal();
         double marginal_error = 0.0;
         for (std::size_t x = 0; x < n; ++x)
           marginal_error = std::max({marginal_error, std::abs(m1[x] - p[x]), std::abs(m2[x] - q[x])});
         for (double x : c.joint) marginal_error = std::max(marginal_error, -x);
         return std::pair{c.prob_differ() + marginal_error, variational_distance(p, q)};
       }},
      {"cq_distance_expectation", "delta([{X} (x) rho], [{X} (x) sigma]) = sum_x P(x) delta(rho_x, sigma_x)",
       Relation::Equal, 1e-9,
       [](Rng& rng) {
         const auto p = random_rational_distribution(rng, dim_between(rng, 1, 6));
         const std::size_t d = dim_between(rng, 1, 3);
         const auto a = detail::paired_conditionals(rng, p, d);
         const auto b = detail::paired_conditionals(rng, p, d);
         double expectation = 0.0;
         for (std::size_t x = 0; x < p.size(); ++x)
           expectation += p[x] * trace_distance(a.conditional(x), b.conditional(x));
         return std::pair{trace_distance(cq_state(a), cq_state(b)), expectation};
       }},
      {"trace_vs_hilbert_schmidt", "delta(r, s) <= (1/2) sqrt(rank(r - s) Delta(r, s))", Relation::AtMost, 1e-9,
       [](Rng& rng) {
         const std::size_t d = dim_between(rng, 1, 6);
         const auto r = any_density(rng, d), s = any_density(rng, d);
         const HermitianOperator diff = r.op() - s.op();
         const double rank = static_cast<double>(numeric_rank(diff));
         return std::pair{trace_distance(r, s), 0.5 * std::sqrt(rank * hs_square_distance(r, s))};
       }},
      {"nonuniformity_vs_hs", "d(X|rho) <= (1/2) 2^{S_0([rho])/2} sqrt(|X| D(X|rho))", Relation::AtMost, 1e-9,
       [](Rng& rng) {
         const auto e = random_ensemble(rng, dim_between(rng, 1, 8), dim_between(rng, 1, 4));
         const double s0 = renyi_entropy(average_density(e), 0.0);
         return std::pair{nonuniformity(e), 0.5 * std::exp2(s0 / 2.0) *
                                                std::sqrt(static_cast<double>(e.size()) * hs_nonuniformity(e))};
       }},
      {"hs_nonuniformity_closed_form", "D(X|rho) = tr(sum_x P(x)^2 rho_x^2) - tr([rho]^2)/|X|", Relation::Equal, 1e-9,
       [](Rng& rng) {
         const auto e = random_ensemble(rng, dim_between(rng, 1, 8), dim_between(rng, 1, 4));
         return std::pair{hs_nonuniformity(e), hs_nonuniformity_closed_form(e)};
       }},
      {"hashed_collision_bound", "E_F[D(F(Z)|rho)] <= 2^{-S_2([{Z} (x) rho])}", Relation::AtMost, 1e-9,
       [](Rng& rng) {
         const auto inst = detail::small_instance(rng);
         return std::pair{seed_average(inst).hs_nonuniformity,
                          std::exp2(-collision_entropies(inst.source()).collision_entropy)};
       }},
      {"seed_decomposition", "d(F(Z)|{F} (x) rho) from the joint operator = E_F[d(F(Z)|rho)]", Relation::Equal, 1e-8,
       [](Rng& rng) {
         for (;;) {
           const auto inst = detail::small_instance(rng, false);
           const std::size_t dim = (std::size_t{1} << inst.key_bits()) * inst.source().adversary_dim() *
                                   inst.family().seed_count();
           if (dim > 256) continue;
           return std::pair{exact_key_distance_monolithic(inst), exact_key_distance(inst)};
         }
       }},
      {"leftover_hash_bound", "E_F[d(F(Z)|rho)] <= (1/2) 2^{-(S_2([{Z} (x) rho]) - S_0([rho]) - s)/2}",
       Relation::AtMost, 1e-9,
       [](Rng& rng) {
         const auto inst = detail::small_instance(rng);
         return std::pair{exact_key_distance(inst), theorem1_bound(inst)};
       }},
      {"hashing_data_processing", "H(f(Z)|rho) <= H(Z|rho) for a random seed", Relation::AtMost, 1e-9,
       [](Rng& rng) {
         const auto inst = detail::small_instance(rng, false);
         const auto table = output_table(inst.family(), rng.below(inst.family().seed_count()));
         return std::pair{hashed_conditional_entropy(inst.source(), table, std::size_t{1} << inst.key_bits()),
                          asymptotic_rate(inst.source())};
       }},
  };
  return checks;
}

inline std::size_t property_index(std::string_view name) {
  const auto& checks = property_checks();
  for (std::size_t i = 0; i < checks.size(); ++i)
    if (checks[i].name == name) return i;
  raise(ErrorKind::ValidationError, "lemma: unknown property '" + std::string(name) + "'");
}

/// Runs one trial. With `tamper` set, the right-hand side is moved so the
/// relation fails; this exercises the failure path of the harness.
inline TrialResult run_trial(std::size_t check, std::uint64_t base_seed, std::size_t trial, bool tamper = false) {
  const auto& c = property_checks().at(check);
  Rng rng(trial_seed(base_seed, check, trial));
  auto [lhs, rhs] = c.draw(rng);
  if (tamper) rhs = lhs - 0.5;
  TrialResult r{lhs, rhs, false};
  r.pass = c.relation == Relation::AtMost ? lhs <= rhs + c.tolerance : std::abs(lhs - rhs) <= c.tolerance;
  return r;
}

struct PropertySummary {
  std::size_t check = 0;
  std::size_t trials = 0;
  std::size_t passed = 0;
  double worst_excess = -kInfinity;  // max of lhs - rhs (or |lhs - rhs| for equalities)
  std::optional<std::size_t> first_failure;
  std::optional<TrialResult> failure;

  bool pass() const { return passed == trials; }
};

/// Runs `trials` trials of every check. `tampered` names checks whose
/// bound is deliberately broken.
inline std::vector<PropertySummary> verify_properties(std::size_t trials, std::uint64_t base_seed,
                                                      std::span<const std::string> tampered = {}) {
  if (trials < 1) raise(ErrorKind::ValidationError, "trials: must be at least 1");
  for (const auto& name : tampered) (void)property_index(name);
  const auto& checks = property_checks();
  std::vector<PropertySummary> out;
  out.reserve(checks.size());
  for (std::size_t c = 0; c < checks.size(); ++c) {
    const bool tamper = std::find(tampered.begin(), tampered.end(), checks[c].name) != tampered.end();
    const auto results = parallel_map(trials, [&](std::size_t t) { return run_trial(c, base_seed, t, tamper); });
    PropertySummary s;
    s.check = c;
    s.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& r = results[t];
      const double excess = checks[c].relation == Relation::AtMost ? r.lhs - r.rhs : std::abs(r.lhs - r.rhs);
      s.worst_excess = std::max(s.worst_excess, excess);
      if (r.pass) {
        ++s.passed;
      } else if (!s.first_failure) {
        s.first_failure = t;
        s.failure = r;
      }
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace qpa
