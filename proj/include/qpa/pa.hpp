#pragma once

// Privacy amplification by two-universal hashing against a quantum
// adversary: the security bounds, the exact distance of the hashed key from
// an ideal key (averaged over the public seed), the extractable key length
// and the asymptotic key rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qpa/entropy.hpp"
#include "qpa/error.hpp"
#include "qpa/hashing.hpp"
#include "qpa/linalg.hpp"
#include "qpa/metrics.hpp"
#include "qpa/parallel.hpp"
#include "qpa/random.hpp"
#include "qpa/states.hpp"

namespace qpa {

/// Source Z with adversary conditionals rho_z, the hash family applied to Z,
/// and the security target epsilon. Value index z is the bit string of z.
class PaInstance {
 public:
  PaInstance(CqEnsemble source, HashFamily family, double epsilon)
      : source_(std::move(source)), family_(family), epsilon_(epsilon) {
    const std::size_t expected = std::size_t{1} << family_.input_bits();
    if (source_.size() != expected) {
      raise(ErrorKind::ValidationError, "source: |Z| = " + std::to_string(source_.size()) + " but family expects 2^" +
                                            std::to_string(family_.input_bits()) + " values");
    }
    if (!(epsilon_ >= 0.0) || epsilon_ >= 1.0) raise(ErrorKind::InvalidEpsilon, "epsilon must lie in [0, 1)");
  }

  const CqEnsemble& source() const noexcept { return source_; }
  const HashFamily& family() const noexcept { return family_; }
  unsigned key_bits() const noexcept { return family_.output_bits(); }
  unsigned input_bits() const noexcept { return family_.input_bits(); }
  double epsilon() const noexcept { return epsilon_; }

  PaInstance with_key_bits(unsigned s) const {
    return {source_, HashFamily(family_.kind(), family_.input_bits(), s), epsilon_};
  }
  PaInstance with_epsilon(double epsilon) const { return {source_, family_, epsilon}; }

 private:
  CqEnsemble source_;
  HashFamily family_;
  double epsilon_;
};

/// Spectrum of the cq state [{Z} (x) rho], assembled block by block.
inline Spectrum cq_spectrum(const CqEnsemble& e) {
  const auto values = cq_eigenvalues(e);
  return Spectrum::from_eigenvalues(values);
}

inline Spectrum average_spectrum(const CqEnsemble& e) { return Spectrum::of(average_density(e)); }

/// S_2([{Z} (x) rho]) and S_0([rho]).
struct CollisionEntropies {
  double collision_entropy = 0.0;  // S_2 of the cq state
  double adversary_rank_entropy = 0.0;  // S_0 of the averaged adversary state
};

inline CollisionEntropies collision_entropies(const CqEnsemble& e) {
  return {renyi_entropy(cq_spectrum(e), 2.0), renyi_entropy(average_spectrum(e), 0.0)};
}

/// S_inf^eps([{Z} (x) rho]) and S_0^eps([rho]) with their smoothing witnesses.
struct SmoothEntropies {
  double epsilon = 0.0;
  SmoothingResult smooth_min;       // S_inf^eps of the cq state
  SmoothingResult smooth_max_rank;  // S_0^eps of the averaged adversary state
};

inline SmoothEntropies smooth_entropies(const CqEnsemble& e, double epsilon) {
  return {epsilon, smooth_renyi_inf(cq_spectrum(e), epsilon), smooth_renyi_0(average_spectrum(e), epsilon)};
}

/// (1/2) 2^{-(S_2 - S_0 - s) / 2}.
inline double theorem1_bound(const CollisionEntropies& h, double key_bits) {
  return 0.5 * std::exp2(-0.5 * (h.collision_entropy - h.adversary_rank_entropy - key_bits));
}

inline double theorem1_bound(const PaInstance& inst) {
  return theorem1_bound(collision_entropies(inst.source()), inst.key_bits());
}

/// (1/2) 2^{-(S_inf^eps - S_0^eps - s) / 2} + 2 eps.
inline double corollary1_bound(const SmoothEntropies& h, double key_bits) {
  return 0.5 * std::exp2(-0.5 * (h.smooth_min.value - h.smooth_max_rank.value - key_bits)) + 2.0 * h.epsilon;
}

inline double corollary1_bound(const PaInstance& inst, double smoothing_epsilon) {
  return corollary1_bound(smooth_entropies(inst.source(), smoothing_epsilon), inst.key_bits());
}

// ---------------------------------------------------------------------------
// Enumeration of the hash functions with their probabilities.

/// One function of the family: the output label of every z, and the
/// probability with which the family picks a function with this labelling.
struct HashOutcome {
  std::vector<std::uint32_t> table;
  double weight = 0.0;
};

namespace detail {

/// Number of set partitions of an n-set into at most m blocks, saturating.
inline std::uint64_t restricted_partition_count(std::size_t n, std::size_t m, std::uint64_t saturate) {
  // Stirling numbers of the second kind S(i, k) for k <= m.
  std::vector<long double> row(m + 1, 0.0L);
  row[0] = 1.0L;
  for (std::size_t i = 1; i <= n; ++i) {
    std::vector<long double> next(m + 1, 0.0L);
    for (std::size_t k = 1; k <= m; ++k) next[k] = static_cast<long double>(k) * row[k] + row[k - 1];
    row = std::move(next);
  }
  long double total = 0.0L;
  for (std::size_t k = 1; k <= m; ++k) total += row[k];
  return total > static_cast<long double>(saturate) ? saturate + 1 : static_cast<std::uint64_t>(total);
}

}  // namespace detail

/// How the expectation over the random hash function is taken.
enum class SeedAveraging {
  SeedEnumeration,       // every seed of the family, uniform weights
  PartitionEnumeration,  // all-functions family: one representative per set partition
};

/// Chooses the cheapest exact enumeration, or nothing if both exceed `cap`.
inline std::optional<SeedAveraging> exact_averaging(const HashFamily& family, std::uint64_t cap) {
  if (family.enumerable(cap)) {
    if (family.kind() == FamilyKind::AllFunctions) {
      const auto partitions = detail::restricted_partition_count(
          std::size_t{1} << family.input_bits(), std::size_t{1} << family.output_bits(), cap);
      if (partitions < family.seed_count()) return SeedAveraging::PartitionEnumeration;
    }
    return SeedAveraging::SeedEnumeration;
  }
  if (family.kind() == FamilyKind::AllFunctions) {
    const auto partitions = detail::restricted_partition_count(std::size_t{1} << family.input_bits(),
                                                               std::size_t{1} << family.output_bits(), cap);
    if (partitions <= cap) return SeedAveraging::PartitionEnumeration;
  }
  return std::nullopt;
}

/// Calls `batch` with consecutive groups of hash outcomes whose weights sum
/// to one overall. The order of outcomes is fixed.
///
/// For the all-functions family, a labelling only matters up to renaming the
/// outputs, so each set partition of Z into k <= 2^s blocks stands for the
/// 2^s (2^s - 1) ... (2^s - k + 1) functions that induce it.
inline void enumerate_hash_outcomes(const HashFamily& family, SeedAveraging mode,
                                    const std::function<void(std::vector<HashOutcome>&)>& batch,
                                    std::size_t batch_size = 4096) {
  std::vector<HashOutcome> pending;
  pending.reserve(batch_size);
  auto flush = [&] {
    if (!pending.empty()) batch(pending);
    pending.clear();
  };

  if (mode == SeedAveraging::SeedEnumeration) {
    const std::uint64_t seeds = family.seed_count();
    const double w = 1.0 / static_cast<double>(seeds);
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
      pending.push_back({output_table(family, seed), w});
      if (pending.size() == batch_size) flush();
    }
    flush();
    return;
  }

  const std::size_t n = std::size_t{1} << family.input_bits();
  const std::size_t m = std::size_t{1} << family.output_bits();
  const double log2_total = static_cast<double>(n) * static_cast<double>(family.output_bits());
  // log2 of m (m-1) ... (m-k+1)
  std::vector<double> log2_falling(m + 1, 0.0);
  for (std::size_t k = 1; k <= m; ++k) log2_falling[k] = log2_falling[k - 1] + std::log2(static_cast<double>(m - k + 1));

  // Restricted growth strings a[0] = 0, a[i] <= 1 + max(a[0..i-1]), blocks <= m.
  std::vector<std::uint32_t> a(n, 0);
  std::vector<std::uint32_t> prefix_max(n, 0);
  auto recurse = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      const std::size_t blocks = prefix_max[n - 1] + 1;
      pending.push_back({a, std::exp2(log2_falling[blocks] - log2_total)});
      if (pending.size() == batch_size) flush();
      return;
    }
    const std::uint32_t top = i == 0 ? 0 : prefix_max[i - 1] + 1;
    const std::uint32_t limit = std::min<std::uint32_t>(top, static_cast<std::uint32_t>(m - 1));
    for (std::uint32_t label = 0; label <= limit; ++label) {
      a[i] = label;
      prefix_max[i] = i == 0 ? label : std::max(prefix_max[i - 1], label);
      self(self, i + 1);
    }
  };
  recurse(recurse, 0);
  flush();
}

/// Per-function quantities of the hashed key S = f(Z).
struct HashedKeyStats {
  double nonuniformity = 0.0;     // d(f(Z)|rho)
  double hs_nonuniformity = 0.0;  // D(f(Z)|rho)
};

/// Blocks P(S = t) [rho | f(Z) = t] = sum_{z : f(z) = t} P(z) rho_z for
/// every key value t (zero blocks included).
inline std::vector<ComplexMatrix> pushforward_blocks(const CqEnsemble& source, std::span<const std::uint32_t> table,
                                                     std::size_t key_values) {
  const std::size_t d = source.adversary_dim();
  std::vector<ComplexMatrix> blocks(key_values, ComplexMatrix(d, d));
  for (std::size_t z = 0; z < table.size(); ++z) {
    const double p = source.prob(z);
    if (p == 0.0) continue;
    const auto& rho = source.conditional(z).matrix();
    auto& block = blocks[table[z]];
    for (std::size_t k = 0; k < rho.entries().size(); ++k) block.entries()[k] += p * rho.entries()[k];
  }
  return blocks;
}

/// The hashed key as a cq ensemble: P(S = t) and [rho | f(Z) = t]. Event
/// probabilities are summed exactly when the source carries exact
/// probabilities, so an empty preimage is recognized as such and gets the
/// averaged state as a placeholder conditional (it carries zero weight).
inline CqEnsemble pushforward_ensemble(const CqEnsemble& source, std::span<const std::uint32_t> table,
                                       std::size_t key_values) {
  const auto& exact = source.distribution().exact();
  std::vector<std::vector<std::size_t>> preimages(key_values);
  for (std::size_t z = 0; z < table.size(); ++z) preimages[table[z]].push_back(z);

  std::vector<DensityOperator> conds;
  conds.reserve(key_values);
  const DensityOperator avg = average_density(source);
  if (exact) {
    std::vector<Rational> probs;
    probs.reserve(key_values);
    for (const auto& pre : preimages) {
      Rational p{0};
      for (std::size_t z : pre) p += (*exact)[z];
      probs.push_back(p);
      conds.push_back(p == Rational{0} ? avg : conditioned_density(source, pre));
    }
    return CqEnsemble(ClassicalDistribution(std::move(probs)), std::move(conds));
  }
  std::vector<double> probs;
  probs.reserve(key_values);
  for (const auto& pre : preimages) {
    const double p = event_probability(source, pre);
    probs.push_back(p);
    conds.push_back(p <= kProbabilityFloor ? avg : conditioned_density(source, pre));
  }
  return CqEnsemble(ClassicalDistribution(std::move(probs)), std::move(conds));
}

inline HashedKeyStats hashed_key_stats(const CqEnsemble& source, const ComplexMatrix& scaled_average,
                                       std::span<const std::uint32_t> table, std::size_t key_values) {
  const auto blocks = pushforward_blocks(source, table, key_values);
  HashedKeyStats stats;
  for (const auto& block : blocks) {
    const ComplexMatrix diff = block - scaled_average;
    stats.hs_nonuniformity += diff.frobenius_sq();
    stats.nonuniformity += 0.5 * trace_norm(HermitianOperator(diff));
  }
  return stats;
}

/// E_F[d(F(Z)|rho)] and E_F[D(F(Z)|rho)], exact over the family.
struct SeedAverage {
  double nonuniformity = 0.0;
  double hs_nonuniformity = 0.0;
  std::uint64_t outcomes = 0;
  SeedAveraging mode = SeedAveraging::SeedEnumeration;
};

inline SeedAverage seed_average(const PaInstance& inst, std::uint64_t cap = kDefaultSeedCap) {
  const auto mode = exact_averaging(inst.family(), cap);
  if (!mode) {
    raise(ErrorKind::SeedSpaceTooLarge, "family " + std::string(to_string(inst.family().kind())) + " with 2^" +
                                            std::to_string(inst.family().seed_bits()) +
                                            " seeds cannot be enumerated under cap " + std::to_string(cap));
  }
  const std::size_t key_values = std::size_t{1} << inst.key_bits();
  const ComplexMatrix scaled_average =
      average_density(inst.source()).matrix() * complex{1.0 / static_cast<double>(key_values), 0.0};

  SeedAverage avg;
  avg.mode = *mode;
  enumerate_hash_outcomes(inst.family(), *mode, [&](std::vector<HashOutcome>& outcomes) {
    std::vector<HashedKeyStats> stats(outcomes.size());
    const auto d_values = parallel_map(outcomes.size(), [&](std::size_t i) {
      stats[i] = hashed_key_stats(inst.source(), scaled_average, outcomes[i].table, key_values);
      return stats[i].nonuniformity;
    });
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      avg.nonuniformity += outcomes[i].weight * d_values[i];
      avg.hs_nonuniformity += outcomes[i].weight * stats[i].hs_nonuniformity;
    }
    avg.outcomes += outcomes.size();
  });
  return avg;
}

/// d(F(Z) | {F} (x) rho) computed as the seed average of d(f(Z)|rho).
inline double exact_key_distance(const PaInstance& inst, std::uint64_t cap = kDefaultSeedCap) {
  return seed_average(inst, cap).nonuniformity;
}

/// The same distance from the full operators [{F(Z)} (x) rho (x) {F}] and
/// [{U}] (x) [rho] (x) [{F}], with no use of the seed decomposition. Only
/// feasible for tiny instances.
inline double exact_key_distance_monolithic(const PaInstance& inst, std::size_t dimension_cap = 512) {
  const auto& fam = inst.family();
  if (!fam.enumerable(dimension_cap)) raise(ErrorKind::DimensionOverflow, "too many seeds for the joint operator");
  const std::size_t seeds = fam.seed_count();
  const std::size_t key_values = std::size_t{1} << inst.key_bits();
  const std::size_t d = inst.source().adversary_dim();
  const std::size_t dim = key_values * d * seeds;
  if (dim > dimension_cap) raise(ErrorKind::DimensionOverflow, "joint operator dimension " + std::to_string(dim));

  const DensityOperator avg = average_density(inst.source());
  ComplexMatrix real(dim, dim);
  ComplexMatrix ideal(dim, dim);
  const double pf = 1.0 / static_cast<double>(seeds);
  const double pu = 1.0 / static_cast<double>(key_values);
  // Index order: key value t, adversary i, seed f.
  auto index = [&](std::size_t t, std::size_t i, std::size_t f) { return (t * d + i) * seeds + f; };
  for (std::size_t f = 0; f < seeds; ++f) {
    const auto table = output_table(fam, f);
    for (std::size_t z = 0; z < table.size(); ++z) {
      const double p = inst.source().prob(z) * pf;
      const auto& rho = inst.source().conditional(z).matrix();
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) real(index(table[z], i, f), index(table[z], j, f)) += p * rho(i, j);
    }
    for (std::size_t t = 0; t < key_values; ++t)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) ideal(index(t, i, f), index(t, j, f)) = pu * pf * avg.matrix()(i, j);
  }
  return trace_distance(DensityOperator(std::move(real)), DensityOperator(std::move(ideal)));
}

/// Monte Carlo estimate of the seed average for families beyond the cap.
struct SampledDistance {
  double mean = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

inline SampledDistance sampled_key_distance(const PaInstance& inst, std::uint64_t samples, Rng& rng) {
  const auto& fam = inst.family();
  const std::size_t inputs = std::size_t{1} << fam.input_bits();
  const std::size_t key_values = std::size_t{1} << inst.key_bits();
  const ComplexMatrix scaled_average =
      average_density(inst.source()).matrix() * complex{1.0 / static_cast<double>(key_values), 0.0};

  // Draw every table up front so the result does not depend on threading.
  std::vector<std::vector<std::uint32_t>> tables(samples);
  for (auto& table : tables) {
    if (fam.kind() == FamilyKind::AllFunctions) {
      table.resize(inputs);
      for (auto& out : table) out = static_cast<std::uint32_t>(rng.below(key_values));
    } else {
      const std::uint64_t seed = rng.next_u64() & ((std::uint64_t{1} << fam.seed_bits()) - 1);
      table = output_table(fam, seed);
    }
  }
  const auto values = parallel_map(tables.size(), [&](std::size_t i) {
    return hashed_key_stats(inst.source(), scaled_average, tables[i], key_values).nonuniformity;
  });
  SampledDistance out;
  out.samples = samples;
  double sum = 0.0, sum_sq = 0.0;
  for (double v : values) {
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(samples);
  out.mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sum_sq - n * out.mean * out.mean) / (n - 1.0)) : 0.0;
  out.standard_error = std::sqrt(var / n);
  return out;
}

/// Key length rule s = S_inf^eb - S_0^eb - 2 log2(1 / (4 eb)) with eb = eps/4.
struct KeyLength {
  int length = 0;             // floor of the rule, clamped to [0, n]
  double real_value = 0.0;    // unclamped right-hand side
  double smoothing_epsilon = 0.0;
  double bound_at_length = 0.0;  // corollary bound at `length`, smoothing eb
  SmoothEntropies entropies;
};

inline KeyLength extractable_key_length(const CqEnsemble& source, unsigned input_bits, double epsilon) {
  if (!(epsilon > 0.0) || epsilon >= 1.0) raise(ErrorKind::InvalidEpsilon, "key length needs 0 < epsilon < 1");
  KeyLength out;
  out.smoothing_epsilon = epsilon / 4.0;
  out.entropies = smooth_entropies(source, out.smoothing_epsilon);
  out.real_value = out.entropies.smooth_min.value - out.entropies.smooth_max_rank.value -
                   2.0 * std::log2(1.0 / (4.0 * out.smoothing_epsilon));
  const double floored = std::floor(out.real_value);
  out.length = static_cast<int>(std::clamp(floored, 0.0, static_cast<double>(input_bits)));
  out.bound_at_length = corollary1_bound(out.entropies, out.length);
  return out;
}

inline KeyLength extractable_key_length(const PaInstance& inst) {
  return extractable_key_length(inst.source(), inst.input_bits(), inst.epsilon());
}

/// A key of length zero has nothing to distinguish; otherwise the corollary
/// bound at the returned length must stay within epsilon.
inline bool key_length_consistent(const KeyLength& k, double epsilon, double slack = 1e-12) {
  return k.length == 0 || k.bound_at_length <= epsilon + slack;
}

/// S([{Z} (x) rho]) - S([rho]) = H(Z|rho), bits per symbol.
inline double asymptotic_rate(const CqEnsemble& source) {
  const double joint = renyi_entropy(cq_spectrum(source), 1.0);
  const double adversary = renyi_entropy(average_spectrum(source), 1.0);
  return joint - adversary;
}

/// H(f(Z) | rho) for one hash function, from the pushforward blocks.
inline double hashed_conditional_entropy(const CqEnsemble& source, std::span<const std::uint32_t> table,
                                         std::size_t key_values) {
  std::vector<double> values;
  for (const auto& block : pushforward_blocks(source, table, key_values)) {
    for (double v : eigenvalues(HermitianOperator(block))) values.push_back(std::max(v, 0.0));
  }
  return renyi_entropy(Spectrum::from_eigenvalues(values), 1.0) - renyi_entropy(average_spectrum(source), 1.0);
}

struct SecurityReport {
  unsigned input_bits = 0;
  unsigned key_bits = 0;
  double epsilon = 0.0;
  FamilyKind family = FamilyKind::Toeplitz;

  std::optional<double> exact_d;
  std::optional<SampledDistance> sampled_d;  // only when exact_d is absent
  std::optional<SeedAveraging> averaging;
  double thm1_bound = 0.0;
  std::optional<double> cor1_bound;  // smoothing eps/4; absent when eps = 0
  std::optional<KeyLength> key_length;
  double rate = 0.0;

  CollisionEntropies collision;
  std::optional<SmoothEntropies> smooth;

  bool thm1_holds = true;
  bool cor1_holds = true;
  bool key_length_ok = true;
  bool entropies_finite = true;

  bool pass() const { return thm1_holds && cor1_holds && key_length_ok && entropies_finite; }
};

struct ReportOptions {
  std::uint64_t seed_cap = kDefaultSeedCap;
  std::uint64_t monte_carlo_samples = 10'000;
  std::uint64_t rng_seed = 1;
  double tolerance = 1e-9;
  bool evaluate_distance = true;  // false: bounds, entropies and rate only
  bool require_exact = false;     // raise CapExceeded instead of sampling
};

inline SecurityReport build_report(const PaInstance& inst, const ReportOptions& options = {}) {
  SecurityReport r;
  r.input_bits = inst.input_bits();
  r.key_bits = inst.key_bits();
  r.epsilon = inst.epsilon();
  r.family = inst.family().kind();

  r.collision = collision_entropies(inst.source());
  r.thm1_bound = theorem1_bound(r.collision, inst.key_bits());
  r.rate = asymptotic_rate(inst.source());

  if (inst.epsilon() > 0.0) {
    r.key_length = extractable_key_length(inst);
    r.smooth = r.key_length->entropies;
    r.cor1_bound = corollary1_bound(*r.smooth, inst.key_bits());
    r.key_length_ok = key_length_consistent(*r.key_length, inst.epsilon());
  }

  if (options.evaluate_distance) {
    if (auto mode = exact_averaging(inst.family(), options.seed_cap)) {
      r.averaging = mode;
      r.exact_d = exact_key_distance(inst, options.seed_cap);
    } else if (options.require_exact) {
      raise(ErrorKind::CapExceeded, "family " + std::string(to_string(inst.family().kind())) + " with 2^" +
                                        std::to_string(inst.family().seed_bits()) +
                                        " seeds has no exact average under cap " + std::to_string(options.seed_cap));
    } else {
      Rng rng(options.rng_seed);
      r.sampled_d = sampled_key_distance(inst, options.monte_carlo_samples, rng);
    }
  }

  auto finite = [](double x) { return std::isfinite(x); };
  r.entropies_finite = finite(r.collision.collision_entropy) && finite(r.collision.adversary_rank_entropy) &&
                       finite(r.rate) &&
                       (!r.smooth || (finite(r.smooth->smooth_min.value) && finite(r.smooth->smooth_max_rank.value)));
  if (r.exact_d) {
    r.thm1_holds = *r.exact_d <= r.thm1_bound + options.tolerance;
    if (r.cor1_bound) r.cor1_holds = *r.exact_d <= *r.cor1_bound + options.tolerance;
  }
  return r;
}

}  // namespace qpa
