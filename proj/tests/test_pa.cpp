#include <catch_amalgamated.hpp>

#include "qpa/metrics.hpp"
#include "qpa/pa.hpp"
#include "qpa/random.hpp"

using namespace qpa;
using Catch::Matchers::WithinAbs;

namespace {

CqEnsemble uniform_trivial(unsigned n) {
  return CqEnsemble::independent(ClassicalDistribution::uniform(std::size_t{1} << n), DensityOperator::trivial());
}

CqEnsemble perfect_copy(unsigned n) {
  const std::size_t values = std::size_t{1} << n;
  std::vector<DensityOperator> conds;
  for (std::size_t z = 0; z < values; ++z) conds.push_back(DensityOperator::basis_state(values, z));
  return CqEnsemble(ClassicalDistribution::uniform(values), std::move(conds));
}

// A classical adversary: joint distribution P(z, w) held as rows z.
struct Joint {
  std::vector<std::vector<double>> p;

  CqEnsemble ensemble() const {
    std::vector<double> pz;
    std::vector<DensityOperator> conds;
    for (const auto& row : p) {
      double total = 0.0;
      for (double x : row) total += x;
      pz.push_back(total);
      std::vector<double> cond(row.size());
      for (std::size_t w = 0; w < row.size(); ++w) cond[w] = total > 0.0 ? row[w] / total : 1.0 / row.size();
      conds.push_back(DensityOperator::diagonal(cond));
    }
    return CqEnsemble(ClassicalDistribution(pz), std::move(conds));
  }
};

Joint random_joint(Rng& rng, std::size_t values, std::size_t symbols) {
  Joint j;
  double total = 0.0;
  j.p.assign(values, std::vector<double>(symbols));
  while (total == 0.0)
    for (auto& row : j.p)
      for (auto& x : row) total += (x = rng.uniform() < 0.2 ? 0.0 : rng.uniform());
  for (auto& row : j.p)
    for (auto& x : row) x /= total;
  return j;
}

// (1/2) sum_{t,w} |P(f(Z) = t, W = w) - P(W = w) / K|.
double classical_key_distance(const Joint& j, const std::vector<std::uint32_t>& table, std::size_t key_values) {
  const std::size_t symbols = j.p[0].size();
  std::vector<std::vector<double>> joint(key_values, std::vector<double>(symbols, 0.0));
  std::vector<double> pw(symbols, 0.0);
  for (std::size_t z = 0; z < j.p.size(); ++z)
    for (std::size_t w = 0; w < symbols; ++w) {
      joint[table[z]][w] += j.p[z][w];
      pw[w] += j.p[z][w];
    }
  double sum = 0.0;
  for (std::size_t t = 0; t < key_values; ++t)
    for (std::size_t w = 0; w < symbols; ++w) sum += std::abs(joint[t][w] - pw[w] / static_cast<double>(key_values));
  return 0.5 * sum;
}

double shannon(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log2(x);
  return h;
}

// H(Z|W) = H(ZW) - H(W).
double classical_conditional_entropy(const Joint& j) {
  std::vector<double> flat;
  std::vector<double> pw(j.p[0].size(), 0.0);
  for (const auto& row : j.p)
    for (std::size_t w = 0; w < row.size(); ++w) {
      flat.push_back(row[w]);
      pw[w] += row[w];
    }
  return shannon(flat) - shannon(pw);
}

double average_with_mode(const PaInstance& inst, SeedAveraging mode) {
  const std::size_t key_values = std::size_t{1} << inst.key_bits();
  const ComplexMatrix scaled =
      average_density(inst.source()).matrix() * complex{1.0 / static_cast<double>(key_values), 0.0};
  double total = 0.0;
  double weight = 0.0;
  enumerate_hash_outcomes(inst.family(), mode, [&](std::vector<HashOutcome>& batch) {
    for (const auto& o : batch) {
      total += o.weight * hashed_key_stats(inst.source(), scaled, o.table, key_values).nonuniformity;
      weight += o.weight;
    }
  });
  REQUIRE_THAT(weight, WithinAbs(1.0, 1e-12));
  return total;
}

// Families with exact averaging at |Z| <= 16 and s <= 3.
HashFamily random_small_family(Rng& rng) {
  for (;;) {
    const auto kind = rng.below(2) == 0 ? FamilyKind::Toeplitz : FamilyKind::AllFunctions;
    const unsigned n = 1 + static_cast<unsigned>(rng.below(4));
    const unsigned s = 1 + static_cast<unsigned>(rng.below(std::min(n, 3U)));
    const HashFamily f(kind, n, s);
    if (exact_averaging(f, kDefaultSeedCap)) return f;
  }
}

}  // namespace

TEST_CASE("PaInstance validation", "[pa]") {
  REQUIRE_THROWS_AS(PaInstance(uniform_trivial(3), HashFamily(FamilyKind::Toeplitz, 2, 1), 0.1), Error);
  REQUIRE_THROWS_AS(PaInstance(uniform_trivial(2), HashFamily(FamilyKind::Toeplitz, 2, 1), 1.0), Error);
  REQUIRE_THROWS_AS(PaInstance(uniform_trivial(2), HashFamily(FamilyKind::Toeplitz, 2, 1), -0.1), Error);
}

TEST_CASE("theorem1_bound", "[pa]") {
  REQUIRE_THAT(theorem1_bound(PaInstance(uniform_trivial(4), HashFamily(FamilyKind::Toeplitz, 4, 2), 0.0)),
               WithinAbs(0.25, 1e-15));
  REQUIRE_THAT(theorem1_bound(PaInstance(uniform_trivial(2), HashFamily(FamilyKind::Toeplitz, 2, 1), 0.0)),
               WithinAbs(0.5 * std::sqrt(0.5), 1e-15));
  // No compression margin.
  REQUIRE_THAT(theorem1_bound(PaInstance(uniform_trivial(3), HashFamily(FamilyKind::Toeplitz, 3, 3), 0.0)),
               WithinAbs(0.5, 1e-15));

  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const PaInstance inst(random_ensemble(rng, 8, 2), HashFamily(FamilyKind::Toeplitz, 3, 3), 0.0);
    for (unsigned s = 3; s > 1; --s) {
      REQUIRE_THAT(theorem1_bound(inst.with_key_bits(s - 1)),
                   WithinAbs(theorem1_bound(inst.with_key_bits(s)) / std::sqrt(2.0), 1e-12));
    }
  }
}

TEST_CASE("corollary1_bound", "[pa]") {
  for (double eps : {0.0, 0.01, 0.1}) {
    const PaInstance inst(uniform_trivial(4), HashFamily(FamilyKind::Toeplitz, 4, 1), 0.0);
    REQUIRE_THAT(corollary1_bound(inst, eps), WithinAbs(0.5 * std::exp2(-1.5) + 2.0 * eps, 1e-12));
  }
  Rng rng(52);
  for (int trial = 0; trial < 30; ++trial) {
    const PaInstance inst(random_ensemble(rng, 4, 2), HashFamily(FamilyKind::Toeplitz, 2, 1), 0.0);
    const double cor = corollary1_bound(inst, 0.0);
    REQUIRE(cor >= theorem1_bound(inst) - 1e-12);  // min-entropy never exceeds collision entropy
    REQUIRE(exact_key_distance(inst) <= cor + 1e-9);
  }
}

TEST_CASE("exact_key_distance worked instances", "[pa]") {
  SECTION("uniform 2-bit source, trivial adversary, Toeplitz s=1") {
    const PaInstance inst(uniform_trivial(2), HashFamily(FamilyKind::Toeplitz, 2, 1), 0.0);
    REQUIRE_THAT(exact_key_distance(inst), WithinAbs(0.125, 1e-15));
    // Seed by seed: only the zero matrix is unbalanced.
    const ComplexMatrix half = ComplexMatrix::identity(1) * complex{0.5, 0.0};
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto table = output_table(inst.family(), seed);
      REQUIRE_THAT(hashed_key_stats(inst.source(), half, table, 2).nonuniformity,
                   WithinAbs(seed == 0 ? 0.5 : 0.0, 1e-15));
    }
  }
  SECTION("all-functions family against brute-force enumeration") {
    // Exact fractions from enumerating every function with rational arithmetic.
    struct Row {
      unsigned n, s;
      double expected;
    };
    const Row rows[] = {{1, 1, 1.0 / 4.0},
                        {2, 1, 3.0 / 16.0},
                        {2, 2, 81.0 / 256.0},
                        {3, 1, 35.0 / 256.0},
                        {3, 2, 15309.0 / 65536.0}};
    for (const auto& row : rows) {
      const PaInstance inst(uniform_trivial(row.n), HashFamily(FamilyKind::AllFunctions, row.n, row.s), 0.0);
      REQUIRE_THAT(exact_key_distance(inst), WithinAbs(row.expected, 1e-12));
    }
  }
  SECTION("identical conditionals factor out") {
    Rng rng(53);
    const auto rho = random_density(rng, 3);
    const PaInstance with_rho(CqEnsemble::independent(ClassicalDistribution::uniform(8), rho),
                              HashFamily(FamilyKind::Toeplitz, 3, 2), 0.0);
    const PaInstance without(uniform_trivial(3), HashFamily(FamilyKind::Toeplitz, 3, 2), 0.0);
    REQUIRE_THAT(exact_key_distance(with_rho), WithinAbs(exact_key_distance(without), 1e-12));
  }
  SECTION("perfect copy: the adversary knows every key bit") {
    for (unsigned n : {1U, 2U, 3U}) {
      for (auto kind : {FamilyKind::Toeplitz, FamilyKind::Gf2nMult}) {
        const PaInstance inst(perfect_copy(n), HashFamily(kind, n, 1), 0.0);
        REQUIRE_THAT(exact_key_distance(inst), WithinAbs(0.5, 1e-12));
      }
    }
  }
}

TEST_CASE("exact_key_distance matches the classical oracle on diagonal adversaries", "[pa][oracle]") {
  Rng rng(54);
  for (int trial = 0; trial < 40; ++trial) {
    const auto family = random_small_family(rng);
    if (family.kind() == FamilyKind::AllFunctions && family.input_bits() > 2) continue;
    const auto joint = random_joint(rng, std::size_t{1} << family.input_bits(), 1 + rng.below(3));
    const PaInstance inst(joint.ensemble(), family, 0.0);
    const std::size_t key_values = std::size_t{1} << family.output_bits();
    double oracle = 0.0;
    for (std::uint64_t seed = 0; seed < family.seed_count(); ++seed)
      oracle += classical_key_distance(joint, output_table(family, seed), key_values);
    oracle /= static_cast<double>(family.seed_count());
    REQUIRE_THAT(exact_key_distance(inst), WithinAbs(oracle, 1e-12));
  }
}

TEST_CASE("Partition enumeration equals plain seed enumeration", "[pa]") {
  REQUIRE(detail::restricted_partition_count(4, 2, 1000) == 8);
  REQUIRE(detail::restricted_partition_count(4, 4, 1000) == 15);
  REQUIRE(detail::restricted_partition_count(16, 2, 1U << 24) == 32768);
  REQUIRE(*exact_averaging(HashFamily(FamilyKind::AllFunctions, 2, 1), kDefaultSeedCap) ==
          SeedAveraging::PartitionEnumeration);
  REQUIRE(*exact_averaging(HashFamily(FamilyKind::Toeplitz, 4, 2), kDefaultSeedCap) == SeedAveraging::SeedEnumeration);
  REQUIRE_FALSE(exact_averaging(HashFamily(FamilyKind::AllFunctions, 4, 2), kDefaultSeedCap).has_value());

  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    for (auto [n, s] : {std::pair{2U, 1U}, std::pair{2U, 2U}, std::pair{3U, 1U}, std::pair{3U, 2U}}) {
      const PaInstance inst(random_ensemble(rng, std::size_t{1} << n, 2), HashFamily(FamilyKind::AllFunctions, n, s),
                            0.0);
      REQUIRE_THAT(average_with_mode(inst, SeedAveraging::PartitionEnumeration),
                   WithinAbs(average_with_mode(inst, SeedAveraging::SeedEnumeration), 1e-12));
    }
  }
}

TEST_CASE("Seed-averaged distance equals the monolithic joint-state distance", "[pa][property]") {
  Rng rng(56);
  for (int trial = 0; trial < 20; ++trial) {
    const unsigned n = 2 + static_cast<unsigned>(rng.below(2));
    const unsigned s = 1 + static_cast<unsigned>(rng.below(n - 1));
    const auto kind = rng.below(2) == 0 ? FamilyKind::Toeplitz : FamilyKind::Gf2nMult;
    const PaInstance inst(random_ensemble(rng, std::size_t{1} << n, 1 + rng.below(2)), HashFamily(kind, n, s), 0.0);
    REQUIRE_THAT(exact_key_distance(inst), WithinAbs(exact_key_distance_monolithic(inst), 1e-8));
  }
  try {
    exact_key_distance_monolithic(PaInstance(random_ensemble(rng, 16, 4), HashFamily(FamilyKind::Toeplitz, 4, 3), 0.0));
    FAIL("expected DimensionOverflow");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::DimensionOverflow);
  }
}

TEST_CASE("Pushforward ensemble reproduces the block computation", "[pa]") {
  Rng rng(57);
  for (int trial = 0; trial < 30; ++trial) {
    const auto e = random_ensemble(rng, 8, 2);
    const HashFamily f(FamilyKind::Toeplitz, 3, 2);
    const auto table = output_table(f, rng.below(f.seed_count()));
    const auto scaled = average_density(e).matrix() * complex{0.25, 0.0};
    const auto stats = hashed_key_stats(e, scaled, table, 4);
    const auto pushed = pushforward_ensemble(e, table, 4);
    REQUIRE_THAT(nonuniformity(pushed), WithinAbs(stats.nonuniformity, 1e-12));
    REQUIRE_THAT(hs_nonuniformity(pushed), WithinAbs(stats.hs_nonuniformity, 1e-12));
    REQUIRE_THAT(hs_nonuniformity_closed_form(pushed), WithinAbs(stats.hs_nonuniformity, 1e-9));
  }
  // Zero seed: every value lands on key 0 and key 1 has an exactly empty preimage.
  const auto e = random_ensemble(rng, 4, 2);
  const auto pushed = pushforward_ensemble(e, output_table(HashFamily(FamilyKind::Toeplitz, 2, 1), 0), 2);
  REQUIRE(pushed.prob(1) == 0.0);
  REQUIRE(pushed.distribution().exact().has_value());
}

TEST_CASE("The collision and hashed collision bounds hold on random instances", "[pa][property]") {
  Rng rng(58);
  for (int trial = 0; trial < 100; ++trial) {
    const auto family = random_small_family(rng);
    const PaInstance inst(random_ensemble(rng, std::size_t{1} << family.input_bits(), 1 + rng.below(4)), family, 0.0);
    const auto avg = seed_average(inst);
    REQUIRE(avg.nonuniformity <= theorem1_bound(inst) + 1e-9);
    REQUIRE(avg.hs_nonuniformity <= std::exp2(-collision_entropies(inst.source()).collision_entropy) + 1e-9);
  }
}

TEST_CASE("extractable_key_length", "[pa]") {
  SECTION("uniform 8-bit source, trivial adversary") {
    const auto k = extractable_key_length(uniform_trivial(8), 8, 0.25);
    REQUIRE(k.length == 4);
    REQUIRE_THAT(k.real_value, WithinAbs(4.0, 1e-12));
    REQUIRE_THAT(k.smoothing_epsilon, WithinAbs(1.0 / 16.0, 1e-15));
    REQUIRE_THAT(k.bound_at_length, WithinAbs(0.25, 1e-12));
    REQUIRE(key_length_consistent(k, 0.25));
  }
  SECTION("small epsilon clamps to zero") {
    const auto k = extractable_key_length(uniform_trivial(4), 4, 1e-3);
    REQUIRE(k.length == 0);
    REQUIRE(k.real_value < 0.0);
    REQUIRE(key_length_consistent(k, 1e-3));
  }
  SECTION("clamped above at n") {
    // A pure adversary contributes S_0 = 0 and the 8-bit source has min-entropy 8;
    // a loose epsilon can only push the rule up to n.
    const auto k = extractable_key_length(uniform_trivial(8), 8, 0.99);
    REQUIRE(k.length <= 8);
  }
  SECTION("random instances satisfy the corollary at the returned length") {
    Rng rng(59);
    for (int trial = 0; trial < 100; ++trial) {
      const unsigned n = 6 + static_cast<unsigned>(rng.below(5));
      const auto e = random_ensemble(rng, std::size_t{1} << n, 1 + rng.below(2));
      const double eps = rng.uniform(0.05, 0.9);
      const auto k = extractable_key_length(e, n, eps);
      REQUIRE(key_length_consistent(k, eps));
      if (k.length > 0) REQUIRE(corollary1_bound(k.entropies, k.length) <= eps + 1e-12);
    }
  }
  REQUIRE_THROWS_AS(extractable_key_length(uniform_trivial(2), 2, 0.0), Error);
}

TEST_CASE("asymptotic_rate", "[pa]") {
  const auto p = ClassicalDistribution(std::vector<double>{0.5, 0.25, 0.125, 0.125});
  REQUIRE_THAT(asymptotic_rate(CqEnsemble::independent(p, DensityOperator::trivial())), WithinAbs(1.75, 1e-12));
  REQUIRE_THAT(asymptotic_rate(perfect_copy(3)), WithinAbs(0.0, 1e-12));

  Rng rng(60);
  for (int trial = 0; trial < 50; ++trial) {
    const auto joint = random_joint(rng, 2 + rng.below(7), 1 + rng.below(4));
    REQUIRE_THAT(asymptotic_rate(joint.ensemble()), WithinAbs(classical_conditional_entropy(joint), 1e-9));
  }
  for (int trial = 0; trial < 50; ++trial) {
    const auto e = random_ensemble(rng, 2 + rng.below(7), 1 + rng.below(3));
    const double r = asymptotic_rate(e);
    REQUIRE(r >= -1e-9);
    REQUIRE(r <= std::log2(static_cast<double>(e.size())) + 1e-9);
  }
}

TEST_CASE("Hashing cannot increase the conditional entropy", "[pa][property]") {
  Rng rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const unsigned n = 1 + static_cast<unsigned>(rng.below(4));
    const unsigned s = 1 + static_cast<unsigned>(rng.below(n));
    const HashFamily f(rng.below(2) == 0 ? FamilyKind::Toeplitz : FamilyKind::Gf2nMult, n, s);
    const auto e = random_ensemble(rng, std::size_t{1} << n, 1 + rng.below(3));
    const auto table = output_table(f, rng.below(f.seed_count()));
    REQUIRE(hashed_conditional_entropy(e, table, std::size_t{1} << s) <= asymptotic_rate(e) + 1e-9);
  }
}

TEST_CASE("build_report", "[pa]") {
  SECTION("trivial adversary") {
    const auto r = build_report(PaInstance(uniform_trivial(4), HashFamily(FamilyKind::Toeplitz, 4, 2), 0.1));
    REQUIRE(r.pass());
    REQUIRE(r.exact_d.has_value());
    REQUIRE(r.cor1_bound.has_value());
    REQUIRE_THAT(r.thm1_bound, WithinAbs(0.25, 1e-15));
    REQUIRE_THAT(r.rate, WithinAbs(4.0, 1e-12));
  }
  SECTION("random instances pass") {
    Rng rng(62);
    for (int trial = 0; trial < 50; ++trial) {
      const auto family = random_small_family(rng);
      const PaInstance inst(random_ensemble(rng, std::size_t{1} << family.input_bits(), 1 + rng.below(4)), family,
                            rng.uniform(0.01, 0.5));
      REQUIRE(build_report(inst).pass());
    }
  }
  SECTION("seed space over the cap falls back to sampling") {
    Rng rng(63);
    const PaInstance inst(random_ensemble(rng, 16, 2), HashFamily(FamilyKind::Toeplitz, 4, 2), 0.1);
    const auto r = build_report(inst, ReportOptions{.seed_cap = 8, .monte_carlo_samples = 4000, .rng_seed = 5});
    REQUIRE_FALSE(r.exact_d.has_value());
    REQUIRE(r.sampled_d.has_value());
    REQUIRE(r.thm1_bound > 0.0);
    const double exact = exact_key_distance(inst);
    REQUIRE(std::abs(r.sampled_d->mean - exact) <= 5.0 * r.sampled_d->standard_error + 1e-12);
    try {
      seed_average(inst, 8);
      FAIL("expected SeedSpaceTooLarge");
    } catch (const Error& e) {
      REQUIRE(e.kind() == ErrorKind::SeedSpaceTooLarge);
    }
  }
  SECTION("deterministic") {
    Rng rng(64);
    const PaInstance inst(random_ensemble(rng, 8, 2), HashFamily(FamilyKind::AllFunctions, 3, 2), 0.2);
    const auto a = build_report(inst);
    const auto b = build_report(inst);
    REQUIRE(*a.exact_d == *b.exact_d);
    REQUIRE(a.thm1_bound == b.thm1_bound);
  }
}
