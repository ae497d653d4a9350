#include <catch_amalgamated.hpp>

#include "qpa/metrics.hpp"
#include "qpa/random.hpp"

using namespace qpa;
using Catch::Matchers::WithinAbs;

namespace {

ClassicalDistribution dist(std::initializer_list<double> p) { return ClassicalDistribution(std::vector<double>(p)); }

}  // namespace

TEST_CASE("variational_distance", "[metrics]") {
  REQUIRE_THAT(variational_distance(dist({0.3, 0.7}), dist({0.3, 0.7})), WithinAbs(0.0, 1e-15));
  REQUIRE_THAT(variational_distance(dist({1.0, 0.0}), dist({0.0, 1.0})), WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(variational_distance(dist({0.5, 0.5}), dist({1.0, 0.0})), WithinAbs(0.5, 1e-15));
  try {
    variational_distance(dist({1.0}), dist({0.5, 0.5}));
    FAIL("expected RangeMismatch");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::RangeMismatch);
  }
}

TEST_CASE("maximal_coupling", "[metrics]") {
  SECTION("equal distributions couple on the diagonal") {
    const auto c = maximal_coupling(dist({0.2, 0.3, 0.5}), dist({0.2, 0.3, 0.5}));
    REQUIRE_THAT(c.prob_differ(), WithinAbs(0.0, 1e-15));
  }
  SECTION("half apart") {
    const auto c = maximal_coupling(dist({0.5, 0.5}), dist({1.0, 0.0}));
    REQUIRE_THAT(c.prob_differ(), WithinAbs(0.5, 1e-15));
  }
  SECTION("random distributions on five symbols") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = random_rational_distribution(rng, 5);
      const auto q = random_rational_distribution(rng, 5);
      const auto c = maximal_coupling(p, q);
      for (double x : c.joint) REQUIRE(x >= 0.0);
      const auto m1 = c.first_marginal();
      const auto m2 = c.second_marginal();
      for (std::size_t x = 0; x < 5; ++x) {
        REQUIRE_THAT(m1[x], WithinAbs(p[x], 1e-12));
        REQUIRE_THAT(m2[x], WithinAbs(q[x], 1e-12));
      }
      REQUIRE_THAT(c.prob_differ(), WithinAbs(variational_distance(p, q), 1e-12));
    }
  }
}

TEST_CASE("trace_distance", "[metrics]") {
  const auto a = DensityOperator::diagonal({0.75, 0.25});
  REQUIRE_THAT(trace_distance(a, a), WithinAbs(0.0, 1e-15));
  REQUIRE_THAT(trace_distance(DensityOperator::basis_state(2, 0), DensityOperator::basis_state(2, 1)),
               WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(trace_distance(a, DensityOperator::maximally_mixed(2)), WithinAbs(0.25, 1e-15));
  try {
    trace_distance(a, DensityOperator::maximally_mixed(3));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("trace distance is a metric", "[metrics][property]") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.below(4);
    const auto r = random_density(rng, d, 1 + rng.below(d));
    const auto s = random_density(rng, d, 1 + rng.below(d));
    const auto t = random_density(rng, d, 1 + rng.below(d));
    const double rs = trace_distance(r, s);
    REQUIRE_THAT(rs, WithinAbs(trace_distance(s, r), 1e-9));
    REQUIRE(rs <= trace_distance(r, t) + trace_distance(t, s) + 1e-9);
    REQUIRE(trace_distance(r, r) <= 1e-9);
    REQUIRE(rs >= 0.0);
    REQUIRE(rs <= 1.0 + 1e-9);
  }
}

TEST_CASE("hs_square_distance", "[metrics]") {
  const auto a = DensityOperator::diagonal({0.75, 0.25});
  REQUIRE_THAT(hs_square_distance(a, a), WithinAbs(0.0, 1e-15));
  REQUIRE_THAT(hs_square_distance(DensityOperator::basis_state(2, 0), DensityOperator::maximally_mixed(2)),
               WithinAbs(0.5, 1e-15));

  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto r = random_density(rng, 3);
    const auto s = random_density(rng, 3);
    double oracle = 0.0;
    for (double v : eigenvalues(r.op() - s.op())) oracle += v * v;
    REQUIRE_THAT(hs_square_distance(r, s), WithinAbs(oracle, 1e-12));
  }
}

TEST_CASE("nonuniformity", "[metrics]") {
  SECTION("uniform and independent") {
    Rng rng(10);
    const auto e = CqEnsemble::independent(ClassicalDistribution::uniform(4), random_density(rng, 2));
    REQUIRE_THAT(nonuniformity(e), WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(hs_nonuniformity(e), WithinAbs(0.0, 1e-12));
  }
  SECTION("constant bit, trivial adversary") {
    const auto e = CqEnsemble::independent(ClassicalDistribution::point_mass(2, 0), DensityOperator::trivial());
    REQUIRE_THAT(nonuniformity(e), WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(hs_nonuniformity(e), WithinAbs(0.5, 1e-15));
  }
  SECTION("adversary holds a perfect copy") {
    // Blocks: diag(1/2, 0) - diag(1/4, 1/4) and diag(0, 1/2) - diag(1/4, 1/4);
    // each has trace norm 1/2, so d = (1/2)(1/2 + 1/2).
    const CqEnsemble e(ClassicalDistribution::uniform(2),
                       {DensityOperator::basis_state(2, 0), DensityOperator::basis_state(2, 1)});
    REQUIRE_THAT(nonuniformity(e), WithinAbs(0.5, 1e-15));
  }
  SECTION("blockwise evaluation equals the full operator distance") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
      const auto e = random_ensemble(rng, 2 + rng.below(5), 1 + rng.below(3));
      const auto ops = nonuniformity_operators(e);
      REQUIRE_THAT(nonuniformity(e), WithinAbs(trace_distance(ops.real, ops.ideal), 1e-12));
      REQUIRE_THAT(hs_nonuniformity(e), WithinAbs(hs_square_distance(ops.real, ops.ideal), 1e-12));
    }
  }
  SECTION("closed form of the Hilbert-Schmidt non-uniformity") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
      const auto e = random_ensemble(rng, 2 + rng.below(7), 1 + rng.below(4));
      const auto ops = nonuniformity_operators(e);
      REQUIRE_THAT(hs_nonuniformity_closed_form(e), WithinAbs(hs_square_distance(ops.real, ops.ideal), 1e-9));
    }
  }
}
