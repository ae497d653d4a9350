#include <catch_amalgamated.hpp>

#include "qpa/metrics.hpp"
#include "qpa/random.hpp"
#include "qpa/states.hpp"

using namespace qpa;
using Catch::Matchers::WithinAbs;

namespace {

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double m = 0.0;
  for (std::size_t k = 0; k < a.entries().size(); ++k) m = std::max(m, std::abs(a.entries()[k] - b.entries()[k]));
  return m;
}

CqEnsemble two_point(double p0, const DensityOperator& a, const DensityOperator& b) {
  return CqEnsemble(ClassicalDistribution(std::vector<double>{p0, 1.0 - p0}), {a, b});
}

}  // namespace

TEST_CASE("ClassicalDistribution validation", "[states]") {
  REQUIRE_NOTHROW(ClassicalDistribution(std::vector<double>{0.5, 0.5}));
  try {
    ClassicalDistribution(std::vector<double>{0.5, 0.4});
    FAIL("expected a validation error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::InvalidDistribution);
    REQUIRE(std::string(e.what()).find("probs") != std::string::npos);
  }
  REQUIRE_THROWS_AS(ClassicalDistribution(std::vector<double>{1.5, -0.5}), Error);
  REQUIRE_THROWS_AS(ClassicalDistribution(std::vector<Rational>{Rational(1, 3), Rational(1, 3)}), Error);

  const ClassicalDistribution exact(std::vector<Rational>{Rational(1, 3), Rational(2, 3)});
  REQUIRE(exact.exact().has_value());
  REQUIRE_THAT(exact[0], WithinAbs(1.0 / 3.0, 1e-16));
}

TEST_CASE("DensityOperator validation", "[states]") {
  REQUIRE_NOTHROW(DensityOperator::diagonal({0.75, 0.25}));
  REQUIRE_THROWS_AS(DensityOperator::diagonal({0.75, 0.75}), Error);
  REQUIRE_THROWS_AS(DensityOperator::diagonal({1.5, -0.5}), Error);
  // Within tolerance of positivity.
  REQUIRE_NOTHROW(DensityOperator::diagonal({1.0 + 5e-10, -5e-10}));
}

TEST_CASE("average_density", "[states]") {
  const auto d0 = DensityOperator::basis_state(2, 0);
  const auto d1 = DensityOperator::basis_state(2, 1);

  REQUIRE(max_abs_diff(average_density(two_point(0.5, d0, d1)).matrix(),
                       DensityOperator::diagonal({0.5, 0.5}).matrix()) < 1e-15);
  REQUIRE(max_abs_diff(average_density(two_point(0.75, d0, d1)).matrix(),
                       DensityOperator::diagonal({0.75, 0.25}).matrix()) < 1e-15);

  Rng rng(1);
  const auto rho = random_density(rng, 3);
  const CqEnsemble single(ClassicalDistribution(std::vector<double>{1.0}), {rho});
  REQUIRE(max_abs_diff(average_density(single).matrix(), rho.matrix()) < 1e-15);
}

TEST_CASE("conditioned_density", "[states]") {
  Rng rng(2);
  const auto a = random_density(rng, 2);
  const auto b = random_density(rng, 2);
  const auto c = random_density(rng, 2);
  const CqEnsemble e(ClassicalDistribution(std::vector<Rational>{Rational(1, 4), Rational(1, 4), Rational(1, 2)}),
                     {a, b, c});

  const std::vector<std::size_t> all{0, 1, 2};
  REQUIRE(max_abs_diff(conditioned_density(e, all).matrix(), average_density(e).matrix()) < 1e-15);

  const std::vector<std::size_t> only_first{0};
  REQUIRE(max_abs_diff(conditioned_density(e, only_first).matrix(), a.matrix()) < 1e-15);

  const std::vector<std::size_t> ab{0, 1};
  const ComplexMatrix expected = (a.matrix() + b.matrix()) * complex{0.5, 0.0};
  REQUIRE(max_abs_diff(conditioned_density(e, ab).matrix(), expected) < 1e-15);

  const CqEnsemble with_zero(ClassicalDistribution(std::vector<double>{1.0, 0.0}), {a, b});
  const std::vector<std::size_t> second{1};
  try {
    conditioned_density(with_zero, second);
    FAIL("expected ZeroProbabilityEvent");
  } catch (const Error& err) {
    REQUIRE(err.kind() == ErrorKind::ZeroProbabilityEvent);
  }
}

TEST_CASE("Partition decomposition of the average state", "[states][property]") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const auto e = random_ensemble(rng, n, 1 + rng.below(3));
    // Random partition into up to three events.
    std::vector<std::vector<std::size_t>> parts(3);
    for (std::size_t x = 0; x < n; ++x) parts[rng.below(3)].push_back(x);
    ComplexMatrix acc(e.adversary_dim(), e.adversary_dim());
    for (const auto& part : parts) {
      const double p = event_probability(e, part);
      if (p <= kProbabilityFloor) continue;
      acc += conditioned_density(e, part).matrix() * complex{p, 0.0};
    }
    REQUIRE(max_abs_diff(acc, average_density(e).matrix()) < 1e-12);
  }
}

TEST_CASE("cq_state", "[states]") {
  SECTION("uniform bit, trivial adversary") {
    const auto e = CqEnsemble::independent(ClassicalDistribution::uniform(2), DensityOperator::trivial());
    REQUIRE(max_abs_diff(cq_state(e).matrix(), DensityOperator::diagonal({0.5, 0.5}).matrix()) < 1e-15);
  }
  SECTION("constant classical value") {
    const auto e = CqEnsemble::independent(ClassicalDistribution::point_mass(2, 0), DensityOperator::maximally_mixed(2));
    REQUIRE(max_abs_diff(cq_state(e).matrix(), DensityOperator::diagonal({0.5, 0.5, 0.0, 0.0}).matrix()) < 1e-15);
  }
  SECTION("independent classical part factorizes") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      const auto p = random_rational_distribution(rng, 3);
      const auto rho = random_density(rng, 2);
      const auto e = CqEnsemble::independent(p, rho);
      const auto product = kron(embed_classical(p).matrix(), average_density(e).matrix());
      REQUIRE(max_abs_diff(cq_state(e).matrix(), product) < 1e-15);
    }
  }
  SECTION("block structure and trace") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto e = random_ensemble(rng, 2 + rng.below(4), 1 + rng.below(3));
      const auto cq = cq_state(e);
      const std::size_t d = e.adversary_dim();
      for (std::size_t i = 0; i < cq.dim(); ++i)
        for (std::size_t j = 0; j < cq.dim(); ++j)
          if (i / d != j / d) REQUIRE(cq.matrix()(i, j) == complex{0.0, 0.0});
      REQUIRE_THAT(cq.op().trace(), WithinAbs(1.0, 1e-9));

      // Block spectrum equals the spectrum of the assembled operator.
      const auto blockwise = cq_eigenvalues(e);
      const auto full = cq.eigenvalues();
      for (std::size_t k = 0; k < full.size(); ++k) REQUIRE_THAT(blockwise[k], WithinAbs(full[k], 1e-12));
    }
  }
  SECTION("dimension cap") {
    const auto e = CqEnsemble::independent(ClassicalDistribution::uniform(8), DensityOperator::maximally_mixed(4));
    try {
      cq_state(e, 16);
      FAIL("expected DimensionOverflow");
    } catch (const Error& err) {
      REQUIRE(err.kind() == ErrorKind::DimensionOverflow);
    }
  }
}

TEST_CASE("embed_classical", "[states]") {
  REQUIRE(max_abs_diff(embed_classical(ClassicalDistribution::uniform(4)).matrix(),
                       DensityOperator::diagonal({0.25, 0.25, 0.25, 0.25}).matrix()) < 1e-15);
  const auto point = embed_classical(ClassicalDistribution::point_mass(3, 1));
  REQUIRE(numeric_rank(point.op()) == 1);
  REQUIRE_THAT(point.eigenvalues()[0], WithinAbs(1.0, 1e-15));

  // Variational distance equals the trace distance of the embeddings; the
  // classical half-L1 sum is the oracle.
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    const auto p = random_rational_distribution(rng, n);
    const auto q = random_rational_distribution(rng, n);
    double l1 = 0.0;
    for (std::size_t x = 0; x < n; ++x) l1 += std::abs(p[x] - q[x]);
    REQUIRE_THAT(trace_distance(embed_classical(p), embed_classical(q)), WithinAbs(0.5 * l1, 1e-12));
  }
}

TEST_CASE("CqEnsemble validation", "[states]") {
  const auto d0 = DensityOperator::basis_state(2, 0);
  REQUIRE_THROWS_AS(CqEnsemble(ClassicalDistribution::uniform(2), {d0}), Error);
  REQUIRE_THROWS_AS(CqEnsemble(ClassicalDistribution::uniform(2), {d0, DensityOperator::trivial()}), Error);
}
