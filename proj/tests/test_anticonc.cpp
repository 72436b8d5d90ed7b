#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <obal/anticonc.hpp>

using namespace obal;
using namespace obal::anticonc;

namespace {

// E|sum a_i X_i| and the two right-hand sides, recomputed from scratch
struct Sums {
  double lhs = 0, sq = 0, abs = 0;
};

Sums enumerate(const AnticoncInstance& inst) {
  Sums s;
  for (const auto& o : inst.outcomes) {
    double lin = 0;
    for (std::size_t i = 0; i < inst.a.size(); ++i) {
      lin += inst.a[i] * o.x[i];
      s.sq += o.probability * std::abs(inst.a[i]) * o.x[i] * o.x[i];
      s.abs += o.probability * std::abs(inst.a[i] * o.x[i]);
    }
    s.lhs += o.probability * std::abs(lin);
  }
  return s;
}

}  // namespace

TEST(Anticonc, HadamardIsTightForBothClasses) {
  auto inst = hadamard_instance(4);
  auto cert = certify(inst);
  EXPECT_TRUE(cert.uncorrelated);
  EXPECT_TRUE(cert.pairwise_independent);
  EXPECT_TRUE(cert.violations.empty());
  auto u = verify_uncorrelated(inst);
  EXPECT_NEAR(u.lhs, 1.0, 1e-15);
  EXPECT_NEAR(u.rhs, 1.0, 1e-15);
  EXPECT_TRUE(u.holds);
  auto p = verify_pairwise(inst);
  EXPECT_NEAR(p.lhs, 1.0, 1e-15);
  EXPECT_NEAR(p.rhs, 1.0, 1e-15);
  for (std::size_t n : {1, 2, 8, 16}) EXPECT_NEAR(verify_pairwise(hadamard_instance(n)).lhs, 1.0, 1e-12);
  EXPECT_THROW(hadamard_instance(6), DomainError);
}

TEST(Anticonc, SingleVariable) {
  AnticoncInstance inst{{5.0}, {{{1.0}, 0.5}, {{-1.0}, 0.5}}, 1.0, 1, VariableClass::Uncorrelated};
  auto v = verify_uncorrelated(inst);
  EXPECT_DOUBLE_EQ(v.lhs, 5.0);
  EXPECT_DOUBLE_EQ(v.rhs, 5.0);
  EXPECT_TRUE(v.holds);
}

TEST(Anticonc, RademacherPair) {
  AnticoncInstance inst{{1.0, 1.0}, {}, 1.0, 2, VariableClass::PairwiseIndependent};
  for (double a : {1.0, -1.0})
    for (double b : {1.0, -1.0}) inst.outcomes.push_back({{a, b}, 0.25});
  auto v = verify_pairwise(inst);
  EXPECT_DOUBLE_EQ(v.lhs, 1.0);
  EXPECT_DOUBLE_EQ(v.rhs, 1.0);
}

TEST(Anticonc, RandomUncorrelatedInstancesSatisfyBound) {
  SeededRng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    auto inst = random_uncorrelated(1 + rng.below(6), rng);
    ASSERT_TRUE(certify(inst).uncorrelated);
    auto v = verify_uncorrelated(inst);
    auto s = enumerate(inst);
    ASSERT_NEAR(v.lhs, s.lhs, 1e-12);
    ASSERT_NEAR(v.rhs, s.sq / (inst.c * double(inst.s)), 1e-12);
    ASSERT_TRUE(v.holds) << v.lhs << " < " << v.rhs;
    for (const auto& r : per_coordinate_uncorrelated(inst)) ASSERT_TRUE(r.holds) << "k=" << r.k;
    auto g = aggregate(inst, per_coordinate_uncorrelated(inst));
    ASSERT_TRUE(g.holds);
    ASSERT_NEAR(g.bound, v.rhs, 1e-12);
  }
}

TEST(Anticonc, RandomPairwiseInstancesSatisfyBound) {
  SeededRng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    auto inst = random_pairwise(1 + rng.below(6), rng);
    ASSERT_TRUE(certify(inst).pairwise_independent);
    auto v = verify_pairwise(inst);
    auto s = enumerate(inst);
    ASSERT_NEAR(v.lhs, s.lhs, 1e-12);
    ASSERT_NEAR(v.rhs, s.abs / double(inst.s), 1e-12);
    ASSERT_TRUE(v.holds) << v.lhs << " < " << v.rhs;
    for (const auto& r : per_coordinate_pairwise(inst)) ASSERT_TRUE(r.holds) << "k=" << r.k;
    auto g = aggregate(inst, per_coordinate_pairwise(inst));
    ASSERT_TRUE(g.holds);
    ASSERT_NEAR(g.bound, v.rhs, 1e-12);
  }
}

TEST(Anticonc, RestrictedSumCountsOnlySupport) {
  AnticoncInstance inst{{1.0, 2.0}, {{{1.0, 0.0}, 0.25}, {{-1.0, 0.0}, 0.25}, {{0.0, 1.0}, 0.25}, {{0.0, -1.0}, 0.25}},
                        1.0, 1, VariableClass::Uncorrelated};
  EXPECT_DOUBLE_EQ(restricted_abs_sum(inst, 0), 0.5);
  EXPECT_DOUBLE_EQ(restricted_abs_sum(inst, 1), 1.0);
}

TEST(Anticonc, CounterexampleClosedForms) {
  auto r = pairwise_counterexample(0.1);
  EXPECT_NEAR(r.lhs, 0.2 / 1.01, 1e-12);
  EXPECT_NEAR(r.rhs, 2.2 / 1.01, 1e-12);
  EXPECT_NEAR(r.lhs, 0.19802, 1e-5);
  EXPECT_NEAR(r.rhs, 2.17822, 1e-5);
  double prev = 1.0;
  for (double delta : {0.5, 0.1, 0.01}) {
    auto c = pairwise_counterexample(delta);
    EXPECT_NEAR(c.cross_moment, 0.0, 1e-12);
    EXPECT_NEAR(c.lhs, 2 * delta / (1 + delta * delta), 1e-12);
    EXPECT_NEAR(c.rhs, (2 + 2 * delta) / (1 + delta * delta), 1e-12);
    EXPECT_LT(c.ratio, prev);
    prev = c.ratio;
    auto cert = certify(c.instance);
    EXPECT_TRUE(cert.uncorrelated);
    EXPECT_FALSE(cert.pairwise_independent);
    // the uncorrelated bound still holds, the pairwise one would not
    EXPECT_TRUE(verify_uncorrelated(c.instance).holds);
    EXPECT_LT(c.lhs, c.rhs / 2);
    EXPECT_THROW(verify_pairwise(c.instance), InvalidInstance);
  }
  EXPECT_THROW(pairwise_counterexample(1.0), DomainError);
}

TEST(Anticonc, PlantedCorrelationIsReported) {
  // E[X1 X2] = 0.3
  AnticoncInstance inst{{1.0, 1.0}, {{{1, 1}, 0.325}, {{-1, -1}, 0.325}, {{1, -1}, 0.175}, {{-1, 1}, 0.175}},
                        1.0, 2, VariableClass::Uncorrelated};
  auto cert = certify(inst);
  EXPECT_FALSE(cert.uncorrelated);
  bool found = false;
  for (const auto& v : cert.violations)
    if (v.what == "correlation" && v.i == 0 && v.j == 1) {
      found = true;
      EXPECT_NEAR(v.value, 0.3, 1e-12);
    }
  EXPECT_TRUE(found);
  EXPECT_THROW(verify_uncorrelated(inst), InvalidInstance);
}

TEST(Anticonc, OtherViolations) {
  AnticoncInstance inst{{1.0, 1.0}, {{{2, 0}, 0.5}, {{-2, 1}, 0.4}}, 1.0, 1, VariableClass::Uncorrelated};
  auto cert = certify(inst);
  std::set<std::string> kinds;
  for (const auto& v : cert.violations) kinds.insert(v.what);
  for (const char* k : {"probabilities", "sparsity", "bound"}) EXPECT_TRUE(kinds.count(k)) << k;
  AnticoncInstance ragged{{1.0}, {{{1, 1}, 1.0}}, 1.0, 2, VariableClass::Uncorrelated};
  EXPECT_THROW(certify(ragged), InvalidInstance);
}
