#include <gtest/gtest.h>

#include <cmath>

#include <obal/adversary.hpp>

using namespace obal;
using namespace obal::adversary;

namespace {

SparseUpdate dense(std::vector<double> v) { return SparseUpdate::from_dense(v, true); }

double inner(const std::vector<double>& d, const SparseUpdate& v) {
  double s = 0;
  for (const auto& e : v.entries) s += d[e.coord] * e.value;
  return s;
}

double sq_norm(const SparseUpdate& v) {
  double s = 0;
  for (const auto& e : v.entries) s += e.value * e.value;
  return s;
}

}  // namespace

TEST(OrthogonalAdversary, ZeroStateGivesOnes) {
  AdversaryState st(5);
  auto v = orthogonal_adversary_next(st);
  EXPECT_EQ(v.to_dense(), std::vector<double>(5, 1.0));
}

TEST(OrthogonalAdversary, SingleSpike) {
  AdversaryState st(3);
  st.d = {1.0, 0.0, 0.0};
  auto v = orthogonal_adversary_next(st);
  EXPECT_EQ(v.to_dense(), (std::vector<double>{0.0, 1.0, 1.0}));
  EXPECT_EQ(sq_norm(v), 2.0);
}

TEST(OrthogonalAdversary, RandomStatesStayOrthogonal) {
  SeededRng rng(0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(10);
    AdversaryState st(n);
    for (auto& x : st.d) x = (rng.uniform() * 2 - 1) * 50;
    auto v = orthogonal_adversary_next(st);
    double dn = 0;
    for (double x : st.d) dn += x * x;
    ASSERT_LE(std::abs(inner(st.d, v)), 1e-9 * std::sqrt(dn));
    ASSERT_GE(sq_norm(v), double(n - 1));
    int units = 0;
    for (const auto& e : v.entries) {
      ASSERT_LE(std::abs(e.value), 1.0);
      units += std::abs(e.value) == 1.0;
    }
    ASSERT_GE(units, int(n - 1));
  }
  EXPECT_THROW(orthogonal_adversary_next(AdversaryState(1)), DomainError);
}

TEST(OrthogonalAdversary, SquaredNormGrowsLinearlyForEverySigner) {
  for (auto alg : {Algorithm::Cosh, Algorithm::Random}) {
    for (std::size_t n : {2, 3, 8}) {
      auto run = run_orthogonal_adversary(n, 2000, alg, SeededRng(n));
      EXPECT_EQ(run.violations, 0u);
      EXPECT_GE(run.min_v_sq, double(n - 1));
      EXPECT_LE(run.max_inner, 1e-9);
      for (std::size_t t = 1; t <= run.sq_norms.size(); ++t)
        ASSERT_GE(run.sq_norms[t - 1], double(n - 1) * t - orthogonality_slack(t));
    }
  }
}

TEST(LowerBound, HadamardCertificate) {
  auto cert = certify_lower_bound_spec(DistributionSpec::hadamard_rows(16));
  EXPECT_DOUBLE_EQ(cert.k, 4.0);
  EXPECT_EQ(cert.max_off_diagonal, 0.0);
}

TEST(LowerBound, CertificationFailures) {
  // correlated: (1,1) and (-1,-1)
  auto corr = DistributionSpec::finite_support(2, {{dense({1, 1}), 0.5}, {dense({-1, -1}), 0.5}});
  EXPECT_THROW(certify_lower_bound_spec(corr), InvalidInstance);
  // unequal norms
  auto uneven = DistributionSpec::finite_support(2, {{dense({1, 0}), 0.5}, {dense({1, 1}), 0.25}, {dense({1, -1}), 0.25}});
  EXPECT_THROW(certify_lower_bound_spec(uneven), InvalidInstance);
  EXPECT_THROW(certify_lower_bound_spec(DistributionSpec::unit_sphere(3)), InvalidInstance);
}

TEST(LowerBound, OneDimensionAlwaysCrosses) {
  auto spec = DistributionSpec::finite_support(1, {{dense({1}), 0.5}, {dense({-1}), 0.5}});
  auto rep = lower_bound_experiment(spec, Algorithm::Cosh, 50);
  EXPECT_EQ(rep.k, 1.0);
  EXPECT_EQ(rep.threshold, 0.25);
  EXPECT_EQ(rep.steps, 1u);
  EXPECT_EQ(rep.frequency, 1.0);
}

TEST(LowerBound, HadamardFrequencyAndDrift) {
  auto spec = DistributionSpec::hadamard_rows(16);
  for (auto alg : {Algorithm::Cosh, Algorithm::Random}) {
    auto rep = lower_bound_experiment(spec, alg, 200);
    EXPECT_GE(rep.frequency, 0.7) << algorithm_name(alg);
    EXPECT_GT(rep.drift_states, 0u);
    // exact expectation over the atoms, so no sampling slack is needed
    EXPECT_GE(rep.min_quadratic_drift, rep.k * rep.k / 2 - 1e-9);
    auto j = rep.to_json();
    EXPECT_EQ(j["trials"], 200);
  }
}

TEST(Sphere, SingleStepHasUnitNorm) {
  auto rep = sphere_stress(4, {1}, 5, Algorithm::Cosh);
  ASSERT_EQ(rep.grid.size(), 1u);
  for (double x : rep.grid[0].max_l2) EXPECT_NEAR(x, 1.0, 1e-12);
  EXPECT_EQ(rep.grid[0].reference, 0.0);
}

TEST(Sphere, IdentityAndMonotoneMedians) {
  auto rep = sphere_stress(3, {16, 64, 256, 1024, 4096}, 9, Algorithm::Cosh);
  EXPECT_LE(rep.max_identity_error, 1e-9);
  for (std::size_t g = 1; g < rep.grid.size(); ++g) {
    EXPECT_GE(rep.grid[g].median, rep.grid[g - 1].median);
    for (std::size_t s = 0; s < rep.grid[g].max_l2.size(); ++s)
      EXPECT_GE(rep.grid[g].max_l2[s], rep.grid[g - 1].max_l2[s]);
  }
  EXPECT_NEAR(rep.grid.back().reference, std::sqrt(std::log(4096.0) / std::log(std::log(4096.0))), 1e-12);
  EXPECT_THROW(sphere_stress(1, {4}, 1, Algorithm::Cosh), DomainError);
  EXPECT_THROW(sphere_stress(3, {8, 4}, 1, Algorithm::Cosh), DomainError);
}

TEST(Sphere, MedianOf) {
  EXPECT_EQ(median_of({}), 0.0);
  EXPECT_EQ(median_of({3, 1, 2}), 2.0);
  EXPECT_EQ(median_of({4, 1, 2, 3}), 2.5);
}

TEST(Fractal, SingleLevel) {
  auto r = fractal_ratio(1, 3.0);
  EXPECT_NEAR(r.lhs, std::sinh(3.0), 1e-12);
  EXPECT_NEAR(r.rhs, std::sinh(3.0), 1e-12);
  EXPECT_NEAR(r.beta, 1.0, 1e-12);
  EXPECT_EQ(r.escape_probability, 1.0);
}

TEST(Fractal, LabelTableShape) {
  auto labels = fractal_labels(4);
  // level 0: d; level 1: 2d/3 on the right; level 3: -d under every inner block node
  ASSERT_GE(labels.size(), 2u);
  EXPECT_EQ(labels[0].label, FractalLabel::D);
  EXPECT_EQ(labels[1].level, 1);
  EXPECT_EQ(labels[1].index, 1u);
  EXPECT_EQ(labels[1].label, FractalLabel::TwoThirds);
  for (const auto& e : fractal_labels(10)) {
    if (e.level >= 2) EXPECT_EQ(e.label, FractalLabel::MinusD);
  }
  EXPECT_THROW(fractal_labels(0), DomainError);
  EXPECT_THROW(fractal_labels(25), CapacityExceeded);
}

TEST(Fractal, RecursionMatchesLeafEnumeration) {
  const double d = 2.0;
  for (int h = 1; h <= 12; ++h) {
    std::map<std::pair<int, std::uint64_t>, double> a;
    for (const auto& e : fractal_labels(h)) a[{e.level, e.index}] = std::sinh(label_value(e.label, d));
    const std::uint64_t leaves = std::uint64_t{1} << (h - 1);
    double lhs = 0, rhs = 0;
    for (std::uint64_t leaf = 0; leaf < leaves; ++leaf) {
      double sum = 0, abs_sum = 0;
      for (int j = 0; j < h; ++j) {
        auto it = a.find({j, leaf >> (h - 1 - j)});
        if (it == a.end()) continue;
        sum += it->second;
        abs_sum += std::abs(it->second);
      }
      lhs += std::abs(sum) / double(leaves);
      rhs += abs_sum / double(leaves);
    }
    auto r = fractal_ratio(h, d);
    EXPECT_NEAR(r.lhs, lhs, 1e-12 * rhs) << "h=" << h;
    EXPECT_NEAR(r.rhs, rhs, 1e-12 * rhs) << "h=" << h;
  }
}

TEST(Fractal, RhsAtLeastRootTermAndLhsBound) {
  double prev_escape = 1.0;
  for (int h = 1; h <= 40; ++h) {
    for (double d : {1.0, 8.0, 40.0}) {
      auto r = fractal_ratio(h, d);
      EXPECT_GE(r.log_rhs, log_sinh(d) - 1e-12);
      // lhs <= h sinh(2d/3) + P(escape) h sinh(d), in log form
      const double bound = std::log(h * std::exp(log_sinh(2 * d / 3) - log_sinh(d)) + r.escape_probability * h) + log_sinh(d);
      EXPECT_LE(r.log_lhs, bound + 1e-12);
      EXPECT_NEAR(r.log_beta, r.log_rhs - r.log_lhs, 1e-12);
    }
    auto r = fractal_ratio(h, 8.0);
    EXPECT_LE(r.escape_probability, prev_escape);
    prev_escape = r.escape_probability;
  }
  EXPECT_NEAR(log_sinh(1.0), std::log(std::sinh(1.0)), 1e-14);
  EXPECT_TRUE(std::isinf(fractal_ratio(5, 800.0).lhs));
  EXPECT_THROW(fractal_ratio(0, 1.0), DomainError);
  EXPECT_THROW(fractal_ratio(3, 0.0), DomainError);
}
