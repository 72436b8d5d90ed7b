#pragma once

// Exact checks of the two anti-concentration inequalities over finite
// supports:
//   uncorrelated, |X_i| <= c, <= s nonzeros:  E|sum a_i X_i| >= E[sum |a_i| X_i^2] / (c s)
//   pairwise independent, mean zero:          E|sum a_i X_i| >= E[sum |a_i X_i|] / s
// plus the per-coordinate claims behind them and the tightness examples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace obal::anticonc {

inline constexpr double kExactTol = 1e-12;

enum class VariableClass { Uncorrelated, PairwiseIndependent };

inline const char* class_name(VariableClass c) {
  return c == VariableClass::Uncorrelated ? "uncorrelated" : "pairwise-independent";
}

struct Outcome {
  std::vector<double> x;
  double probability = 0.0;
};

struct AnticoncInstance {
  std::vector<double> a;
  std::vector<Outcome> outcomes;
  double c = 1.0;
  std::size_t s = 1;
  VariableClass kind = VariableClass::Uncorrelated;

  std::size_t n() const noexcept { return a.size(); }
};

struct Violation {
  std::string what;
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;
};

struct Certification {
  bool uncorrelated = true;        // E[X_i X_j] = 0, |X_i| <= c, sparsity <= s
  bool pairwise_independent = true;  // mean zero, pair pmf = product of marginals, sparsity <= s
  std::vector<Violation> violations;

  bool certifies(VariableClass k) const { return k == VariableClass::Uncorrelated ? uncorrelated : pairwise_independent; }
};

/// Exact atom-sum checks of both hypothesis classes; lists every failure.
inline Certification certify(const AnticoncInstance& inst) {
  Certification rep;
  const std::size_t n = inst.n();
  auto fail_unc = [&](std::string what, std::size_t i, std::size_t j, double v) {
    rep.uncorrelated = false;
    rep.violations.push_back({std::move(what), i, j, v});
  };
  auto fail_pw = [&](std::string what, std::size_t i, std::size_t j, double v) {
    rep.pairwise_independent = false;
    rep.violations.push_back({std::move(what), i, j, v});
  };

  double total = 0.0;
  for (const auto& o : inst.outcomes) {
    if (o.x.size() != n) throw InvalidInstance("anticonc: outcome length differs from coefficient count");
    if (!(o.probability >= 0.0)) throw InvalidInstance("anticonc: negative probability");
    total += o.probability;
  }
  if (std::abs(total - 1.0) > kExactTol) {
    fail_unc("probabilities", 0, 0, total);
    fail_pw("probabilities", 0, 0, total);
  }

  for (std::size_t k = 0; k < inst.outcomes.size(); ++k) {
    const auto& x = inst.outcomes[k].x;
    const auto nnz = static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](double v) { return v != 0.0; }));
    if (nnz > inst.s) {
      fail_unc("sparsity", k, k, double(nnz));
      fail_pw("sparsity", k, k, double(nnz));
    }
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(x[i]) > inst.c + kExactTol) fail_unc("bound", i, i, x[i]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& o : inst.outcomes) mean += o.probability * o.x[i];
    if (std::abs(mean) > kExactTol) fail_pw("mean", i, i, mean);
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double cross = 0.0;
      std::map<double, double> mi, mj;
      std::map<std::pair<double, double>, double> joint;
      for (const auto& o : inst.outcomes) {
        cross += o.probability * o.x[i] * o.x[j];
        mi[o.x[i]] += o.probability;
        mj[o.x[j]] += o.probability;
        joint[{o.x[i], o.x[j]}] += o.probability;
      }
      if (std::abs(cross) > kExactTol) fail_unc("correlation", i, j, cross);
      double worst = 0.0;
      for (const auto& [xi, pi] : mi)
        for (const auto& [xj, pj] : mj) {
          auto it = joint.find({xi, xj});
          const double pij = it == joint.end() ? 0.0 : it->second;
          worst = std::max(worst, std::abs(pij - pi * pj));
        }
      if (worst > kExactTol) fail_pw("independence", i, j, worst);
    }
  return rep;
}

struct Verdict {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

inline double expected_abs_sum(const AnticoncInstance& inst) {
  double lhs = 0.0;
  for (const auto& o : inst.outcomes) {
    double sum = 0.0;
    for (std::size_t i = 0; i < inst.n(); ++i) sum += inst.a[i] * o.x[i];
    lhs += o.probability * std::abs(sum);
  }
  return lhs;
}

/// lhs = E|sum a_i X_i|, rhs = E[sum |a_i| X_i^2] / (c s).
inline Verdict verify_uncorrelated(const AnticoncInstance& inst) {
  if (!certify(inst).uncorrelated) throw InvalidInstance("anticonc: instance is not certified uncorrelated");
  Verdict v;
  v.lhs = expected_abs_sum(inst);
  for (const auto& o : inst.outcomes)
    for (std::size_t i = 0; i < inst.n(); ++i) v.rhs += o.probability * std::abs(inst.a[i]) * o.x[i] * o.x[i];
  v.rhs /= inst.c * static_cast<double>(inst.s);
  v.holds = v.lhs >= v.rhs - kExactTol;
  return v;
}

/// lhs = E|sum a_i X_i|, rhs = E[sum |a_i X_i|] / s.
inline Verdict verify_pairwise(const AnticoncInstance& inst) {
  if (!certify(inst).pairwise_independent)
    throw InvalidInstance("anticonc: instance is not certified pairwise independent");
  Verdict v;
  v.lhs = expected_abs_sum(inst);
  for (const auto& o : inst.outcomes)
    for (std::size_t i = 0; i < inst.n(); ++i) v.rhs += o.probability * std::abs(inst.a[i] * o.x[i]);
  v.rhs /= static_cast<double>(inst.s);
  v.holds = v.lhs >= v.rhs - kExactTol;
  return v;
}

struct PerCoordinate {
  std::size_t k = 0;
  double lhs = 0.0;  // E[|sum a_i X_i| 1{X_k != 0}]
  double rhs = 0.0;
  bool holds = false;
};

inline double restricted_abs_sum(const AnticoncInstance& inst, std::size_t k) {
  double lhs = 0.0;
  for (const auto& o : inst.outcomes) {
    if (o.x[k] == 0.0) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < inst.n(); ++i) sum += inst.a[i] * o.x[i];
    lhs += o.probability * std::abs(sum);
  }
  return lhs;
}

/// Uncorrelated per-k bound: rhs = E[|a_k| X_k^2] / c.
inline std::vector<PerCoordinate> per_coordinate_uncorrelated(const AnticoncInstance& inst) {
  std::vector<PerCoordinate> out;
  for (std::size_t k = 0; k < inst.n(); ++k) {
    PerCoordinate r{k, restricted_abs_sum(inst, k), 0.0, false};
    for (const auto& o : inst.outcomes) r.rhs += o.probability * std::abs(inst.a[k]) * o.x[k] * o.x[k];
    r.rhs /= inst.c;
    r.holds = r.lhs >= r.rhs - kExactTol;
    out.push_back(r);
  }
  return out;
}

/// Pairwise per-k bound: rhs = E|a_k X_k|.
inline std::vector<PerCoordinate> per_coordinate_pairwise(const AnticoncInstance& inst) {
  std::vector<PerCoordinate> out;
  for (std::size_t k = 0; k < inst.n(); ++k) {
    PerCoordinate r{k, restricted_abs_sum(inst, k), 0.0, false};
    for (const auto& o : inst.outcomes) r.rhs += o.probability * std::abs(inst.a[k] * o.x[k]);
    r.holds = r.lhs >= r.rhs - kExactTol;
    out.push_back(r);
  }
  return out;
}

/// Summing per-k inequalities: E|L| >= (1/s) sum_k E[|L| 1{X_k != 0}] >= (1/s) sum_k rhs_k.
struct Aggregation {
  double lhs = 0.0;         // E|L|
  double restricted = 0.0;  // (1/s) sum_k E[|L| 1{X_k != 0}]
  double bound = 0.0;       // (1/s) sum_k rhs_k
  bool holds = false;
};

inline Aggregation aggregate(const AnticoncInstance& inst, const std::vector<PerCoordinate>& per_k) {
  Aggregation g;
  g.lhs = expected_abs_sum(inst);
  for (const auto& r : per_k) g.restricted += r.lhs, g.bound += r.rhs;
  g.restricted /= static_cast<double>(inst.s);
  g.bound /= static_cast<double>(inst.s);
  g.holds = g.lhs >= g.restricted - kExactTol && g.restricted >= g.bound - kExactTol;
  return g;
}

// ---------------------------------------------------------------------------
// Instances.

/// X = xi * (row r of H_n), r uniform, xi a uniform sign; a = all ones.
/// Pairwise independent (hence uncorrelated), c = 1, s = n.
inline AnticoncInstance hadamard_instance(std::size_t n) {
  if (!is_power_of_two(n)) throw DomainError("anticonc: hadamard order must be a power of two");
  AnticoncInstance inst;
  inst.a.assign(n, 1.0);
  inst.c = 1.0;
  inst.s = n;
  inst.kind = VariableClass::PairwiseIndependent;
  for (int xi : {1, -1})
    for (std::size_t r = 0; r < n; ++r) {
      Outcome o;
      o.probability = 1.0 / (2.0 * double(n));
      for (std::size_t i = 0; i < n; ++i) o.x.push_back(xi * hadamard_entry(r, i));
      inst.outcomes.push_back(std::move(o));
    }
  return inst;
}

struct CounterexampleResult {
  AnticoncInstance instance;
  double lhs = 0.0;    // E|X1 + X2|
  double rhs = 0.0;    // E[|X1| + |X2|]
  double ratio = 0.0;
  double cross_moment = 0.0;  // E[X1 X2]
};

/// Four atoms: +-(1/delta, 1/delta) with probability delta^2 / (2(1+delta^2))
/// each, +-(1, -1) with the rest. Uncorrelated but not pairwise independent;
/// E|X1+X2| / E[|X1|+|X2|] -> 0 as delta -> 0.
inline CounterexampleResult pairwise_counterexample(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("counterexample: delta must lie in (0,1)");
  CounterexampleResult out;
  auto& inst = out.instance;
  inst.a = {1.0, 1.0};
  inst.c = 1.0 / delta;
  inst.s = 2;
  inst.kind = VariableClass::Uncorrelated;
  const double big = delta * delta / (2.0 * (1.0 + delta * delta));
  const double small = 0.5 - big;
  inst.outcomes = {{{1.0 / delta, 1.0 / delta}, big},
                   {{-1.0 / delta, -1.0 / delta}, big},
                   {{1.0, -1.0}, small},
                   {{-1.0, 1.0}, small}};
  out.lhs = expected_abs_sum(inst);
  for (const auto& o : inst.outcomes) {
    out.rhs += o.probability * (std::abs(o.x[0]) + std::abs(o.x[1]));
    out.cross_moment += o.probability * o.x[0] * o.x[1];
  }
  out.ratio = out.lhs / out.rhs;
  return out;
}

/// Random uncorrelated instance on n variables: a mixture of groups with
/// disjoint supports; inside a group, variable i is w_i * xi * H[r][col_i] for
/// distinct columns of a Hadamard matrix. Cross-group products vanish and
/// in-group columns are orthogonal, so E[X_i X_j] = 0 by construction.
inline AnticoncInstance random_uncorrelated(std::size_t n, SeededRng& rng) {
  if (n == 0) throw DomainError("anticonc: n must be positive");
  AnticoncInstance inst;
  inst.kind = VariableClass::Uncorrelated;
  for (std::size_t i = 0; i < n; ++i) inst.a.push_back(rng.uniform() * 4.0 - 2.0);
  // random partition into groups
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    if (groups.empty() || rng.below(3) == 0) groups.emplace_back();
    groups.back().push_back(perm[i]);
  }
  std::vector<double> weight(n);
  for (auto& w : weight) w = 0.25 + rng.uniform() * 2.75;
  std::vector<double> group_p(groups.size());
  double total = 0.0;
  for (auto& p : group_p) total += (p = 0.2 + rng.uniform());
  inst.c = *std::max_element(weight.begin(), weight.end());
  inst.s = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& members = groups[g];
    inst.s = std::max(inst.s, members.size());
    std::size_t m = 1;
    while (m < members.size() + 1) m <<= 1;
    if (m < 8 && rng.below(2)) m <<= 1;
    // distinct columns
    std::vector<std::size_t> cols(m);
    std::iota(cols.begin(), cols.end(), 0);
    for (std::size_t i = m; i > 1; --i) std::swap(cols[i - 1], cols[rng.below(i)]);
    const double p = group_p[g] / total / (2.0 * double(m));
    for (int xi : {1, -1})
      for (std::size_t r = 0; r < m; ++r) {
        Outcome o;
        o.x.assign(n, 0.0);
        o.probability = p;
        for (std::size_t q = 0; q < members.size(); ++q)
          o.x[members[q]] = weight[members[q]] * xi * hadamard_entry(r, cols[q]);
        inst.outcomes.push_back(std::move(o));
      }
  }
  return inst;
}

/// Random pairwise independent instance: X_i = w_i * xi * H[r][col_i] with
/// distinct columns of H_m (m >= n) and r, xi uniform. Any two distinct
/// columns of a Sylvester matrix, signed by xi, are independent uniform signs.
inline AnticoncInstance random_pairwise(std::size_t n, SeededRng& rng) {
  if (n == 0) throw DomainError("anticonc: n must be positive");
  AnticoncInstance inst;
  inst.kind = VariableClass::PairwiseIndependent;
  for (std::size_t i = 0; i < n; ++i) inst.a.push_back(rng.uniform() * 4.0 - 2.0);
  std::size_t m = 1;
  while (m < n) m <<= 1;
  if (m < 16 && rng.below(2)) m <<= 1;
  std::vector<std::size_t> cols(m);
  std::iota(cols.begin(), cols.end(), 0);
  for (std::size_t i = m; i > 1; --i) std::swap(cols[i - 1], cols[rng.below(i)]);
  std::vector<double> weight(n);
  for (auto& w : weight) w = 0.25 + rng.uniform() * 2.75;
  inst.c = *std::max_element(weight.begin(), weight.end());
  inst.s = n;
  for (int xi : {1, -1})
    for (std::size_t r = 0; r < m; ++r) {
      Outcome o;
      o.probability = 1.0 / (2.0 * double(m));
      for (std::size_t i = 0; i < n; ++i) o.x.push_back(weight[i] * xi * hadamard_entry(r, cols[i]));
      inst.outcomes.push_back(std::move(o));
    }
  return inst;
}

}  // namespace obal::anticonc
