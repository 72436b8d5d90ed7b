#pragma once

// Hard instances:
//  - the adaptive adversary that always plays a vector orthogonal to d_{t-1},
//    forcing |d_t|_2^2 >= (n-1) t against any signer;
//  - the uncorrelated lower-bound experiment (hadamard rows, |v|_2 = k);
//  - the unit-sphere stress run;
//  - the fractal tree on which anti-concentration in the original
//    (indicator) basis degrades with the tree height.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "result.hpp"
#include "signer.hpp"

namespace obal::adversary {

// ---------------------------------------------------------------------------
// Adaptive orthogonal adversary.

struct AdversaryState {
  std::vector<double> d;
  std::uint64_t t = 0;
  std::string mode = "orthogonal";

  explicit AdversaryState(std::size_t n = 0) : d(n, 0.0) {}
};

/// v with |v|_inf <= 1, <d, v> = 0 and at least n-1 coordinates equal to +-1.
/// Coordinates are visited by |d| descending; the largest one is held back and
/// solved last as the fractional residual. The running sum S stays within
/// [-max|d|, max|d|], so the residual -S/d_max always lies in [-1, 1].
inline SparseUpdate orthogonal_adversary_next(const AdversaryState& state) {
  const std::size_t n = state.d.size();
  if (n < 2) throw DomainError("orthogonal adversary needs n >= 2");
  std::vector<double> v(n, 1.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(state.d[a]) > std::abs(state.d[b]); });
  const std::size_t r = order[0];
  const double dr = state.d[r];
  if (dr != 0.0) {
    double S = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      const std::size_t i = order[k];
      const double di = state.d[i];
      v[i] = (S * di > 0.0) ? -1.0 : 1.0;
      S += v[i] * di;
    }
    v[r] = std::clamp(-S / dr, -1.0, 1.0);
  }
  return SparseUpdate::from_dense(v);
}

struct AdversaryRun {
  std::string algorithm;
  std::vector<double> sq_norms;  // |d_t|_2^2, t = 1..T
  double min_slack = 0.0;        // min_t |d_t|_2^2 - (n-1) t
  double max_inner = 0.0;        // max_t |<d_{t-1}, v_t>| / max(1, |d_{t-1}|_2)
  double min_v_sq = 0.0;         // min_t |v_t|_2^2
  std::uint64_t violations = 0;  // steps with |d_t|_2^2 < (n-1) t beyond fp tolerance
};

/// Tolerance for the exact bound: the inner product is zero up to rounding in
/// the residual coordinate, which contributes O(eps |d|) per step.
inline double orthogonality_slack(std::uint64_t t) { return 1e-9 * static_cast<double>(std::max<std::uint64_t>(t, 1)); }

inline AdversaryRun run_orthogonal_adversary(std::size_t n, std::uint64_t T, Algorithm algorithm, const SeededRng& rng) {
  AdversaryState adv(n);
  OnlineSigner<DenseStore> signer(DenseStore(n), SignerConfig::for_sparsity(n, n), algorithm,
                                  rng.fork(stream_tag::kBaseline));
  AdversaryRun out;
  out.algorithm = algorithm_name(algorithm);
  out.min_v_sq = static_cast<double>(n);
  out.min_slack = 0.0;
  for (std::uint64_t t = 1; t <= T; ++t) {
    const SparseUpdate v = orthogonal_adversary_next(adv);
    double inner = 0.0, vsq = 0.0, dnorm = 0.0;
    for (const auto& e : v.entries) inner += adv.d[e.coord] * e.value, vsq += e.value * e.value;
    for (double x : adv.d) dnorm += x * x;
    out.max_inner = std::max(out.max_inner, std::abs(inner) / std::max(1.0, std::sqrt(dnorm)));
    out.min_v_sq = std::min(out.min_v_sq, vsq);
    const int sign = signer.step(v);
    for (const auto& e : v.entries) adv.d[e.coord] += sign * e.value;
    ++adv.t;
    double sq = 0.0;
    for (double x : adv.d) sq += x * x;
    out.sq_norms.push_back(sq);
    const double slack = sq - static_cast<double>(n - 1) * static_cast<double>(t);
    if (t == 1 || slack < out.min_slack) out.min_slack = slack;
    if (slack < -orthogonality_slack(t)) ++out.violations;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Uncorrelated lower bound.

struct LowerBoundCertificate {
  double k = 0.0;                // common l2 norm of all atoms
  double max_off_diagonal = 0.0; // max_{i != j} |E[v(i) v(j)]|
};

/// Exact check over the atoms: coordinates uncorrelated and every atom of the
/// same l2 norm. Throws InvalidInstance otherwise.
inline LowerBoundCertificate certify_lower_bound_spec(const DistributionSpec& spec) {
  if (!spec.is_finite()) throw InvalidInstance("lower bound: spec must have finite support");
  spec.validate();
  const auto atoms = spec.atoms();
  const std::size_t n = spec.dim;
  LowerBoundCertificate cert;
  std::vector<double> cov(n * n, 0.0);
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    const auto v = atoms[a].update.to_dense();
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (a == 0) cert.k = norm;
    else if (std::abs(norm - cert.k) > 1e-9 * std::max(1.0, cert.k))
      throw InvalidInstance("lower bound: atoms do not share a common l2 norm");
    for (const auto& ei : atoms[a].update.entries)
      for (const auto& ej : atoms[a].update.entries) cov[ei.coord * n + ej.coord] += atoms[a].probability * ei.value * ej.value;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) cert.max_off_diagonal = std::max(cert.max_off_diagonal, std::abs(cov[i * n + j]));
  if (cert.max_off_diagonal > 1e-12) throw InvalidInstance("lower bound: coordinates are correlated");
  return cert;
}

struct LowerBoundReport {
  std::string algorithm;
  std::size_t n = 0;
  double k = 0.0;
  double threshold = 0.0;  // k/4
  std::uint64_t steps = 0;
  std::uint64_t trials = 0;
  std::uint64_t exceeded = 0;
  double frequency = 0.0;
  // Quadratic potential |d|_2^2: exact expected one-step increase at every
  // visited state with |d|_inf <= k/4 (expectation over the atoms, using the
  // algorithm's own sign rule; random signs average to |v|_2^2).
  double min_quadratic_drift = 0.0;
  std::uint64_t drift_states = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kOutputSchemaVersion;
    j["algorithm"] = algorithm;
    j["n"] = n;
    j["k"] = k;
    j["threshold"] = threshold;
    j["steps"] = steps;
    j["trials"] = trials;
    j["exceeded"] = exceeded;
    j["frequency"] = frequency;
    j["min_quadratic_drift"] = min_quadratic_drift;
    j["drift_states"] = drift_states;
    return j;
  }
};

/// Runs `trials` independent streams of n steps (seeds seed_base + i) and
/// counts those whose max_t |d_t|_inf strictly exceeds k/4.
inline LowerBoundReport lower_bound_experiment(const DistributionSpec& spec, Algorithm algorithm, std::uint64_t trials,
                                               std::uint64_t seed_base = 0, std::uint64_t steps = 0) {
  const auto cert = certify_lower_bound_spec(spec);
  const auto atoms = spec.atoms();
  LowerBoundReport rep;
  rep.algorithm = algorithm_name(algorithm);
  rep.n = spec.dim;
  rep.k = cert.k;
  rep.threshold = cert.k / 4.0;
  rep.steps = steps ? steps : spec.dim;
  rep.trials = trials;
  rep.min_quadratic_drift = std::numeric_limits<double>::infinity();
  const SignerConfig cfg = SignerConfig::for_sparsity(spec.dim, std::max<std::uint64_t>(1, spec.sparsity));
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    const SeededRng rng(seed_base + trial);
    SeededRng inputs = rng.fork(stream_tag::kInput);
    Sampler sampler(spec);
    OnlineSigner<DenseStore> signer(DenseStore(spec.dim), cfg, algorithm, rng.fork(stream_tag::kBaseline));
    double max_linf = 0.0;
    for (std::uint64_t t = 1; t <= rep.steps; ++t) {
      const auto& st = signer.state();
      if (st.linf_norm() <= rep.threshold) {
        double drift = 0.0;
        for (const auto& atom : atoms) {
          double inner = 0.0, sq = 0.0;
          for (const auto& e : atom.update.entries) inner += st.d.get(e.coord) * e.value, sq += e.value * e.value;
          if (algorithm == Algorithm::Random) {
            drift += atom.probability * sq;
          } else {
            DiscrepancyState<DenseStore> probe = st;
            const int chi = choose_sign(probe, atom.update, cfg).sign;
            drift += atom.probability * (sq + 2.0 * chi * inner);
          }
        }
        rep.min_quadratic_drift = std::min(rep.min_quadratic_drift, drift);
        ++rep.drift_states;
      }
      signer.step(sampler.next(inputs));
      max_linf = std::max(max_linf, signer.state().linf_norm());
    }
    if (max_linf > rep.threshold) ++rep.exceeded;
  }
  rep.frequency = trials ? static_cast<double>(rep.exceeded) / static_cast<double>(trials) : 0.0;
  if (rep.drift_states == 0) rep.min_quadratic_drift = 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Unit-sphere stress.

struct SphereGridPoint {
  std::uint64_t T = 0;
  std::vector<double> max_l2;  // per seed: max_{t <= T} |d_t|_2
  double median = 0.0;
  double reference = 0.0;      // sqrt(log T / log log T), 0 when undefined
};

struct SphereReport {
  std::string algorithm;
  std::size_t n = 0;
  std::vector<SphereGridPoint> grid;
  double max_identity_error = 0.0;  // max_t | |d_t|^2 - |d_{t-1}|^2 - 1 - 2 chi <d_{t-1}, v_t> |

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kOutputSchemaVersion;
    j["algorithm"] = algorithm;
    j["n"] = n;
    j["max_identity_error"] = max_identity_error;
    auto& g = j["grid"] = nlohmann::ordered_json::array();
    for (const auto& p : grid) g.push_back({{"T", p.T}, {"median_max_l2", p.median}, {"reference", p.reference}});
    return j;
  }
};

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

/// One stream of length max(T_grid) per seed; prefix maxima are read off at
/// every grid point so the grid medians are nested.
inline SphereReport sphere_stress(std::size_t n, const std::vector<std::uint64_t>& T_grid, std::uint64_t seeds,
                                  Algorithm algorithm, std::uint64_t seed_base = 0) {
  if (n < 2) throw DomainError("sphere stress needs n >= 2");
  if (T_grid.empty() || !std::is_sorted(T_grid.begin(), T_grid.end())) throw DomainError("sphere: T grid must be ascending");
  SphereReport rep;
  rep.algorithm = algorithm_name(algorithm);
  rep.n = n;
  for (auto T : T_grid) {
    SphereGridPoint p;
    p.T = T;
    const double lt = std::log(double(T));
    if (T > 2 && std::log(lt) > 0.0) p.reference = std::sqrt(lt / std::log(lt));
    rep.grid.push_back(p);
  }
  const auto spec = DistributionSpec::unit_sphere(n);
  const SignerConfig cfg = SignerConfig::for_sparsity(n, n);
  for (std::uint64_t s = 0; s < seeds; ++s) {
    const SeededRng rng(seed_base + s);
    SeededRng inputs = rng.fork(stream_tag::kInput);
    Sampler sampler(spec);
    OnlineSigner<DenseStore> signer(DenseStore(n), cfg, algorithm, rng.fork(stream_tag::kBaseline));
    double sq_prev = 0.0, best = 0.0;
    std::size_t g = 0;
    for (std::uint64_t t = 1; t <= T_grid.back(); ++t) {
      const SparseUpdate v = sampler.next(inputs);
      double inner = 0.0, vsq = 0.0;
      for (const auto& e : v.entries) inner += signer.state().d.get(e.coord) * e.value, vsq += e.value * e.value;
      const int chi = signer.step(v);
      double sq = 0.0;
      for (double x : signer.state().d.values()) sq += x * x;
      const double err = std::abs(sq - sq_prev - vsq - 2.0 * chi * inner);
      rep.max_identity_error = std::max(rep.max_identity_error, err / (1.0 + sq_prev));
      if (std::abs(vsq - 1.0) > 1e-12) throw InvariantViolation("sphere: sample not on the unit sphere");
      sq_prev = sq;
      best = std::max(best, std::sqrt(sq));
      while (g < rep.grid.size() && rep.grid[g].T == t) rep.grid[g++].max_l2.push_back(best);
    }
    while (g < rep.grid.size()) rep.grid[g++].max_l2.push_back(best);  // T = 0 grid points
  }
  for (auto& p : rep.grid) p.median = median_of(p.max_l2);
  return rep;
}

// ---------------------------------------------------------------------------
// Fractal tree.
//
// Labels on the complete binary tree of h levels (root at level 0):
//   root: d; left child is a block T, right child is 2d/3 with two T children.
//   T block: node x labeled 0 whose right child starts a new T and whose left
//   child y is labeled 0; y's left child is the terminal -d (zeros below it)
//   and y's right child starts a new T.
// A uniform path entering a T therefore stops at -d with probability 1/4 and
// otherwise enters another T, until the leaves are reached.

enum class FractalLabel { Zero, D, TwoThirds, MinusD };

inline double label_value(FractalLabel l, double d) {
  switch (l) {
    case FractalLabel::D: return d;
    case FractalLabel::TwoThirds: return 2.0 * d / 3.0;
    case FractalLabel::MinusD: return -d;
    default: return 0.0;
  }
}

inline const char* label_name(FractalLabel l) {
  switch (l) {
    case FractalLabel::D: return "d";
    case FractalLabel::TwoThirds: return "2d/3";
    case FractalLabel::MinusD: return "-d";
    default: return "0";
  }
}

namespace detail {

enum class NodeKind { Root, Mid, BlockRoot, BlockInner, Terminal, Below };

inline FractalLabel kind_label(NodeKind k) {
  switch (k) {
    case NodeKind::Root: return FractalLabel::D;
    case NodeKind::Mid: return FractalLabel::TwoThirds;
    case NodeKind::Terminal: return FractalLabel::MinusD;
    default: return FractalLabel::Zero;
  }
}

inline std::pair<NodeKind, NodeKind> children(NodeKind k) {
  switch (k) {
    case NodeKind::Root: return {NodeKind::BlockRoot, NodeKind::Mid};
    case NodeKind::Mid: return {NodeKind::BlockRoot, NodeKind::BlockRoot};
    case NodeKind::BlockRoot: return {NodeKind::BlockInner, NodeKind::BlockRoot};
    case NodeKind::BlockInner: return {NodeKind::Terminal, NodeKind::BlockRoot};
    default: return {NodeKind::Below, NodeKind::Below};
  }
}

// Distribution of per-path label counts (#d, #2d/3, #-d) for a uniform leaf of
// a subtree with `levels` levels rooted at a node of kind k.
using Counts = std::tuple<int, int, int>;
using PathLaw = std::map<Counts, double>;

inline PathLaw path_law(NodeKind k, int levels, std::map<std::pair<int, int>, PathLaw>& memo) {
  const auto key = std::make_pair(static_cast<int>(k), levels);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  PathLaw below;
  if (levels <= 1) {
    below[{0, 0, 0}] = 1.0;
  } else {
    const auto [l, r] = children(k);
    for (auto child : {l, r})
      for (const auto& [c, p] : path_law(child, levels - 1, memo)) below[c] += 0.5 * p;
  }
  PathLaw out;
  const FractalLabel lab = kind_label(k);
  for (const auto& [counts, p] : below) {
    Counts c = counts;
    auto& [nd, n23, nneg] = c;
    if (lab == FractalLabel::D) ++nd;
    if (lab == FractalLabel::TwoThirds) ++n23;
    if (lab == FractalLabel::MinusD) ++nneg;
    out[c] += p;
  }
  memo[key] = out;
  return out;
}

}  // namespace detail

struct FractalEntry {
  int level = 0;
  std::uint64_t index = 0;
  FractalLabel label = FractalLabel::Zero;
};

/// Every nonzero label of the height-h tree (levels 0..h-1), level-major.
inline std::vector<FractalEntry> fractal_labels(int h) {
  if (h < 1) throw DomainError("fractal: h must be >= 1");
  if (h > 24) throw CapacityExceeded("fractal: label table limited to h <= 24");
  std::vector<FractalEntry> out;
  std::vector<detail::NodeKind> level{detail::NodeKind::Root};
  for (int j = 0; j < h; ++j) {
    std::vector<detail::NodeKind> next;
    if (j + 1 < h) next.reserve(level.size() * 2);
    for (std::uint64_t k = 0; k < level.size(); ++k) {
      const auto lab = detail::kind_label(level[k]);
      if (lab != FractalLabel::Zero) out.push_back({j, k, lab});
      if (j + 1 < h) {
        const auto [l, r] = detail::children(level[k]);
        next.push_back(l);
        next.push_back(r);
      }
    }
    level = std::move(next);
  }
  return out;
}

struct FractalResult {
  int h = 0;
  double d = 0.0;
  // Values scaled by sinh(d); log_* are natural logs of the unscaled values.
  double lhs_scaled = 0.0;
  double rhs_scaled = 0.0;
  double log_lhs = 0.0;
  double log_rhs = 0.0;
  double log_beta = 0.0;
  double lhs = 0.0;   // inf when not representable
  double rhs = 0.0;
  double beta = 0.0;
  double escape_probability = 0.0;  // P(path never meets -d)

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kOutputSchemaVersion;
    j["h"] = h;
    j["d"] = d;
    j["log_lhs"] = log_lhs;
    j["log_rhs"] = log_rhs;
    j["log_beta"] = log_beta;
    if (beta <= 1e15) j["beta"] = beta;
    if (std::isfinite(lhs)) j["lhs"] = lhs, j["rhs"] = rhs;
    j["escape_probability"] = escape_probability;
    return j;
  }
};

/// log sinh(x) for x > 0 without overflow.
inline double log_sinh(double x) { return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0); }

/// Exact E|sum_path a| and E[sum_path |a|], a = sinh(label), over a uniform
/// leaf of the height-h tree, by recursion on node kinds.
inline FractalResult fractal_ratio(int h, double d) {
  if (h < 1) throw DomainError("fractal: h must be >= 1");
  if (!(d > 0.0)) throw DomainError("fractal: d must be positive");
  std::map<std::pair<int, int>, detail::PathLaw> memo;
  const auto law = detail::path_law(detail::NodeKind::Root, h, memo);
  // sinh(2d/3) / sinh(d), stable for large d
  const double r23 = std::exp(log_sinh(2.0 * d / 3.0) - log_sinh(d));
  FractalResult out;
  out.h = h;
  out.d = d;
  for (const auto& [c, p] : law) {
    const auto [nd, n23, nneg] = c;
    out.lhs_scaled += p * std::abs(double(nd) + n23 * r23 - double(nneg));
    out.rhs_scaled += p * (double(nd) + n23 * r23 + double(nneg));
    if (nneg == 0) out.escape_probability += p;
  }
  const double ls = log_sinh(d);
  out.log_lhs = std::log(out.lhs_scaled) + ls;
  out.log_rhs = std::log(out.rhs_scaled) + ls;
  out.log_beta = out.log_rhs - out.log_lhs;
  out.beta = std::exp(out.log_beta);
  out.lhs = ls < 700 ? out.lhs_scaled * std::sinh(d) : std::numeric_limits<double>::infinity();
  out.rhs = ls < 700 ? out.rhs_scaled * std::sinh(d) : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace obal::adversary
