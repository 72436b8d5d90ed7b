#pragma once

// Geometric discrepancy as vector balancing in a Haar basis, plus the
// two-player envy reductions.
//
// Interval discrepancy in d dimensions: point x arrives, update coordinate
// (i, h) gets h(x(i)) for every axis i and wavelet h of scale 1..L, plus one
// shared constant coordinate. Exactly d*L + 1 nonzeros, all +-1.
//
// Tusnady: coordinate h = (h_1..h_d) of the tensor system gets
// prod_i h_i(x(i)); exactly (L+1)^d nonzeros. Stored lazily.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "core.hpp"
#include "haar.hpp"
#include "result.hpp"
#include "signer.hpp"
#include "spectral.hpp"

namespace obal::problems {

struct PointStream {
  std::size_t dim = 1;
  std::vector<double> coords;  // row-major, T x dim

  std::size_t size() const noexcept { return dim ? coords.size() / dim : 0; }
  const double* point(std::size_t t) const noexcept { return coords.data() + t * dim; }
  double at(std::size_t t, std::size_t axis) const noexcept { return coords[t * dim + axis]; }

  void validate() const {
    if (dim == 0) throw DomainError("points: dimension must be positive");
    if (coords.size() % dim != 0) throw DomainError("points: ragged coordinate array");
    for (double x : coords)
      if (!(x >= 0.0 && x <= 1.0)) throw DomainError("points: coordinate outside [0,1]");
  }
};

/// T points uniform on [0,1]^dim.
inline PointStream sample_points(std::size_t dim, std::uint64_t T, SeededRng rng) {
  PointStream ps{dim, {}};
  ps.coords.resize(dim * T);
  for (auto& x : ps.coords) x = rng.uniform();
  return ps;
}

/// ceil(log2 T), with T <= 1 giving 0.
inline int tree_depth(std::uint64_t T) {
  int L = 0;
  while ((std::uint64_t{1} << L) < T) ++L;
  return L;
}

// ---------------------------------------------------------------------------
// Interval discrepancy.

struct IntervalProbe {
  haar::DyadicInterval interval;
  std::size_t axis = 0;
  std::uint64_t t = 0;
};

struct ProbeOutcome {
  double reconstructed = 0.0;  // sum_h coeff(h) * d_t(axis, h) from the signer's live state
  long long counted = 0;       // sum_{l<=t} chi_l 1_I(x_l)
};

struct IntervalOptions {
  int max_scale = -1;  // -1: ceil(log2 T)
  std::optional<double> lambda;
  Algorithm algorithm = Algorithm::Cosh;
  std::uint64_t stride = 1;
  std::vector<IntervalProbe> probes;
};

struct IntervalRun {
  RunResult haar;    // |d_t|_inf over Haar coordinates, cosh potential
  RunResult dyadic;  // max over dyadic intervals (levels <= L, all axes) of |disc_t(I)|, by direct counting
  std::vector<int> signs;
  int max_scale = 0;
  std::uint64_t sparsity = 0;
  std::vector<double> final_coordinates;
  std::vector<ProbeOutcome> probe_outcomes;  // same order as IntervalOptions::probes
};

inline CoordId interval_coord(std::size_t axis, haar::HaarIndex h, int L) {
  return (static_cast<CoordId>(axis) << L) | haar::flat_id(h);
}

/// The sparse update for one point: (0, 1) plus (axis, h) for scales 1..L.
inline SparseUpdate interval_update(const double* x, std::size_t d, int L) {
  SparseUpdate u;
  u.dim = static_cast<std::uint64_t>(d) << L;
  u.entries.reserve(d * L + 1);
  u.entries.push_back({0, 1.0});
  for (std::size_t i = 0; i < d; ++i)
    for (int j = 1; j <= L; ++j) {
      const auto hit = haar::hit_at_scale(j, x[i]);
      u.entries.push_back({interval_coord(i, hit.index, L), double(hit.value)});
    }
  return u;
}

namespace detail {

// Counts per (axis, level, index) for levels 0..L; index into one flat array.
class DyadicCounters {
 public:
  DyadicCounters(std::size_t d, int L) : d_(d), L_(L), per_axis_((std::size_t{2} << L) - 1), counts_(d * per_axis_, 0) {}

  void add(const double* x, int sign) {
    for (std::size_t i = 0; i < d_; ++i)
      for (int lev = 0; lev <= L_; ++lev) {
        const auto I = haar::interval_containing(x[i], lev);
        auto& c = counts_[i * per_axis_ + ((std::size_t{1} << lev) - 1) + I.index];
        const long long before = c;
        c += sign;
        tracker_.replace(double(before), double(c));
      }
  }
  double current_max() const noexcept { return tracker_.max(); }

 private:
  std::size_t d_;
  int L_;
  std::size_t per_axis_;
  std::vector<long long> counts_;
  AbsMaxTracker tracker_;
};

inline long long count_signed(const std::vector<int>& signs, const PointStream& pts, std::uint64_t t,
                              const auto& inside) {
  long long total = 0;
  for (std::uint64_t l = 0; l < t; ++l)
    if (inside(pts.point(l))) total += signs[l];
  return total;
}

inline void check_agreement(double reconstructed, long long counted, std::uint64_t T, const char* what) {
  if (std::abs(reconstructed - double(counted)) > 1e-6 * std::max<double>(1.0, double(T))) {
    throw ConsistencyError(std::string(what) + ": Haar reconstruction " + std::to_string(reconstructed) +
                           " disagrees with direct count " + std::to_string(counted));
  }
}

}  // namespace detail

inline IntervalRun interval_signer(const PointStream& points, const SeededRng& rng, IntervalOptions opts = {}) {
  points.validate();
  const std::size_t d = points.dim;
  const std::uint64_t T = points.size();
  IntervalRun out;
  out.max_scale = opts.max_scale >= 0 ? opts.max_scale : tree_depth(T);
  const int L = out.max_scale;
  if (L * 1.0 + std::log2(double(d)) > 40) throw CapacityExceeded("interval: coordinate space too large");
  out.sparsity = d * L + 1;
  const std::uint64_t n = static_cast<std::uint64_t>(d) << L;

  SignerConfig cfg = SignerConfig::for_sparsity(n, out.sparsity);
  if (opts.lambda) cfg.lambda = *opts.lambda;
  cfg.validate();
  OnlineSigner<DenseStore> signer(DenseStore(n), cfg, opts.algorithm, rng.fork(stream_tag::kBaseline));
  detail::DyadicCounters counters(d, L);

  // probes sorted by time, answered from the live state
  std::vector<std::size_t> order(opts.probes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return opts.probes[a].t < opts.probes[b].t; });
  out.probe_outcomes.resize(opts.probes.size());
  std::size_t next_probe = 0;
  auto answer_probes = [&](std::uint64_t t) {
    while (next_probe < order.size() && opts.probes[order[next_probe]].t == t) {
      const auto& p = opts.probes[order[next_probe]];
      if (p.interval.level > L) throw DomainError("interval probe: level exceeds max scale");
      double recon = 0.0;
      for (const auto& [h, c] : haar::interval_coefficients(p.interval, L))
        recon += c * signer.state().d.get(h.scale == 0 ? 0 : interval_coord(p.axis, h, L));
      out.probe_outcomes[order[next_probe]].reconstructed = recon;
      ++next_probe;
    }
  };

  for (auto* r : {&out.haar, &out.dyadic}) {
    r->algorithm = algorithm_name(opts.algorithm);
    r->seed = rng.seed();
    r->stride = opts.stride;
  }
  answer_probes(0);
  for (std::uint64_t t = 1; t <= T; ++t) {
    const double* x = points.point(t - 1);
    const SparseUpdate v = interval_update(x, d, L);
    if (v.nnz() != out.sparsity) throw InvariantViolation("interval: update sparsity differs from d*L+1");
    const int sign = signer.step(v);
    out.signs.push_back(sign);
    counters.add(x, sign);
    out.haar.record(t, signer.state().linf_norm(), signer.state().phi());
    out.dyadic.record(t, counters.current_max(), signer.state().phi());
    answer_probes(t);
  }
  if (next_probe != order.size()) throw DomainError("interval probe time exceeds stream length");
  out.haar.finish();
  out.dyadic.finish();
  out.final_coordinates = signer.state().d.values();

  for (std::size_t k = 0; k < opts.probes.size(); ++k) {
    const auto& p = opts.probes[k];
    out.probe_outcomes[k].counted = detail::count_signed(
        out.signs, points, p.t, [&](const double* x) { return p.interval.contains(x[p.axis]); });
    detail::check_agreement(out.probe_outcomes[k].reconstructed, out.probe_outcomes[k].counted, T,
                            "interval probe");
  }
  return out;
}

/// |sum_{l<=t} chi_l 1_I(x_l(axis))|, computed by counting and by Haar
/// reconstruction from freshly summed coordinates; throws if they disagree.
inline long long dyadic_interval_discrepancy(const std::vector<int>& signs, const PointStream& points,
                                             haar::DyadicInterval I, std::size_t axis, std::uint64_t t) {
  if (t > signs.size() || t > points.size()) throw DomainError("dyadic_interval_discrepancy: t out of range");
  const long long counted =
      detail::count_signed(signs, points, t, [&](const double* x) { return I.contains(x[axis]); });
  double recon = 0.0;
  for (const auto& [h, c] : haar::interval_coefficients(I, I.level)) {
    long long coord = 0;
    for (std::uint64_t l = 0; l < t; ++l) coord += signs[l] * haar::eval(h, points.at(l, axis));
    recon += c * double(coord);
  }
  detail::check_agreement(recon, counted, std::max<std::uint64_t>(t, 1), "dyadic_interval_discrepancy");
  return std::llabs(counted);
}

struct IntervalWitness {
  long long value = 0;
  double lo = 0.0;  // half-open [lo, hi)
  double hi = 0.0;
};

/// Exact max over all intervals of |sum chi_l 1_I(x_l(axis))| for the first t
/// points, via max/min contiguous sums in coordinate order. Points sharing a
/// coordinate are merged (an interval takes all or none of them).
inline IntervalWitness max_interval_discrepancy(const std::vector<int>& signs, const PointStream& points,
                                                std::size_t axis, std::uint64_t t) {
  if (t > signs.size() || t > points.size()) throw DomainError("max_interval_discrepancy: t out of range");
  std::vector<std::pair<double, int>> items;
  items.reserve(t);
  for (std::uint64_t l = 0; l < t; ++l) items.emplace_back(points.at(l, axis), signs[l]);
  std::sort(items.begin(), items.end());
  std::vector<double> xs;
  std::vector<long long> ws;
  for (const auto& [x, s] : items) {
    if (!xs.empty() && xs.back() == x) ws.back() += s;
    else xs.push_back(x), ws.push_back(s);
  }
  IntervalWitness best;
  if (xs.empty()) return best;
  // Kadane for max and min sums, tracking window starts.
  long long cur_max = 0, cur_min = 0;
  std::size_t start_max = 0, start_min = 0;
  std::size_t bi = 0, bj = 0;
  long long bval = -1;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (cur_max <= 0) cur_max = 0, start_max = k;
    if (cur_min >= 0) cur_min = 0, start_min = k;
    cur_max += ws[k];
    cur_min += ws[k];
    if (std::llabs(cur_max) > bval) bval = std::llabs(cur_max), bi = start_max, bj = k;
    if (std::llabs(cur_min) > bval) bval = std::llabs(cur_min), bi = start_min, bj = k;
  }
  best.value = bval;
  best.lo = bi == 0 ? 0.0 : 0.5 * (xs[bi - 1] + xs[bi]);
  best.hi = bj + 1 == xs.size() ? 1.0 : 0.5 * (xs[bj] + xs[bj + 1]);
  return best;
}

// ---------------------------------------------------------------------------
// Tusnady's problem.

struct BoxProbe {
  haar::DyadicBox box;
  std::uint64_t t = 0;
};

struct TusnadyOptions {
  int max_scale = -1;
  std::optional<double> lambda;
  Algorithm algorithm = Algorithm::Cosh;
  std::uint64_t stride = 1;
  std::size_t touched_cap = std::size_t{1} << 24;
  std::vector<BoxProbe> probes;
};

struct TusnadyRun {
  RunResult haar;
  RunResult dyadic;  // max over dyadic boxes (side levels <= L) by direct counting
  std::vector<int> signs;
  int max_scale = 0;
  std::uint64_t sparsity = 0;
  std::size_t touched = 0;
  std::vector<ProbeOutcome> probe_outcomes;
};

/// All (L+1)^d tensor wavelets nonzero at x, sorted by coordinate id.
inline SparseUpdate tusnady_update(const double* x, std::size_t d, int L) {
  std::vector<std::vector<haar::ScaleHit>> per_axis;
  for (std::size_t i = 0; i < d; ++i) per_axis.push_back(haar::hits(x[i], L));
  SparseUpdate u;
  u.dim = std::uint64_t{1} << (L * d);
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= L + 1;
  u.entries.reserve(total);
  std::vector<std::size_t> pick(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    CoordId id = 0;
    int value = 1;
    for (std::size_t i = d; i-- > 0;) {
      id = (id << L) | haar::flat_id(per_axis[i][pick[i]].index);
      value *= per_axis[i][pick[i]].value;
    }
    u.entries.push_back({id, double(value)});
    for (std::size_t i = 0; i < d; ++i) {
      if (++pick[i] <= static_cast<std::size_t>(L)) break;
      pick[i] = 0;
    }
  }
  std::sort(u.entries.begin(), u.entries.end(), [](const Entry& a, const Entry& b) { return a.coord < b.coord; });
  return u;
}

inline TusnadyRun tusnady_signer(const PointStream& points, const SeededRng& rng, TusnadyOptions opts = {}) {
  points.validate();
  const std::size_t d = points.dim;
  const std::uint64_t T = points.size();
  TusnadyRun out;
  out.max_scale = opts.max_scale >= 0 ? opts.max_scale : tree_depth(T);
  const int L = out.max_scale;
  if (static_cast<std::size_t>(L) * d > 62) throw CapacityExceeded("tusnady: coordinate space exceeds 2^62");
  out.sparsity = 1;
  for (std::size_t i = 0; i < d; ++i) out.sparsity *= L + 1;
  const std::uint64_t n = std::uint64_t{1} << (L * d);

  SignerConfig cfg = SignerConfig::for_sparsity(n, out.sparsity);
  if (opts.lambda) cfg.lambda = *opts.lambda;
  cfg.validate();
  OnlineSigner<LazyStore> signer(LazyStore(n, opts.touched_cap), cfg, opts.algorithm,
                                 rng.fork(stream_tag::kBaseline));

  // direct box counters keyed by (per-axis level, index) packed per axis
  std::unordered_map<std::uint64_t, long long> box_counts;
  AbsMaxTracker box_max;
  auto box_key = [&](const std::vector<haar::DyadicInterval>& axes) {
    std::uint64_t key = 0;
    for (std::size_t i = d; i-- > 0;) key = (key << (L + 1)) | (((std::uint64_t{1} << axes[i].level) - 1) + axes[i].index);
    return key;
  };
  if (static_cast<std::size_t>(L + 1) * d > 63) throw CapacityExceeded("tusnady: box key overflow");

  std::vector<std::size_t> order(opts.probes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return opts.probes[a].t < opts.probes[b].t; });
  out.probe_outcomes.resize(opts.probes.size());
  std::size_t next_probe = 0;
  auto answer_probes = [&](std::uint64_t t) {
    while (next_probe < order.size() && opts.probes[order[next_probe]].t == t) {
      const auto& p = opts.probes[order[next_probe]];
      if (p.box.dim() != d) throw DomainError("box probe: dimension mismatch");
      double recon = 0.0;
      for (const auto& [h, c] : haar::box_coefficients(p.box, L))
        recon += c * signer.state().d.get(haar::tensor_flat_id(h, L));
      out.probe_outcomes[order[next_probe]].reconstructed = recon;
      ++next_probe;
    }
  };

  for (auto* r : {&out.haar, &out.dyadic}) {
    r->algorithm = algorithm_name(opts.algorithm);
    r->seed = rng.seed();
    r->stride = opts.stride;
  }
  answer_probes(0);
  std::vector<haar::DyadicInterval> axes(d);
  std::vector<int> level(d, 0);
  for (std::uint64_t t = 1; t <= T; ++t) {
    const double* x = points.point(t - 1);
    const SparseUpdate v = tusnady_update(x, d, L);
    if (v.nnz() != out.sparsity) throw InvariantViolation("tusnady: update sparsity differs from (L+1)^d");
    const int sign = signer.step(v);
    out.signs.push_back(sign);
    // every dyadic box containing x: one per level vector
    std::fill(level.begin(), level.end(), 0);
    for (std::size_t combo = 0; combo < out.sparsity; ++combo) {
      for (std::size_t i = 0; i < d; ++i) axes[i] = haar::interval_containing(x[i], level[i]);
      auto& c = box_counts[box_key(axes)];
      const long long before = c;
      c += sign;
      box_max.replace(double(before), double(c));
      for (std::size_t i = 0; i < d; ++i) {
        if (++level[i] <= L) break;
        level[i] = 0;
      }
    }
    out.haar.record(t, signer.state().linf_norm(), signer.state().phi());
    out.dyadic.record(t, box_max.max(), signer.state().phi());
    answer_probes(t);
  }
  if (next_probe != order.size()) throw DomainError("box probe time exceeds stream length");
  out.haar.finish();
  out.dyadic.finish();
  out.touched = signer.state().d.touched();

  for (std::size_t k = 0; k < opts.probes.size(); ++k) {
    const auto& p = opts.probes[k];
    out.probe_outcomes[k].counted =
        detail::count_signed(out.signs, points, p.t, [&](const double* x) { return p.box.contains(x); });
    detail::check_agreement(out.probe_outcomes[k].reconstructed, out.probe_outcomes[k].counted, T, "box probe");
  }
  return out;
}

/// Tensor analogue of dyadic_interval_discrepancy.
inline long long dyadic_box_discrepancy(const std::vector<int>& signs, const PointStream& points,
                                        const haar::DyadicBox& B, std::uint64_t t) {
  if (t > signs.size() || t > points.size()) throw DomainError("dyadic_box_discrepancy: t out of range");
  if (B.dim() != points.dim) throw DomainError("dyadic_box_discrepancy: dimension mismatch");
  const long long counted = detail::count_signed(signs, points, t, [&](const double* x) { return B.contains(x); });
  int L = 0;
  for (const auto& a : B.axes) L = std::max(L, a.level);
  double recon = 0.0;
  for (const auto& [h, c] : haar::box_coefficients(B, L)) {
    long long coord = 0;
    for (std::uint64_t l = 0; l < t; ++l) coord += signs[l] * haar::eval(h, points.point(l));
    recon += c * double(coord);
  }
  detail::check_agreement(recon, counted, std::max<std::uint64_t>(t, 1), "dyadic_box_discrepancy");
  return std::llabs(counted);
}

// ---------------------------------------------------------------------------
// Two-player envy.

struct Valuation {
  double u1 = 0.0;
  double u2 = 0.0;
};

/// Item t goes to owner[t] in {1, 2}.
struct Allocation {
  std::vector<int> owner;
  std::vector<Valuation> values;

  void validate() const {
    if (owner.size() != values.size()) throw DomainError("allocation: owner/value length mismatch");
    for (int o : owner)
      if (o != 1 && o != 2) throw DomainError("allocation: owner must be 1 or 2");
    for (const auto& v : values)
      if (!(v.u1 >= 0.0 && v.u1 <= 1.0 && v.u2 >= 0.0 && v.u2 <= 1.0))
        throw DomainError("allocation: valuation outside [0,1]");
  }
};

/// (player-1 envy, player-2 envy) over the first t items:
///   e1 = v1(S2) - v1(S1),  e2 = v2(S1) - v2(S2).
inline std::pair<double, double> cardinal_envy_terms(const Allocation& a, std::size_t t) {
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t k = 0; k < t; ++k) {
    const double s = a.owner[k] == 2 ? 1.0 : -1.0;
    e1 += s * a.values[k].u1;
    e2 -= s * a.values[k].u2;
  }
  return {e1, e2};
}

inline double cardinal_envy(const Allocation& a, std::size_t t) {
  auto [e1, e2] = cardinal_envy_terms(a, t);
  return std::max(e1, e2);
}

/// max over prefixes of each player's decreasing-value order of
/// |other's items| - |own items|; value ties broken by arrival index.
inline long long measure_ordinal_envy(const Allocation& a, std::size_t t) {
  if (t > a.owner.size()) throw DomainError("measure_ordinal_envy: t out of range");
  long long best = 0;
  for (int player : {1, 2}) {
    std::vector<std::size_t> order(t);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      const double vx = player == 1 ? a.values[x].u1 : a.values[x].u2;
      const double vy = player == 1 ? a.values[y].u1 : a.values[y].u2;
      return vx > vy;
    });
    long long run = 0;
    for (std::size_t k : order) {
      run += a.owner[k] == player ? -1 : 1;
      best = std::max(best, run);
    }
  }
  return best;
}

enum class ValuationModel { Independent, Correlated };

inline ValuationModel parse_valuation_model(const std::string& s) {
  if (s == "independent") return ValuationModel::Independent;
  if (s == "correlated") return ValuationModel::Correlated;
  throw InvalidSpec("unknown valuation model '" + s + "'");
}

/// Independent: u1, u2 i.i.d. uniform. Correlated: u1 uniform; u2 = u1 with
/// probability 1/2, else an independent uniform draw.
inline std::vector<Valuation> sample_valuations(ValuationModel model, std::uint64_t T, SeededRng rng) {
  std::vector<Valuation> out(T);
  for (auto& v : out) {
    v.u1 = rng.uniform();
    if (model == ValuationModel::Correlated && rng.sign() > 0) v.u2 = v.u1;
    else v.u2 = rng.uniform();
  }
  return out;
}

/// Exact E[v v^T] for v = (u1, -u2) under `model`.
inline spectral::Matrix valuation_covariance(ValuationModel model) {
  spectral::Matrix P(2, 2);
  P(0, 0) = P(1, 1) = 1.0 / 3.0;
  const double cross = model == ValuationModel::Independent ? 0.25 : 0.5 * (1.0 / 3.0) + 0.5 * 0.25;
  P(0, 1) = P(1, 0) = -cross;
  return P;
}

struct EnvyRun {
  Allocation allocation;
  std::vector<double> envy_trace;  // per step
  double max_envy = 0.0;
  std::uint64_t argmax_t = 0;
};

/// Cardinal-envy allocation through the spectral balancer on v_t = (u1, -u2):
/// applied sign + gives the item to player 2. Each step asserts that the
/// balancer's original-basis d_t equals the directly computed envy terms.
inline EnvyRun allocate_cardinal(const std::vector<Valuation>& values, const spectral::Matrix& covariance,
                                 const SeededRng& rng, Algorithm algorithm = Algorithm::Cosh) {
  spectral::SpectralBalancer balancer(spectral::eigendecompose(covariance), algorithm, rng);
  EnvyRun out;
  out.allocation.values = values;
  for (const auto& v : values)
    if (!(v.u1 >= 0.0 && v.u1 <= 1.0 && v.u2 >= 0.0 && v.u2 <= 1.0)) throw DomainError("envy: valuation outside [0,1]");
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    const int sign = balancer.step({values[t].u1, -values[t].u2});
    const int owner = sign > 0 ? 2 : 1;
    out.allocation.owner.push_back(owner);
    const double s = owner == 2 ? 1.0 : -1.0;
    e1 += s * values[t].u1;
    e2 -= s * values[t].u2;
    const auto& d = balancer.original();
    const double tol = 1e-9 * double(t + 1);
    if (std::abs(d[0] - e1) > tol || std::abs(d[1] - e2) > tol)
      throw InvariantViolation("envy: discrepancy does not match cardinal envy at step " + std::to_string(t + 1));
    const double envy = std::max(e1, e2);
    out.envy_trace.push_back(envy);
    if (t == 0 || envy > out.max_envy) out.max_envy = envy, out.argmax_t = t + 1;
  }
  return out;
}

struct OrdinalRun {
  Allocation allocation;
  IntervalRun interval;
  std::vector<std::uint64_t> check_times;
  std::vector<long long> ordinal_envy;        // at check_times
  std::vector<long long> interval_max;        // max over both axes, all intervals, at check_times
  long long final_ordinal_envy = 0;
};

/// Ordinal-envy allocation through 2-d interval discrepancy on x_t = (u1, u2);
/// + gives the item to player 2. At each checked time, asserts
/// envy_O <= 2 * (max interval discrepancy over both axes).
inline OrdinalRun allocate_ordinal(const std::vector<Valuation>& values, const SeededRng& rng,
                                   Algorithm algorithm = Algorithm::Cosh, std::uint64_t check_stride = 0) {
  PointStream pts{2, {}};
  for (const auto& v : values) pts.coords.push_back(v.u1), pts.coords.push_back(v.u2);
  IntervalOptions opts;
  opts.algorithm = algorithm;
  OrdinalRun out;
  out.interval = interval_signer(pts, rng, opts);
  out.allocation.values = values;
  for (int s : out.interval.signs) out.allocation.owner.push_back(s > 0 ? 2 : 1);
  out.allocation.validate();
  const std::uint64_t T = values.size();
  const std::uint64_t stride = check_stride ? check_stride : std::max<std::uint64_t>(1, T / 64);
  for (std::uint64_t t = stride; t <= T; t += stride) out.check_times.push_back(t);
  if (T > 0 && (out.check_times.empty() || out.check_times.back() != T)) out.check_times.push_back(T);
  for (std::uint64_t t : out.check_times) {
    const long long envy = measure_ordinal_envy(out.allocation, t);
    const long long disc = std::max(max_interval_discrepancy(out.interval.signs, pts, 0, t).value,
                                    max_interval_discrepancy(out.interval.signs, pts, 1, t).value);
    if (envy > 2 * disc)
      throw InvariantViolation("envy: ordinal envy exceeds twice the interval discrepancy at t=" + std::to_string(t));
    out.ordinal_envy.push_back(envy);
    out.interval_max.push_back(disc);
  }
  out.final_ordinal_envy = T ? measure_ordinal_envy(out.allocation, T) : 0;
  return out;
}

}  // namespace obal::problems
