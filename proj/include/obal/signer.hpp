#pragma once

// Greedy hyperbolic-cosine signer and the random-coloring baseline.
//
// Potential: Phi(d) = sum_i cosh(lambda * d(i)), lambda = 1/(2s) by default.
// On arrival of v the signer picks chi in {-1,+1} minimizing Phi(d + chi v).
// Since
//     Phi(d + v) - Phi(d - v) = 2 sum_i sinh(lambda d(i)) sinh(lambda v(i)),
// the comparison only needs v's support, and is exactly zero at d = 0
// (ties go to +1).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>

#include "core.hpp"
#include "result.hpp"

namespace obal {

enum class Algorithm { Cosh, Random };

inline std::string algorithm_name(Algorithm a) { return a == Algorithm::Cosh ? "cosh" : "random"; }

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "cosh") return Algorithm::Cosh;
  if (s == "random") return Algorithm::Random;
  throw InvalidSpec("unknown algorithm '" + s + "' (expected cosh|random)");
}

struct SignerConfig {
  std::uint64_t n = 1;
  std::uint64_t s = 1;
  double lambda = 0.5;
  double potential_cap = 1e300;

  static SignerConfig for_sparsity(std::uint64_t n, std::uint64_t s) {
    SignerConfig cfg{n, s, 1.0 / (2.0 * static_cast<double>(s)), 1e300};
    cfg.validate();
    return cfg;
  }

  void validate() const {
    if (n == 0) throw InvalidSpec("signer: n must be positive");
    if (s == 0) throw InvalidSpec("signer: s must be >= 1");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidSpec("signer: lambda must lie in (0,1]");
    if (!(potential_cap > 0.0)) throw InvalidSpec("signer: potential cap must be positive");
  }
};

/// First/second order drift terms at the pre-step state.
///   L = sum_i sinh(lambda d(i)) v(i)
///   Q = sum_i |sinh(lambda d(i))| v(i)^2
struct DriftDiagnostics {
  double linear = 0.0;
  double quadratic = 0.0;
  double delta_phi = 0.0;
};

struct SignDecision {
  int sign = 1;
  DriftDiagnostics drift;
};

template <class Store>
DriftDiagnostics drift_terms(const DiscrepancyState<Store>& state, const SparseUpdate& v) {
  DriftDiagnostics out;
  for (const auto& e : v.entries) {
    const double sh = std::sinh(state.lambda * state.d.get(e.coord));
    out.linear += sh * e.value;
    out.quadratic += std::abs(sh) * e.value * e.value;
  }
  return out;
}

/// Greedy sign choice; applies the step to `state` in place.
template <class Store>
SignDecision choose_sign(DiscrepancyState<Store>& state, const SparseUpdate& v, const SignerConfig& cfg) {
  v.validate(cfg.s);
  if (v.dim != cfg.n) throw DomainError("signer: update dimension does not match config");
  SignDecision out;
  double plus_minus_gap = 0.0;
  for (const auto& e : v.entries) {
    const double sh = std::sinh(state.lambda * state.d.get(e.coord));
    out.drift.linear += sh * e.value;
    out.drift.quadratic += std::abs(sh) * e.value * e.value;
    plus_minus_gap += sh * std::sinh(state.lambda * e.value);
  }
  out.sign = plus_minus_gap <= 0.0 ? 1 : -1;
  const double before = state.phi_excess;
  state.apply(v, out.sign);
  out.drift.delta_phi = state.phi_excess - before;
  if (!(state.phi() <= cfg.potential_cap)) throw PotentialOverflow(state.t, state.phi());
  return out;
}

/// Uniform +-1, independent of the update.
inline int random_sign(SeededRng& rng) { return rng.sign(); }

/// One signer bound to a discrepancy state; `Random` draws coins from its own generator.
template <class Store>
class OnlineSigner {
 public:
  OnlineSigner(Store store, SignerConfig cfg, Algorithm algorithm, SeededRng coins)
      : cfg_(cfg), algorithm_(algorithm), coins_(coins), state_(std::move(store), cfg.lambda) {
    cfg_.validate();
  }

  int step(const SparseUpdate& v) {
    if (algorithm_ == Algorithm::Cosh) {
      auto decision = choose_sign(state_, v, cfg_);
      last_ = decision.drift;
      return decision.sign;
    }
    v.validate(cfg_.s);
    const int sign = random_sign(coins_);
    const double before = state_.phi_excess;
    last_ = drift_terms(state_, v);
    state_.apply(v, sign);
    last_.delta_phi = state_.phi_excess - before;
    return sign;
  }

  const DiscrepancyState<Store>& state() const noexcept { return state_; }
  const DriftDiagnostics& last_drift() const noexcept { return last_; }
  const SignerConfig& config() const noexcept { return cfg_; }
  Algorithm algorithm() const noexcept { return algorithm_; }

 private:
  SignerConfig cfg_;
  Algorithm algorithm_;
  SeededRng coins_;
  DiscrepancyState<Store> state_;
  DriftDiagnostics last_;
};

/// Signs T draws from `sampler`. Inputs come from rng.fork(kInput) and coins
/// from rng.fork(kBaseline), so both algorithms see the same i.i.d. stream.
inline RunResult run_stream(Sampler& sampler, std::uint64_t T, const SignerConfig& cfg, const SeededRng& rng,
                            Algorithm algorithm = Algorithm::Cosh, std::uint64_t stride = 1,
                            std::vector<int>* signs_out = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.n != sampler.spec().dim) throw InvalidSpec("run_stream: config dimension differs from spec");
  if (cfg.s < sampler.spec().sparsity) throw InvalidSpec("run_stream: config sparsity below spec sparsity");
  SeededRng inputs = rng.fork(stream_tag::kInput);
  OnlineSigner<DenseStore> signer(DenseStore(cfg.n), cfg, algorithm, rng.fork(stream_tag::kBaseline));
  RunResult result;
  result.algorithm = algorithm_name(algorithm);
  result.seed = rng.seed();
  result.stride = stride;
  for (std::uint64_t t = 1; t <= T; ++t) {
    const SparseUpdate v = sampler.next(inputs);
    const int sign = signer.step(v);
    if (signs_out) signs_out->push_back(sign);
    result.record(t, signer.state().linf_norm(), signer.state().phi());
  }
  result.finish();
  signer.state().d.for_each([&](CoordId i, double x) {
    if (x != 0.0) result.final_d.push_back({i, x});
  });
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace obal
