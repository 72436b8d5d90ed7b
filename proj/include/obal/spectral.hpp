#pragma once

// Vector balancing under arbitrary (correlated) input distributions.
//
// Inputs are symmetrized with a Rademacher coin, mapped into an orthonormal
// eigenbasis U of P = E[v v^T] and scaled, w = U^T v / sqrt(n). Coordinates
// of w are uncorrelated and |w|_inf <= 1, so the cosh signer applies with
// sparsity n. Discrepancy is tracked in both bases.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <vector>

#include "core.hpp"
#include "result.hpp"
#include "signer.hpp"

namespace obal::spectral {

/// Dense row-major matrix; small n only.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend Matrix operator*(const Matrix& x, const Matrix& y) {
    Matrix out(x.rows_, y.cols_);
    for (std::size_t i = 0; i < x.rows_; ++i)
      for (std::size_t k = 0; k < x.cols_; ++k) {
        const double xik = x(i, k);
        for (std::size_t j = 0; j < y.cols_; ++j) out(i, j) += xik * y(k, j);
      }
    return out;
  }

  friend Matrix operator-(Matrix x, const Matrix& y) {
    for (std::size_t i = 0; i < x.a_.size(); ++i) x.a_[i] -= y.a_[i];
    return x;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

  double max_abs_off_diagonal() const {
    double m = 0.0;
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c)
        if (r != c) m = std::max(m, std::abs((*this)(r, c)));
    return m;
  }

  void write_csv(std::ostream& out) const {
    const auto old = out.precision(17);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) out << (c ? "," : "") << (*this)(r, c);
      out << '\n';
    }
    out.precision(old);
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

enum class CovarianceSource { Exact, Sampled };

struct CovarianceEstimate {
  Matrix P;
  CovarianceSource source = CovarianceSource::Exact;
  std::uint64_t sample_count = 0;
};

struct CovarianceMode {
  CovarianceSource source = CovarianceSource::Exact;
  std::uint64_t samples = 0;  // 0 selects max(10^4, 100 n^2)

  static CovarianceMode exact() { return {CovarianceSource::Exact, 0}; }
  static CovarianceMode sampled(std::uint64_t n = 0) { return {CovarianceSource::Sampled, n}; }
};

inline std::uint64_t default_covariance_samples(std::uint64_t n) {
  return std::max<std::uint64_t>(10000, 100 * n * n);
}

inline void add_outer(Matrix& P, const SparseUpdate& v, double weight) {
  for (const auto& a : v.entries)
    for (const auto& b : v.entries) P(a.coord, b.coord) += weight * a.value * b.value;
}

/// P = E[v v^T]. Exact mode sums over the atoms of a finite spec;
/// symmetrization leaves v v^T unchanged so it is not applied.
inline CovarianceEstimate estimate_covariance(const DistributionSpec& spec, CovarianceMode mode, SeededRng rng) {
  const std::size_t n = spec.dim;
  CovarianceEstimate est{Matrix(n, n), mode.source, 0};
  if (mode.source == CovarianceSource::Exact) {
    if (!spec.is_finite()) {
      throw UnsupportedMode("estimate_covariance: exact mode needs a finite-support spec, got " + spec.kind_name());
    }
    for (const auto& atom : spec.atoms()) add_outer(est.P, atom.update, atom.probability);
  } else {
    const std::uint64_t N = mode.samples ? mode.samples : default_covariance_samples(n);
    Sampler sampler(spec);
    for (std::uint64_t k = 0; k < N; ++k) add_outer(est.P, sampler.next(rng), 1.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) est.P(r, c) /= static_cast<double>(N);
    est.sample_count = N;
  }
  // exact symmetry
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c) est.P(c, r) = est.P(r, c) = 0.5 * (est.P(r, c) + est.P(c, r));
  return est;
}

struct EigenBasis {
  Matrix U;                         // columns are eigenvectors
  std::vector<double> eigenvalues;  // descending
};

inline constexpr int kJacobiMaxSweeps = 100;

/// Cyclic Jacobi diagonalization of a symmetric matrix, driven until the
/// largest off-diagonal entry is <= 1e-10 * max|P|.
inline EigenBasis eigendecompose(const Matrix& P) {
  const std::size_t n = P.rows();
  if (P.cols() != n) throw NumericError("eigendecompose: matrix is not square");
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c)
      if (std::abs(P(r, c) - P(c, r)) > 1e-12 * std::max(1.0, P.max_abs()))
        throw NumericError("eigendecompose: matrix is not symmetric");

  Matrix A = P;
  Matrix V = Matrix::identity(n);
  const double scale = P.max_abs();
  const double target = 1e-10 * scale;
  int sweep = 0;
  while (A.max_abs_off_diagonal() > target) {
    if (++sweep > kJacobiMaxSweeps) throw NumericError("eigendecompose: no convergence after sweep limit");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        A(p, q) = A(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return A(a, a) > A(b, b); });
  EigenBasis out{Matrix(n, n), {}};
  for (std::size_t c = 0; c < n; ++c) {
    out.eigenvalues.push_back(A(order[c], order[c]));
    for (std::size_t r = 0; r < n; ++r) out.U(r, c) = V(r, order[c]);
  }
  return out;
}

/// Balances in the eigenbasis and mirrors every step in the original basis.
class SpectralBalancer {
 public:
  SpectralBalancer(EigenBasis basis, Algorithm algorithm, SeededRng rng)
      : basis_(std::move(basis)),
        n_(basis_.U.rows()),
        scale_(1.0 / std::sqrt(static_cast<double>(n_))),
        coins_(rng.fork(stream_tag::kSymmetrize)),
        signer_(DenseStore(n_), SignerConfig::for_sparsity(n_, n_), algorithm, rng.fork(stream_tag::kBaseline)),
        original_(n_, 0.0) {}

  /// Signs one raw arrival; returns the sign actually applied to `v`
  /// (signer's choice times the symmetrization coin).
  int step(const std::vector<double>& v) {
    if (v.size() != n_) throw DomainError("spectral: update dimension mismatch");
    const int coin = coins_.sign();
    SparseUpdate w;
    w.dim = n_;
    for (std::size_t k = 0; k < n_; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_; ++i) acc += basis_.U(i, k) * v[i];
      acc *= coin * scale_;
      if (std::abs(acc) > 1.0 + 1e-9) throw InvariantViolation("spectral: |w|_inf exceeds 1 at step " + std::to_string(t_ + 1));
      w.entries.push_back({k, std::clamp(acc, -1.0, 1.0)});
    }
    const int chi = signer_.step(w);
    const int applied = chi * coin;
    original_linf_ = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      original_[i] += applied * v[i];
      original_linf_ = std::max(original_linf_, std::abs(original_[i]));
    }
    ++t_;
    return applied;
  }

  const std::vector<double>& original() const noexcept { return original_; }
  double original_linf() const noexcept { return original_linf_; }
  const DiscrepancyState<DenseStore>& eigen_state() const noexcept { return signer_.state(); }
  const EigenBasis& basis() const noexcept { return basis_; }
  std::uint64_t steps() const noexcept { return t_; }

 private:
  EigenBasis basis_;
  std::size_t n_;
  double scale_;
  SeededRng coins_;
  OnlineSigner<DenseStore> signer_;
  std::vector<double> original_;
  double original_linf_ = 0.0;
  std::uint64_t t_ = 0;
};

struct GeneralRun {
  RunResult original;  // |d_t|_inf in the input basis; phi is the eigenbasis potential
  RunResult eigen;     // |U^T d_t / sqrt(n)|_inf as seen by the signer
  EigenBasis basis;
  CovarianceEstimate covariance;
  std::vector<int> signs;
  std::vector<double> final_original;
};

struct GeneralOptions {
  Algorithm algorithm = Algorithm::Cosh;
  CovarianceMode covariance = CovarianceMode::exact();
  std::uint64_t stride = 1;
};

/// Full pipeline: covariance -> eigenbasis -> signed stream of length T.
inline GeneralRun balance_general(const DistributionSpec& spec, std::uint64_t T, const SeededRng& rng,
                                  GeneralOptions opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  GeneralRun run;
  run.covariance = estimate_covariance(spec, opts.covariance, rng.fork(stream_tag::kCovariance));
  run.basis = eigendecompose(run.covariance.P);
  SpectralBalancer balancer(run.basis, opts.algorithm, rng);
  Sampler sampler(spec);
  SeededRng inputs = rng.fork(stream_tag::kInput);
  for (auto* r : {&run.original, &run.eigen}) {
    r->algorithm = algorithm_name(opts.algorithm);
    r->seed = rng.seed();
    r->stride = opts.stride;
  }
  for (std::uint64_t t = 1; t <= T; ++t) {
    const std::vector<double> v = sampler.next(inputs).to_dense();
    run.signs.push_back(balancer.step(v));
    const auto& st = balancer.eigen_state();
    run.original.record(t, balancer.original_linf(), st.phi());
    run.eigen.record(t, st.linf_norm(), st.phi());
  }
  run.original.finish();
  run.eigen.finish();
  run.final_original = balancer.original();
  for (std::size_t i = 0; i < run.final_original.size(); ++i)
    if (run.final_original[i] != 0.0) run.original.final_d.push_back({i, run.final_original[i]});
  run.original.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace obal::spectral
