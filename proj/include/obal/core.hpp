#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace obal {

using CoordId = std::uint64_t;

struct Entry {
  CoordId coord;
  double value;
  friend bool operator==(const Entry&, const Entry&) = default;
};

/// One arriving vector, stored as (coordinate, value) pairs with increasing
/// coordinates. Zero values are allowed but count toward sparsity.
struct SparseUpdate {
  std::vector<Entry> entries;
  std::uint64_t dim = 0;

  std::size_t nnz() const noexcept { return entries.size(); }

  /// Throws DomainError / SparsityViolation on any broken invariant.
  void validate(std::uint64_t max_sparsity) const {
    if (entries.size() > max_sparsity) {
      throw SparsityViolation("update has " + std::to_string(entries.size()) + " entries, sparsity bound is " +
                              std::to_string(max_sparsity));
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (e.coord >= dim) throw DomainError("coordinate " + std::to_string(e.coord) + " >= dim " + std::to_string(dim));
      if (!(e.value >= -1.0 && e.value <= 1.0)) throw DomainError("value outside [-1,1]: " + std::to_string(e.value));
      if (i > 0 && entries[i - 1].coord >= e.coord) throw DomainError("coordinates not strictly increasing");
    }
  }

  SparseUpdate negated() const {
    SparseUpdate out = *this;
    for (auto& e : out.entries) e.value = -e.value;
    return out;
  }

  std::vector<double> to_dense() const {
    std::vector<double> out(dim, 0.0);
    for (const auto& e : entries) out[e.coord] = e.value;
    return out;
  }

  static SparseUpdate from_dense(const std::vector<double>& v, bool keep_zeros = false) {
    SparseUpdate u;
    u.dim = v.size();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (keep_zeros || v[i] != 0.0) u.entries.push_back({i, v[i]});
    }
    return u;
  }

  friend bool operator==(const SparseUpdate&, const SparseUpdate&) = default;
};

// ---------------------------------------------------------------------------
// Coordinate stores for the discrepancy vector.

class DenseStore {
 public:
  explicit DenseStore(std::uint64_t n) : values_(n, 0.0) {}
  double get(CoordId i) const { return values_[i]; }
  void add(CoordId i, double delta) { values_[i] += delta; }
  std::uint64_t dim() const noexcept { return values_.size(); }
  std::size_t touched() const noexcept { return values_.size(); }
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < values_.size(); ++i) f(CoordId{i}, values_[i]);
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// Hash-addressed store over a potentially huge coordinate space; only
/// coordinates that were ever updated are materialized.
class LazyStore {
 public:
  explicit LazyStore(std::uint64_t n, std::size_t touched_cap = std::size_t{1} << 26) : dim_(n), cap_(touched_cap) {}
  double get(CoordId i) const {
    auto it = values_.find(i);
    return it == values_.end() ? 0.0 : it->second;
  }
  void add(CoordId i, double delta) {
    auto [it, inserted] = values_.try_emplace(i, 0.0);
    if (inserted && values_.size() > cap_) {
      values_.erase(it);
      throw CapacityExceeded("lazy store: touched-coordinate count exceeds cap " + std::to_string(cap_));
    }
    it->second += delta;
  }
  std::uint64_t dim() const noexcept { return dim_; }
  std::size_t touched() const noexcept { return values_.size(); }
  template <class F>
  void for_each(F&& f) const {
    for (const auto& [k, v] : values_) f(k, v);
  }

 private:
  std::uint64_t dim_;
  std::size_t cap_;
  std::unordered_map<CoordId, double> values_;
};

/// Running max of |d(i)| under point updates.
class AbsMaxTracker {
 public:
  void replace(double old_value, double new_value) {
    if (old_value != 0.0) magnitudes_.erase(magnitudes_.find(std::abs(old_value)));
    if (new_value != 0.0) magnitudes_.insert(std::abs(new_value));
  }
  double max() const noexcept { return magnitudes_.empty() ? 0.0 : *magnitudes_.rbegin(); }

 private:
  std::multiset<double> magnitudes_;
};

/// Signed prefix sum d_t with its cosh potential.
///
/// `phi` is kept as (n + excess) where excess = sum_i (cosh(lambda d_i) - 1)
/// so untouched coordinates of a lazy store cost nothing.
template <class Store>
struct DiscrepancyState {
  Store d;
  std::uint64_t t = 0;
  double lambda = 1.0;
  double phi_excess = 0.0;
  AbsMaxTracker linf;

  DiscrepancyState(Store store, double lam) : d(std::move(store)), lambda(lam) {}

  std::uint64_t dim() const noexcept { return d.dim(); }
  double phi() const noexcept { return static_cast<double>(d.dim()) + phi_excess; }
  double linf_norm() const noexcept { return linf.max(); }

  /// d <- d + sign * v, updating phi and the running max over v's support only.
  void apply(const SparseUpdate& v, int sign) {
    for (const auto& e : v.entries) {
      const double before = d.get(e.coord);
      const double after = before + sign * e.value;
      phi_excess += (std::cosh(lambda * after) - 1.0) - (std::cosh(lambda * before) - 1.0);
      d.add(e.coord, sign * e.value);
      linf.replace(before, d.get(e.coord));
    }
    ++t;
  }

  /// Full recomputation of phi, for consistency checks.
  double recompute_phi() const {
    double excess = 0.0;
    d.for_each([&](CoordId, double x) { excess += std::cosh(lambda * x) - 1.0; });
    return static_cast<double>(d.dim()) + excess;
  }
};

// ---------------------------------------------------------------------------
// Hadamard (Sylvester) entries: H[r][c] = (-1)^{popcount(r & c)}.

inline int hadamard_entry(std::uint64_t row, std::uint64_t col) noexcept {
  return (std::popcount(row & col) & 1) ? -1 : 1;
}

inline bool is_power_of_two(std::uint64_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

// ---------------------------------------------------------------------------
// Distribution specs.

struct Atom {
  SparseUpdate update;
  double probability;
};

struct FiniteSupport {
  std::vector<Atom> atoms;
};
struct ProductUniformCube {};
struct UnitSphere {};
struct HadamardRows {};
struct FileStreamSource {
  std::string path;
};

using DistributionKind = std::variant<FiniteSupport, ProductUniformCube, UnitSphere, HadamardRows, FileStreamSource>;

struct DistributionSpec {
  DistributionKind kind;
  std::uint64_t dim = 0;
  std::uint64_t sparsity = 0;

  static DistributionSpec finite_support(std::uint64_t dim, std::vector<Atom> atoms) {
    std::uint64_t s = 1;
    for (const auto& a : atoms) s = std::max<std::uint64_t>(s, a.update.nnz());
    DistributionSpec spec{FiniteSupport{std::move(atoms)}, dim, s};
    spec.validate();
    return spec;
  }
  static DistributionSpec product_uniform_cube(std::uint64_t dim) {
    DistributionSpec spec{ProductUniformCube{}, dim, dim};
    spec.validate();
    return spec;
  }
  static DistributionSpec unit_sphere(std::uint64_t dim) {
    DistributionSpec spec{UnitSphere{}, dim, dim};
    spec.validate();
    return spec;
  }
  static DistributionSpec hadamard_rows(std::uint64_t dim) {
    DistributionSpec spec{HadamardRows{}, dim, dim};
    spec.validate();
    return spec;
  }
  static DistributionSpec file_stream(const std::string& path);

  bool is_finite() const noexcept {
    return std::holds_alternative<FiniteSupport>(kind) || std::holds_alternative<HadamardRows>(kind);
  }

  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, FiniteSupport>) return "finite-support";
          else if constexpr (std::is_same_v<K, ProductUniformCube>) return "product-uniform-cube";
          else if constexpr (std::is_same_v<K, UnitSphere>) return "unit-sphere";
          else if constexpr (std::is_same_v<K, HadamardRows>) return "hadamard-rows";
          else return "file-stream";
        },
        kind);
  }

  void validate() const {
    if (dim == 0) throw InvalidSpec("distribution dimension must be positive");
    if (sparsity == 0) throw InvalidSpec("sparsity must be positive");
    if (auto* fs = std::get_if<FiniteSupport>(&kind)) {
      if (fs->atoms.empty()) throw InvalidSpec("finite-support spec has no atoms");
      double total = 0.0;
      for (const auto& a : fs->atoms) {
        if (!(a.probability >= 0.0)) throw InvalidSpec("negative atom probability");
        if (a.update.dim != dim) throw InvalidSpec("atom dimension mismatch");
        a.update.validate(sparsity);
        total += a.probability;
      }
      if (std::abs(total - 1.0) > 1e-12) throw InvalidSpec("atom probabilities sum to " + std::to_string(total));
    } else if (std::holds_alternative<HadamardRows>(kind)) {
      if (!is_power_of_two(dim)) throw InvalidSpec("hadamard-rows dimension must be a power of two");
    }
  }

  /// Materializes the atoms of any finite spec (hadamard-rows becomes 2n signed rows).
  std::vector<Atom> atoms() const {
    if (auto* fs = std::get_if<FiniteSupport>(&kind)) return fs->atoms;
    if (std::holds_alternative<HadamardRows>(kind)) {
      std::vector<Atom> out;
      const double p = 1.0 / static_cast<double>(2 * dim);
      for (int xi : {1, -1}) {
        for (std::uint64_t r = 0; r < dim; ++r) {
          SparseUpdate u;
          u.dim = dim;
          for (std::uint64_t c = 0; c < dim; ++c) u.entries.push_back({c, double(xi * hadamard_entry(r, c))});
          out.push_back({std::move(u), p});
        }
      }
      return out;
    }
    throw UnsupportedMode("spec kind " + kind_name() + " has no finite support");
  }
};

// ---------------------------------------------------------------------------
// Stream file format:
//   dim=<n> sparsity=<s>
//   <coord>:<value> <coord>:<value> ...     (one update per line)
// Blank lines and lines starting with '#' are ignored.

struct StreamHeader {
  std::uint64_t dim = 0;
  std::uint64_t sparsity = 0;
};

namespace detail {

inline StreamHeader parse_stream_header(const std::string& line, std::size_t lineno) {
  StreamHeader h;
  std::istringstream in(line);
  std::string tok;
  bool have_dim = false, have_s = false;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw StreamFormatError(lineno, "expected key=value in header, got '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    std::uint64_t value = 0;
    try {
      std::size_t used = 0;
      value = std::stoull(tok.substr(eq + 1), &used);
      if (used != tok.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw StreamFormatError(lineno, "bad integer in header token '" + tok + "'");
    }
    if (key == "dim") h.dim = value, have_dim = true;
    else if (key == "sparsity") h.sparsity = value, have_s = true;
    else throw StreamFormatError(lineno, "unknown header key '" + key + "'");
  }
  if (!have_dim || !have_s) throw StreamFormatError(lineno, "header must declare dim= and sparsity=");
  if (h.dim == 0 || h.sparsity == 0) throw StreamFormatError(lineno, "dim and sparsity must be positive");
  return h;
}

inline SparseUpdate parse_stream_record(const std::string& line, std::size_t lineno, const StreamHeader& h) {
  SparseUpdate u;
  u.dim = h.dim;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    auto colon = tok.find(':');
    if (colon == std::string::npos) throw StreamFormatError(lineno, "expected coord:value, got '" + tok + "'");
    std::uint64_t coord = 0;
    double value = 0.0;
    try {
      std::size_t used = 0;
      coord = std::stoull(tok.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument("coord");
      const std::string vs = tok.substr(colon + 1);
      value = std::stod(vs, &used);
      if (used != vs.size()) throw std::invalid_argument("value");
    } catch (const std::exception&) {
      throw StreamFormatError(lineno, "malformed pair '" + tok + "'");
    }
    u.entries.push_back({coord, value});
  }
  try {
    u.validate(h.sparsity);
  } catch (const Error& e) {
    throw StreamFormatError(lineno, e.what());
  }
  return u;
}

inline bool skippable(const std::string& line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

}  // namespace detail

/// Sequential reader for stream files.
class StreamReader {
 public:
  explicit StreamReader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw StreamFormatError(0, "cannot open " + path);
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (detail::skippable(line)) continue;
      header_ = detail::parse_stream_header(line, lineno_);
      return;
    }
    throw StreamFormatError(lineno_, "missing header line in " + path);
  }

  const StreamHeader& header() const noexcept { return header_; }

  /// Next update; throws StreamFormatError when the file is exhausted.
  SparseUpdate next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (detail::skippable(line)) continue;
      return detail::parse_stream_record(line, lineno_, header_);
    }
    throw StreamFormatError(lineno_, "stream exhausted in " + path_);
  }

 private:
  std::ifstream in_;
  std::string path_;
  StreamHeader header_;
  std::size_t lineno_ = 0;
};

inline std::vector<SparseUpdate> read_stream_file(const std::string& path, StreamHeader* header_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw StreamFormatError(0, "cannot open " + path);
  std::vector<SparseUpdate> out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<StreamHeader> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    if (!header) header = detail::parse_stream_header(line, lineno);
    else out.push_back(detail::parse_stream_record(line, lineno, *header));
  }
  if (!header) throw StreamFormatError(lineno, "missing header line in " + path);
  if (header_out) *header_out = *header;
  return out;
}

inline void write_stream(std::ostream& out, const StreamHeader& h, const std::vector<SparseUpdate>& updates) {
  out << "dim=" << h.dim << " sparsity=" << h.sparsity << '\n';
  out.precision(17);
  for (const auto& u : updates) {
    for (std::size_t i = 0; i < u.entries.size(); ++i) {
      if (i) out << ' ';
      out << u.entries[i].coord << ':' << u.entries[i].value;
    }
    out << '\n';
  }
}

inline DistributionSpec DistributionSpec::file_stream(const std::string& path) {
  StreamReader reader(path);
  DistributionSpec spec{FileStreamSource{path}, reader.header().dim, reader.header().sparsity};
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Sampling.

/// Draws updates from a spec. Holds the open reader for file streams; all
/// other kinds are stateless and draw only from the supplied generator.
class Sampler {
 public:
  explicit Sampler(DistributionSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (auto* fs = std::get_if<FiniteSupport>(&spec_.kind)) {
      cumulative_.reserve(fs->atoms.size());
      double acc = 0.0;
      for (const auto& a : fs->atoms) cumulative_.push_back(acc += a.probability);
    } else if (auto* f = std::get_if<FileStreamSource>(&spec_.kind)) {
      reader_ = std::make_unique<StreamReader>(f->path);
    }
  }

  const DistributionSpec& spec() const noexcept { return spec_; }

  /// True when draws do not depend on anything but the generator state.
  bool is_iid() const noexcept { return !reader_; }

  SparseUpdate next(SeededRng& rng) {
    const std::uint64_t n = spec_.dim;
    return std::visit(
        [&](const auto& k) -> SparseUpdate {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, FiniteSupport>) {
            const double u = rng.uniform() * cumulative_.back();
            auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
            std::size_t idx = std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1);
            while (k.atoms[idx].probability == 0.0 && idx > 0) --idx;
            return k.atoms[idx].update;
          } else if constexpr (std::is_same_v<K, ProductUniformCube>) {
            SparseUpdate u;
            u.dim = n;
            for (std::uint64_t i = 0; i < n; ++i) u.entries.push_back({i, rng.uniform()});
            return u;
          } else if constexpr (std::is_same_v<K, UnitSphere>) {
            std::vector<double> g(n);
            double norm2 = 0.0;
            do {
              norm2 = 0.0;
              for (auto& x : g) {
                x = rng.gaussian();
                norm2 += x * x;
              }
            } while (norm2 == 0.0);
            const double inv = 1.0 / std::sqrt(norm2);
            SparseUpdate u;
            u.dim = n;
            for (std::uint64_t i = 0; i < n; ++i) u.entries.push_back({i, g[i] * inv});
            return u;
          } else if constexpr (std::is_same_v<K, HadamardRows>) {
            const std::uint64_t row = rng.below(n);
            const int xi = rng.sign();
            SparseUpdate u;
            u.dim = n;
            for (std::uint64_t c = 0; c < n; ++c) u.entries.push_back({c, double(xi * hadamard_entry(row, c))});
            return u;
          } else {
            SparseUpdate u = reader_->next();
            if (u.dim != n) throw StreamFormatError(0, "record dimension mismatch");
            return u;
          }
        },
        spec_.kind);
  }

 private:
  DistributionSpec spec_;
  std::vector<double> cumulative_;
  std::unique_ptr<StreamReader> reader_;
};

/// One draw from a stateless spec.
inline SparseUpdate sample(const DistributionSpec& spec, SeededRng& rng) {
  if (std::holds_alternative<FileStreamSource>(spec.kind)) {
    throw UnsupportedMode("sample(): file streams need a Sampler that owns the reader");
  }
  Sampler s(spec);
  return s.next(rng);
}

/// Returns u or -u with probability 1/2 each.
inline SparseUpdate rademacher_symmetrize(const SparseUpdate& u, SeededRng& rng) {
  return rng.sign() > 0 ? u : u.negated();
}

}  // namespace obal
