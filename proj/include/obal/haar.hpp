#pragma once

// Unnormalized Haar system on [0,1] and its d-fold tensor product.
//
//   psi_{0,0}(x) = 1
//   psi_{j,k}(x) = psi(2^{j-1} x - k),  j >= 1, 0 <= k < 2^{j-1}
//   psi(y)       = +1 on [0,1/2), -1 on [1/2,1), 0 elsewhere
//
// Every quantity here is dyadic, so values and coefficients are exact doubles
// for scales up to ~50 and are compared with ==.

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <vector>

#include "errors.hpp"

namespace obal::haar {

struct HaarIndex {
  int scale = 0;
  std::uint64_t shift = 0;

  bool valid() const noexcept {
    if (scale < 0 || scale > 62) return false;
    if (scale == 0) return shift == 0;
    return shift < (std::uint64_t{1} << (scale - 1));
  }

  friend auto operator<=>(const HaarIndex&, const HaarIndex&) = default;
};

/// Position of `h` in the standard ordering: 0 for psi_{0,0}, 2^{j-1}+k otherwise.
/// Indices of scale <= L occupy exactly [0, 2^L).
constexpr std::uint64_t flat_id(HaarIndex h) noexcept {
  return h.scale == 0 ? 0 : (std::uint64_t{1} << (h.scale - 1)) + h.shift;
}

constexpr HaarIndex from_flat(std::uint64_t id) noexcept {
  if (id == 0) return {0, 0};
  const int top = 63 - std::countl_zero(id);
  return {top + 1, id - (std::uint64_t{1} << top)};
}

/// Number of 1-D wavelets with scale <= max_scale.
constexpr std::uint64_t basis_size(int max_scale) noexcept { return std::uint64_t{1} << max_scale; }

namespace detail {
inline void check_point(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("haar: point outside [0,1]");
}
}  // namespace detail

/// psi_h(x). x = 1 is treated as lying in the last dyadic cell of every scale.
inline int eval(HaarIndex h, double x) {
  detail::check_point(x);
  if (h.scale == 0) return 1;
  if (x == 1.0) x = 1.0 - std::ldexp(1.0, -(h.scale + 1));
  const double y = std::ldexp(x, h.scale - 1) - static_cast<double>(h.shift);
  if (y >= 0.0 && y < 0.5) return 1;
  if (y >= 0.5 && y < 1.0) return -1;
  return 0;
}

/// The unique wavelet of scale j >= 1 that is nonzero at x, and its value.
struct ScaleHit {
  HaarIndex index;
  int value;
};

inline ScaleHit hit_at_scale(int scale, double x) {
  detail::check_point(x);
  if (scale == 0) return {{0, 0}, 1};
  if (x == 1.0) x = 1.0 - std::ldexp(1.0, -(scale + 1));
  // cell of width 2^{-scale}; its parent (width 2^{-(scale-1)}) is the support
  const auto cell = static_cast<std::uint64_t>(std::ldexp(x, scale));
  return {{scale, cell >> 1}, (cell & 1) ? -1 : 1};
}

/// All nonzero wavelets at x with scale <= max_scale, scale ascending.
inline std::vector<ScaleHit> hits(double x, int max_scale) {
  std::vector<ScaleHit> out;
  out.reserve(max_scale + 1);
  for (int j = 0; j <= max_scale; ++j) out.push_back(hit_at_scale(j, x));
  return out;
}

/// E_x[psi_h(x)^2] for x uniform on [0,1].
inline double second_moment(HaarIndex h) { return h.scale == 0 ? 1.0 : std::ldexp(1.0, -(h.scale - 1)); }

/// Exact integral of psi_a * psi_b over [0,1], summed over the grid of cells
/// of width 2^{-max(scale)} on which both are constant.
inline double inner_product(HaarIndex a, HaarIndex b) {
  const int res = std::max({a.scale, b.scale, 1});
  const std::uint64_t cells = std::uint64_t{1} << res;
  const double width = std::ldexp(1.0, -res);
  double total = 0.0;
  for (std::uint64_t c = 0; c < cells; ++c) {
    const double mid = (static_cast<double>(c) + 0.5) * width;
    total += eval(a, mid) * eval(b, mid) * width;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Dyadic intervals and boxes.

struct DyadicInterval {
  int level = 0;
  std::uint64_t index = 0;

  bool valid() const noexcept { return level >= 0 && level <= 62 && index < (std::uint64_t{1} << level); }
  double lo() const { return std::ldexp(static_cast<double>(index), -level); }
  double hi() const { return std::ldexp(static_cast<double>(index + 1), -level); }
  /// Half-open membership; x = 1 belongs to the last interval of each level.
  bool contains(double x) const {
    if (x == 1.0) return index + 1 == (std::uint64_t{1} << level);
    return x >= lo() && x < hi();
  }
  friend auto operator<=>(const DyadicInterval&, const DyadicInterval&) = default;
};

/// The dyadic interval of `level` containing x.
inline DyadicInterval interval_containing(double x, int level) {
  detail::check_point(x);
  const std::uint64_t last = (std::uint64_t{1} << level) - 1;
  const auto idx = static_cast<std::uint64_t>(std::ldexp(x, level));
  return {level, std::min(idx, last)};
}

struct DyadicBox {
  std::vector<DyadicInterval> axes;

  std::size_t dim() const noexcept { return axes.size(); }
  bool valid() const {
    if (axes.empty()) return false;
    for (const auto& a : axes) {
      if (!a.valid()) return false;
    }
    return true;
  }
  bool contains(const double* point) const {
    for (std::size_t i = 0; i < axes.size(); ++i) {
      if (!axes[i].contains(point[i])) return false;
    }
    return true;
  }
};

using CoefficientMap = std::map<HaarIndex, double>;

/// Haar coefficients of the indicator of I: coeff(h) = E[1_I h] / E[h^2].
/// Nonzero only for scales <= I.level: 2^{-l} at scale 0 and
/// +-2^{j-1-l} for the single wavelet of scale j whose support contains I.
inline CoefficientMap interval_coefficients(DyadicInterval interval, int max_scale) {
  if (!interval.valid()) throw DomainError("haar: invalid dyadic interval");
  if (max_scale < interval.level) throw DomainError("haar: max_scale below interval level");
  const int l = interval.level;
  CoefficientMap out;
  out.emplace(HaarIndex{0, 0}, std::ldexp(1.0, -l));
  for (int j = 1; j <= l; ++j) {
    const std::uint64_t shift = interval.index >> (l - j + 1);
    const bool right_half = (interval.index >> (l - j)) & 1;
    out.emplace(HaarIndex{j, shift}, (right_half ? -1.0 : 1.0) * std::ldexp(1.0, j - 1 - l));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tensor products.

struct TensorHaarIndex {
  std::vector<HaarIndex> parts;
  friend auto operator<=>(const TensorHaarIndex&, const TensorHaarIndex&) = default;
};

inline int eval(const TensorHaarIndex& h, const double* point) {
  int v = 1;
  for (std::size_t i = 0; i < h.parts.size() && v != 0; ++i) v *= eval(h.parts[i], point[i]);
  return v;
}

inline double second_moment(const TensorHaarIndex& h) {
  double m = 1.0;
  for (const auto& p : h.parts) m *= second_moment(p);
  return m;
}

/// Mixed-radix id with base 2^max_scale per axis, axis 0 least significant.
inline std::uint64_t tensor_flat_id(const TensorHaarIndex& h, int max_scale) {
  std::uint64_t id = 0;
  for (std::size_t i = h.parts.size(); i-- > 0;) id = (id << max_scale) | flat_id(h.parts[i]);
  return id;
}

inline TensorHaarIndex tensor_from_flat(std::uint64_t id, std::size_t d, int max_scale) {
  TensorHaarIndex h;
  const std::uint64_t mask = basis_size(max_scale) - 1;
  for (std::size_t i = 0; i < d; ++i) {
    h.parts.push_back(from_flat(id & mask));
    id >>= max_scale;
  }
  return h;
}

using TensorCoefficientMap = std::map<TensorHaarIndex, double>;

inline TensorCoefficientMap box_coefficients(const DyadicBox& box, int max_scale) {
  if (!box.valid()) throw DomainError("haar: invalid dyadic box");
  TensorCoefficientMap out;
  out.emplace(TensorHaarIndex{}, 1.0);
  for (const auto& axis : box.axes) {
    const auto axis_coeffs = interval_coefficients(axis, max_scale);
    TensorCoefficientMap next;
    for (const auto& [idx, c] : out) {
      for (const auto& [h, a] : axis_coeffs) {
        TensorHaarIndex grown = idx;
        grown.parts.push_back(h);
        next.emplace(std::move(grown), c * a);
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace obal::haar
