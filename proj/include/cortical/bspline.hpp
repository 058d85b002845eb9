#pragma once

// Interpolating B-spline surfaces (degree 1 or 3) over square 2D slices, with
// replicate padding outside the grid. Degree 3 uses the recursive prefilter of
// Unser/Thevenaz so the spline passes through the samples.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cortical/errors.hpp"

namespace cortical {

/// Read-only view of an n x n row-major slice.
template <class T>
struct SquareView {
  std::span<const T> data;
  std::size_t n = 0;

  T operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

namespace detail {

// In-place cubic B-spline prefilter of a strided 1D sequence with
// whole-sample mirror boundaries.
template <class T>
void cubic_prefilter_line(T* c, std::size_t len, std::size_t stride)
{
  if (len < 2) return;
  const double z = std::sqrt(3.0) - 2.0;
  const double lambda = (1.0 - z) * (1.0 - 1.0 / z);
  auto at = [&](std::size_t k) -> T& { return c[k * stride]; };

  for (std::size_t k = 0; k < len; ++k) at(k) *= lambda;

  // causal initialization, exact for mirror boundaries
  {
    double zn = z;
    const double iz = 1.0 / z;
    double z2n = std::pow(z, static_cast<double>(len - 1));
    T sum = at(0) + z2n * at(len - 1);
    z2n *= z2n * iz;
    for (std::size_t k = 1; k + 1 < len; ++k) {
      sum += (zn + z2n) * at(k);
      zn *= z;
      z2n *= iz;
    }
    at(0) = sum / (1.0 - zn * zn);
  }
  for (std::size_t k = 1; k < len; ++k) at(k) += z * at(k - 1);

  at(len - 1) = (z / (z * z - 1.0)) * (z * at(len - 2) + at(len - 1));
  for (std::size_t k = len - 1; k-- > 0;) at(k) = z * (at(k + 1) - at(k));
}

inline std::array<double, 4> cubic_weights(double t)
{
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double u = 1.0 - t;
  return {u * u * u / 6.0, (3 * t3 - 6 * t2 + 4) / 6.0, (-3 * t3 + 3 * t2 + 3 * t + 1) / 6.0, t3 / 6.0};
}

} // namespace detail

/// Tap pattern for reading the spline at (i + ox, j + oy) for integer (i, j)
/// and a fixed offset. Precomputing it once per offset keeps the inner stencil
/// loop free of transcendental calls.
struct SplineTaps {
  int i0 = 0;
  int j0 = 0;
  int count = 0;
  std::array<double, 4> wx{};
  std::array<double, 4> wy{};
};

inline SplineTaps spline_taps(double ox, double oy, int degree)
{
  SplineTaps t;
  const double fx = std::floor(ox);
  const double fy = std::floor(oy);
  const double tx = ox - fx;
  const double ty = oy - fy;
  if (degree == 3) {
    t.count = 4;
    t.i0 = static_cast<int>(fx) - 1;
    t.j0 = static_cast<int>(fy) - 1;
    t.wx = detail::cubic_weights(tx);
    t.wy = detail::cubic_weights(ty);
  } else {
    t.count = 2;
    t.i0 = static_cast<int>(fx);
    t.j0 = static_cast<int>(fy);
    t.wx = {1 - tx, tx, 0, 0};
    t.wy = {1 - ty, ty, 0, 0};
  }
  return t;
}

template <class T>
class BSplineSurface {
public:
  /// Reads are accepted within `margin` pixels outside [0, n-1].
  static constexpr int margin = 1;

  BSplineSurface() = default;

  BSplineSurface(SquareView<T> slice, int degree) { rebuild(slice, degree); }

  /// Re-fits the spline to new samples, reusing storage.
  void rebuild(SquareView<T> slice, int degree)
  {
    detail::require(degree == 1 || degree == 3, "BSplineSurface: degree must be 1 or 3, got " + std::to_string(degree));
    detail::require(slice.n > 0 && slice.data.size() == slice.n * slice.n, "BSplineSurface: slice is not n x n");
    degree_ = degree;
    n_ = static_cast<int>(slice.n);
    width_ = static_cast<std::size_t>(n_ + 2 * pad);
    coef_.resize(width_ * width_);

    for (std::size_t r = 0; r < width_; ++r) {
      const std::size_t si = clamp_index(static_cast<int>(r) - pad);
      for (std::size_t c = 0; c < width_; ++c) {
        coef_[r * width_ + c] = slice(si, clamp_index(static_cast<int>(c) - pad));
      }
    }
    if (degree_ == 3) {
      for (std::size_t r = 0; r < width_; ++r) detail::cubic_prefilter_line(coef_.data() + r * width_, width_, 1);
      for (std::size_t c = 0; c < width_; ++c) detail::cubic_prefilter_line(coef_.data() + c, width_, width_);
    }
  }

  int degree() const { return degree_; }
  int size() const { return n_; }

  SplineTaps taps_for(double ox, double oy) const { return spline_taps(ox, oy, degree_); }

  /// Spline value at (i + ox, j + oy) where `taps` came from taps_for(ox, oy).
  /// Requires |ox|, |oy| <= margin.
  T sample(const SplineTaps& taps, int i, int j) const
  {
    const T* base = coef_.data() + static_cast<std::size_t>(i + taps.i0 + pad) * width_ +
                    static_cast<std::size_t>(j + taps.j0 + pad);
    T acc{};
    for (int a = 0; a < taps.count; ++a) {
      const T* row = base + static_cast<std::size_t>(a) * width_;
      T racc{};
      for (int b = 0; b < taps.count; ++b) racc += taps.wy[static_cast<std::size_t>(b)] * row[b];
      acc += taps.wx[static_cast<std::size_t>(a)] * racc;
    }
    return acc;
  }

  /// Spline value at an arbitrary point of the padded domain.
  T sample(double x, double y) const
  {
    const double lo = -margin;
    const double hi = n_ - 1 + margin;
    if (!(x >= lo && x <= hi && y >= lo && y <= hi)) {
      throw std::out_of_range("BSplineSurface::sample: (" + std::to_string(x) + ", " + std::to_string(y) +
                              ") lies outside the padded domain");
    }
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const SplineTaps taps = taps_for(x - fx, y - fy);
    return sample(taps, static_cast<int>(fx), static_cast<int>(fy));
  }

private:
  // Replicated border width; covers cubic taps of reads up to `margin` outside.
  static constexpr int pad = margin + 2;

  std::size_t clamp_index(int v) const { return static_cast<std::size_t>(v < 0 ? 0 : (v >= n_ ? n_ - 1 : v)); }

  int degree_ = 3;
  int n_ = 0;
  std::size_t width_ = 0;
  std::vector<T> coef_;
};

/// One-shot evaluation of the interpolating spline of `slice` at (x, y).
template <class T>
T bspline_sample(SquareView<T> slice, double x, double y, int degree)
{
  return BSplineSurface<T>(slice, degree).sample(x, y);
}

} // namespace cortical
