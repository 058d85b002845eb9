#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cortical/errors.hpp"

namespace cortical {

/// Square grayscale raster, row-major. Index i runs along x, j along y, with
/// unit pixel pitch. Values are nominally in [0, 1] but intermediate results
/// (reconstructions) may leave that range; only finiteness is enforced.
class ImageGrid {
public:
  ImageGrid() = default;

  explicit ImageGrid(std::size_t n, double fill = 0.0) : n_(n), values_(n * n, fill)
  {
    detail::require(n > 0, "ImageGrid: size must be > 0");
  }

  ImageGrid(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values))
  {
    detail::require(n > 0, "ImageGrid: size must be > 0");
    detail::require(values_.size() == n * n, "ImageGrid: expected " + std::to_string(n * n) + " values, got " +
                                                 std::to_string(values_.size()));
    for (double v : values_) detail::require(std::isfinite(v), "ImageGrid: values must be finite");
  }

  std::size_t size() const { return n_; }
  std::size_t pixel_count() const { return values_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Boolean per-pixel mask; true marks a corrupted pixel. Masks are square in
/// practice but the type only assumes n x n storage.
class PixelMask {
public:
  PixelMask() = default;
  explicit PixelMask(std::size_t n, bool fill = false) : n_(n), bits_(n * n, fill ? 1 : 0) {}

  std::size_t size() const { return n_; }

  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v = true) { bits_[i * n_ + j] = v ? 1 : 0; }
  bool at_index(std::size_t idx) const { return bits_[idx] != 0; }

  std::size_t count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }
  bool empty() const { return count() == 0; }
  bool full() const { return count() == bits_.size(); }

  /// Chebyshev (square) dilation by `radius` pixels.
  PixelMask dilated(int radius) const
  {
    detail::require(radius >= 0, "PixelMask::dilated: radius must be >= 0");
    if (radius == 0) return *this;
    const auto n = static_cast<long>(n_);
    // separable: rows then columns
    PixelMask rows(n_);
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        if (!(*this)(i, j)) continue;
        for (long d = std::max(0L, j - radius); d <= std::min(n - 1, j + radius); ++d) rows.set(i, d);
      }
    }
    PixelMask out(n_);
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        if (!rows(i, j)) continue;
        for (long d = std::max(0L, i - radius); d <= std::min(n - 1, i + radius); ++d) out.set(d, j);
      }
    }
    return out;
  }

  friend bool operator==(const PixelMask&, const PixelMask&) = default;

private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Root mean squared difference of a and b over the pixels where region is true.
inline double rmse_region(const ImageGrid& a, const ImageGrid& b, const PixelMask& region)
{
  detail::require(a.size() == b.size() && a.size() == region.size(), "rmse_region: dimension mismatch");
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t idx = 0; idx < a.pixel_count(); ++idx) {
    if (!region.at_index(idx)) continue;
    const double d = a.values()[idx] - b.values()[idx];
    sum += d * d;
    ++count;
  }
  detail::require(count > 0, "rmse_region: region is empty");
  return std::sqrt(sum / static_cast<double>(count));
}

struct AffineMap {
  double slope = 1;
  double intercept = 0;
  double operator()(double v) const { return slope * v + intercept; }
};

/// Least-squares slope/intercept mapping `source` onto `target` over the
/// pixels where `region` is true.
inline AffineMap fit_affine(const ImageGrid& source, const ImageGrid& target, const PixelMask& region)
{
  detail::require(source.size() == target.size() && source.size() == region.size(), "fit_affine: dimension mismatch");
  double n = 0, sx = 0, sy = 0;
  for (std::size_t idx = 0; idx < source.pixel_count(); ++idx) {
    if (!region.at_index(idx)) continue;
    n += 1;
    sx += source.values()[idx];
    sy += target.values()[idx];
  }
  detail::require(n > 0, "fit_affine: region is empty");
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t idx = 0; idx < source.pixel_count(); ++idx) {
    if (!region.at_index(idx)) continue;
    const double dx = source.values()[idx] - mx;
    sxx += dx * dx;
    sxy += dx * (target.values()[idx] - my);
  }
  AffineMap m;
  m.slope = sxx > 0 ? sxy / sxx : 0.0;
  m.intercept = my - m.slope * mx;
  return m;
}

inline ImageGrid apply_affine(const ImageGrid& img, const AffineMap& m)
{
  ImageGrid out = img;
  for (double& v : out.values()) v = m(v);
  return out;
}

/// Linear stretch of the image range onto [lo, hi]; constant images map to lo.
inline ImageGrid stretch_to_range(const ImageGrid& img, double lo, double hi)
{
  const auto [mn, mx] = std::minmax_element(img.values().begin(), img.values().end());
  const double span = *mx - *mn;
  AffineMap m;
  m.slope = span > 0 ? (hi - lo) / span : 0.0;
  m.intercept = lo - m.slope * *mn;
  return apply_affine(img, m);
}

} // namespace cortical
