#pragma once

// Synthetic test images and masks for benchmarks and experiments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "cortical/fft.hpp"
#include "cortical/image.hpp"

namespace cortical::synthetic {

/// 0.5 + 0.5 cos(f (-sin th x + cos th y) + phase): stripes running along
/// (cos th, sin th), i.e. the grating matched by the orientation-th atoms.
inline ImageGrid grating(std::size_t n, double f, double theta = 0.0, double phase = 0.0)
{
  ImageGrid img(n);
  const double rx = -f * std::sin(theta);
  const double ry = f * std::cos(theta);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) img(i, j) = 0.5 + 0.5 * std::cos(rx * i + ry * j + phase);
  }
  return img;
}

/// Stripes of the given period (pixels) running along x.
inline ImageGrid stripes(std::size_t n, double period) { return grating(n, 2 * std::numbers::pi / period); }

/// Wood-like rings with a slow warp.
inline ImageGrid wood(std::size_t n)
{
  ImageGrid img(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = static_cast<double>(i), y = static_cast<double>(j);
      const double r = std::hypot(x + 20.0, y - 10.0);
      img(i, j) = 0.5 + 0.5 * std::sin(0.9 * r + 0.5 * std::sin(0.3 * y));
    }
  }
  return img;
}

/// Two superposed oblique cosines, a woven look.
inline ImageGrid weave(std::size_t n)
{
  ImageGrid img(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = static_cast<double>(i), y = static_cast<double>(j);
      img(i, j) = 0.5 + 0.25 * std::cos(0.7 * x) + 0.25 * std::cos(1.1 * y + 0.3 * x);
    }
  }
  return img;
}

/// Seeded 1/f noise with a Gaussian high-frequency roll-off, min-max scaled to [0, 1].
inline ImageGrid natural(std::size_t n, std::uint64_t seed = 1)
{
  const int p = static_cast<int>(n);
  fft::Buffer buf(n * n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  for (std::size_t idx = 0; idx < n * n; ++idx) buf[idx] = gauss(rng);
  fft::Plan2D plan(p);
  plan.forward(buf);
  const auto freq = [&](std::size_t q) {
    const double k = q <= n / 2 ? static_cast<double>(q) : static_cast<double>(q) - static_cast<double>(n);
    return 2 * std::numbers::pi * k / static_cast<double>(n);
  };
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      double k = std::hypot(freq(a), freq(b));
      if (a == 0 && b == 0) k = 1.0;
      buf[a * n + b] *= std::exp(-(k / 1.5) * (k / 1.5)) / k;
    }
  }
  plan.backward(buf);
  ImageGrid img(n);
  for (std::size_t idx = 0; idx < n * n; ++idx) img.values()[idx] = buf[idx].real();
  return stretch_to_range(img, 0.0, 1.0);
}

/// Concentric rings around (cx, cy) with angular frequency f.
inline ImageGrid rings(std::size_t n, double cx, double cy, double f)
{
  ImageGrid img(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) img(i, j) = 0.5 + 0.5 * std::cos(f * std::hypot(i - cx, j - cy));
  }
  return img;
}

/// Arcs around (cx, cy) whose local angular frequency grows linearly from f0
/// at the centre to f1 at distance `r_max`.
inline ImageGrid chirp_arcs(std::size_t n, double cx, double cy, double f0, double f1, double r_max)
{
  ImageGrid img(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double r = std::hypot(i - cx, j - cy);
      img(i, j) = 0.5 + 0.5 * std::sin(f0 * r + 0.5 * (f1 - f0) * r * r / r_max);
    }
  }
  return img;
}

/// Rings of the given width around (cx, cy), one per radius.
inline PixelMask ring_mask(std::size_t n, double cx, double cy, const std::vector<double>& radii, double width)
{
  PixelMask m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double r = std::hypot(i - cx, j - cy);
      for (double r0 : radii) {
        if (r >= r0 && r < r0 + width) m.set(i, j);
      }
    }
  }
  return m;
}

/// Pixels with value set to `fill` wherever `mask` is true.
inline ImageGrid occlude(const ImageGrid& img, const PixelMask& mask, double fill = 0.0)
{
  ImageGrid out = img;
  for (std::size_t i = 0; i < img.size(); ++i) {
    for (std::size_t j = 0; j < img.size(); ++j) {
      if (mask(i, j)) out(i, j) = fill;
    }
  }
  return out;
}

/// Band of `width` rows i in [start, start + width) across the full image
/// (columns j instead when `rows` is false).
inline PixelMask bar_mask(std::size_t n, std::size_t start, std::size_t width, bool rows = true)
{
  PixelMask m(n);
  for (std::size_t a = start; a < std::min(n, start + width); ++a) {
    for (std::size_t b = 0; b < n; ++b) rows ? m.set(a, b) : m.set(b, a);
  }
  return m;
}

/// A horizontal and a vertical bar of the given width crossing at the centre.
inline PixelMask crossing_bars_mask(std::size_t n, std::size_t width)
{
  const std::size_t start = (n - width) / 2;
  PixelMask m = bar_mask(n, start, width, true);
  const PixelMask v = bar_mask(n, start, width, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (v(i, j)) m.set(i, j);
    }
  }
  return m;
}

/// Annular sector around (cx, cy): radii [r_in, r_out], angles [a0, a1] (radians).
inline PixelMask arc_mask(std::size_t n, double cx, double cy, double r_in, double r_out, double a0, double a1)
{
  PixelMask m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = i - cx, dy = j - cy;
      const double r = std::hypot(dx, dy);
      const double a = std::atan2(dy, dx);
      if (r >= r_in && r <= r_out && a >= a0 && a <= a1) m.set(i, j);
    }
  }
  return m;
}

} // namespace cortical::synthetic
