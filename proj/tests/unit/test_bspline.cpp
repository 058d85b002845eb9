#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cortical/bspline.hpp"

using namespace cortical;

namespace {

std::vector<double> sampled(std::size_t n, auto&& fn)
{
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) v[i * n + j] = fn(static_cast<double>(i), static_cast<double>(j));
  }
  return v;
}

} // namespace

TEST(BSpline, InterpolatesGridValues)
{
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t n = 17;
  std::vector<double> v(n * n);
  for (auto& x : v) x = u(rng);
  for (int degree : {1, 3}) {
    const BSplineSurface<double> sp(SquareView<double>{v, n}, degree);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_NEAR(sp.sample(static_cast<double>(i), static_cast<double>(j)), v[i * n + j], 1e-12);
      }
    }
  }
}

TEST(BSpline, BilinearReproducesLinearFunction)
{
  const auto v = sampled(8, [](double x, double y) { return 2 * x + 3 * y; });
  EXPECT_NEAR(bspline_sample(SquareView<double>{v, 8}, 0.5, 0.25, 1), 1.75, 1e-14);
}

TEST(BSpline, CubicReproducesLinearFunctionAwayFromBorder)
{
  const std::size_t n = 81;
  const double c = 40;
  const auto v = sampled(n, [&](double x, double y) { return 2 * (x - c) + 3 * (y - c); });
  EXPECT_NEAR(bspline_sample(SquareView<double>{v, n}, c + 0.5, c + 0.25, 3), 1.75, 1e-12);
}

TEST(BSpline, CubicReproducesQuadraticAwayFromBorder)
{
  const std::size_t n = 81;
  const double c = 40;
  const auto v = sampled(n, [&](double x, double) { return (x - c) * (x - c); });
  EXPECT_NEAR(bspline_sample(SquareView<double>{v, n}, c + 0.5, c, 3), 0.25, 1e-12);
  EXPECT_NEAR(bspline_sample(SquareView<double>{v, n}, c - 0.3, c + 0.7, 3), 0.09, 1e-12);
}

TEST(BSpline, TapsSampleMatchesPointSample)
{
  const std::size_t n = 20;
  const auto v = sampled(n, [](double x, double y) { return std::sin(0.4 * x) * std::cos(0.3 * y); });
  const BSplineSurface<double> sp(SquareView<double>{v, n}, 3);
  const double ox = std::cos(0.7), oy = std::sin(0.7);
  const SplineTaps taps = sp.taps_for(ox, oy);
  for (int i = 2; i < 17; i += 3) {
    for (int j = 2; j < 17; j += 4) EXPECT_NEAR(sp.sample(taps, i, j), sp.sample(i + ox, j + oy), 1e-13);
  }
}

TEST(BSpline, OutOfDomainThrows)
{
  const auto v = sampled(6, [](double x, double y) { return x + y; });
  const BSplineSurface<double> sp(SquareView<double>{v, 6}, 3);
  EXPECT_NO_THROW(sp.sample(-1.0, 6.0));
  EXPECT_THROW(sp.sample(-1.01, 0.0), std::out_of_range);
  EXPECT_THROW(sp.sample(0.0, 6.5), std::out_of_range);
  EXPECT_THROW(sp.sample(NAN, 0.0), std::out_of_range);
  EXPECT_THROW(BSplineSurface<double>(SquareView<double>{v, 6}, 2), ValidationError);
}
