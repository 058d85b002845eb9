#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "cortical/pipeline.hpp"
#include "cortical/synthetic.hpp"

using namespace cortical;

namespace {

CompletionRequest small_request(const ImageGrid& truth, const PixelMask& mask)
{
  CompletionRequest req;
  req.image = synthetic::occlude(truth, mask, 0.0);
  req.mask = mask;
  req.gabor.orientations = 8;
  req.gabor.frequencies = {0.6, 1.0, 1.4};
  req.gabor.phases = 3;
  req.diffusion.set_betas(beta_coefficients(static_cast<long>(truth.size()), 8, 3, 3));
  req.diffusion.t_max = 1.0;
  req.diffusion.tol = 0;
  return req;
}

} // namespace

TEST(Pipeline, EmptyMaskReturnsInputVerbatim)
{
  const ImageGrid img = synthetic::weave(24);
  CompletionRequest req = small_request(img, PixelMask(24));
  const CompletionReport r = complete_image(req, img);
  EXPECT_EQ(r.completed, img);
  EXPECT_FALSE(r.rmse_masked.has_value());
}

TEST(Pipeline, KnownPixelsAreNeverTouched)
{
  const ImageGrid truth = synthetic::wood(32);
  const PixelMask mask = synthetic::bar_mask(32, 13, 5);
  CompletionRequest req = small_request(truth, mask);
  req.diffusion.mode = DiffusionMode::exact;
  const CompletionReport r = complete_image(req, truth);
  for (std::size_t i = 0; i < 32; ++i) {
    for (std::size_t j = 0; j < 32; ++j) {
      if (!mask(i, j)) {
        ASSERT_EQ(r.completed(i, j), req.image(i, j));
      } else {
        ASSERT_GE(r.completed(i, j), 0.0);
        ASSERT_LE(r.completed(i, j), 1.0);
      }
    }
  }
  ASSERT_TRUE(r.rmse_masked.has_value());
  EXPECT_DOUBLE_EQ(*r.rmse_corrupted, rmse_region(req.image, truth, mask));
  EXPECT_EQ(r.diffusion.iterations, 10u);
  EXPECT_FALSE(r.projected);
}

TEST(Pipeline, Deterministic)
{
  const ImageGrid truth = synthetic::natural(32, 4);
  const PixelMask mask = synthetic::crossing_bars_mask(32, 4);
  const CompletionRequest req = small_request(truth, mask);
  const CompletionReport a = complete_image(req);
  const CompletionReport b = complete_image(req);
  EXPECT_EQ(a.completed, b.completed);
  EXPECT_EQ(a.reconstruction, b.reconstruction);
}

TEST(Pipeline, StagesComposeAsTheirParts)
{
  // one diffusion step, then reconstruct and composite by hand
  const ImageGrid truth = synthetic::weave(32);
  const PixelMask mask = synthetic::bar_mask(32, 14, 4);
  CompletionRequest req = small_request(truth, mask);
  req.diffusion.tol = std::numeric_limits<double>::infinity();
  const CompletionReport r = complete_image(req);
  EXPECT_EQ(r.diffusion.iterations, 1u);

  const GaborBank bank = make_bank(req.gabor);
  const ResponseVolume lifted = lift(req.image, bank);
  const EvolvingVolume stepped = diffusion_step({lifted, 0, 0}, lifted, LiftedMask(mask, req.dilation), req.diffusion);
  const ImageGrid raw = inverse_transform(stepped.u, bank);
  PixelMask known(32);
  for (std::size_t i = 0; i < 32; ++i) {
    for (std::size_t j = 0; j < 32; ++j) known.set(i, j, !mask(i, j));
  }
  const AffineMap fit = fit_affine(raw, req.image, known);
  const ImageGrid expected = composite(req.image, apply_affine(raw, fit), mask, req.output);
  for (std::size_t q = 0; q < expected.pixel_count(); ++q) {
    EXPECT_NEAR(r.completed.values()[q], expected.values()[q], 1e-12);
  }

  // pure round trip differs from the one-step result only near the mask
  const ImageGrid round = inverse_transform(lifted, bank);
  const PixelMask reach = mask.dilated(req.dilation + bank.radius());
  for (std::size_t i = 0; i < 32; ++i) {
    for (std::size_t j = 0; j < 32; ++j) {
      if (!reach(i, j)) EXPECT_NEAR(raw(i, j), round(i, j), 1e-12);
    }
  }
}

TEST(Pipeline, SingleFrequencyUsesProjection)
{
  const ImageGrid truth = synthetic::stripes(32, 8);
  const PixelMask mask = synthetic::bar_mask(32, 14, 4);
  CompletionRequest req = small_request(truth, mask);
  req.gabor.frequencies = {2 * std::numbers::pi / 8};
  const CompletionReport r = complete_image(req, truth);
  EXPECT_TRUE(r.projected);
  EXPECT_LT(*r.rmse_masked, *r.rmse_corrupted);
}

TEST(Pipeline, RejectsInvalidRequests)
{
  const ImageGrid img(24, 0.5);
  CompletionRequest req = small_request(img, PixelMask(24, true));
  EXPECT_THROW(complete_image(req), ValidationError);
  req = small_request(img, PixelMask(20));
  req.image = img;
  EXPECT_THROW(complete_image(req), ValidationError);
  req = small_request(img, synthetic::bar_mask(24, 2, 20));
  EXPECT_THROW(complete_image(req), ValidationError);  // dilated mask covers everything
}

TEST(Composite, FadesTheSeamResidual)
{
  const std::size_t n = 12;
  const ImageGrid input(n, 0.6);
  const ImageGrid fitted(n, 0.5);
  const PixelMask mask = synthetic::bar_mask(n, 3, 6);
  const ImageGrid out = composite(input, fitted, mask, OutputPolicy{});
  // band 2: distance 1 -> 2/3 of the residual, distance 2 -> 1/3, beyond -> none
  EXPECT_NEAR(out(3, 5), 0.5 + 0.1 * 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(out(4, 5), 0.5 + 0.1 / 3.0, 1e-12);
  EXPECT_NEAR(out(5, 5), 0.5, 1e-12);
  EXPECT_EQ(out(0, 0), 0.6);
  const ImageGrid hard = composite(input, fitted, mask, OutputPolicy{0, 1, 0});
  EXPECT_EQ(hard(3, 5), 0.5);
  const ImageGrid clamped = composite(input, ImageGrid(n, 7.0), mask, OutputPolicy{0, 1, 0});
  EXPECT_EQ(clamped(5, 5), 1.0);
}

TEST(Report, JsonCarriesStatsAndParameters)
{
  const ImageGrid truth = synthetic::weave(24);
  const PixelMask mask = synthetic::bar_mask(24, 10, 3);
  CompletionRequest req = small_request(truth, mask);
  req.diffusion.mode = DiffusionMode::exact;
  req.diffusion.stencil = StencilVariant::paper_literal;
  const CompletionReport r = complete_image(req, truth);
  const auto j = to_json(r, req);
  EXPECT_EQ(j["mode"], "exact");
  EXPECT_EQ(j["stencil"], "paper-literal");
  EXPECT_EQ(j["diffusion"]["iterations"], 10);
  EXPECT_TRUE(j["diffusion"].contains("final_rel_change"));
  EXPECT_TRUE(j["diffusion"].contains("wall_ms"));
  EXPECT_EQ(j["parameters"]["orientations"], 8);
  EXPECT_TRUE(j.contains("rmse_masked"));
}
