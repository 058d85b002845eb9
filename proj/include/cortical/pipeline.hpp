#pragma once

// End-to-end completion: lift -> diffuse inside the corrupted region ->
// reconstruct -> affine fit on known pixels -> composite with the input.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cortical/diffusion.hpp"
#include "cortical/errors.hpp"
#include "cortical/gabor.hpp"
#include "cortical/image.hpp"

namespace cortical {

struct OutputPolicy {
  double clamp_lo = 0.0;
  double clamp_hi = 1.0;
  int blend_band = 2;  // pixels inside the mask border over which the seam correction fades
};

struct CompletionRequest {
  ImageGrid image;
  PixelMask mask;
  GaborParams gabor;
  DiffusionConfig diffusion;
  int dilation = 2;
  OutputPolicy output;
  TransformMethod transform = TransformMethod::automatic;

  void validate() const
  {
    detail::require(image.size() > 0, "CompletionRequest: empty image");
    detail::require(mask.size() == image.size(),
                    "CompletionRequest: mask is " + std::to_string(mask.size()) + "x" + std::to_string(mask.size()) +
                        " but image is " + std::to_string(image.size()) + "x" + std::to_string(image.size()));
    detail::require(!mask.full(), "CompletionRequest: mask covers every pixel; nothing to complete from");
    detail::require(dilation >= 0, "CompletionRequest: dilation must be >= 0");
    detail::require(output.clamp_lo < output.clamp_hi, "CompletionRequest: clamp range is empty");
    detail::require(output.blend_band >= 0, "CompletionRequest: blend band must be >= 0");
    gabor.validate();
    diffusion.validate();
  }
};

struct StageTimes {
  double lift_ms = 0;
  double diffusion_ms = 0;
  double reconstruct_ms = 0;
  double total_ms = 0;
};

struct CompletionReport {
  ImageGrid completed;       // input outside the mask, fitted reconstruction inside
  ImageGrid reconstruction;  // affine-fitted reconstruction over the whole plane
  AffineMap fit;
  bool projected = false;    // single-frequency projection instead of the inverse transform
  DiffusionStats diffusion;
  StageTimes timings;
  std::optional<double> rmse_masked;     // completed vs ground truth inside the mask
  std::optional<double> rmse_corrupted;  // input vs ground truth inside the mask
};

namespace detail {

using clock = std::chrono::steady_clock;

inline double ms_since(clock::time_point t0)
{
  return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
}

inline PixelMask complement(const PixelMask& m)
{
  PixelMask out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) out.set(i, j, !m(i, j));
  }
  return out;
}

} // namespace detail

/// Composite of `input` (outside the mask) and `fitted` (inside). Masked pixels
/// within `band` of a known pixel (Chebyshev distance d) are shifted by
/// (1 - d / (band + 1)) times the mean residual input - fitted over the known
/// pixels in their (2 band + 1)^2 window, so the seam fades out over the band.
inline ImageGrid composite(const ImageGrid& input, const ImageGrid& fitted, const PixelMask& mask,
                           const OutputPolicy& policy)
{
  detail::require(input.size() == fitted.size() && input.size() == mask.size(), "composite: dimension mismatch");
  const auto n = static_cast<long>(input.size());
  const long band = policy.blend_band;
  ImageGrid out = input;
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      if (!mask(i, j)) continue;
      double v = fitted(i, j);
      if (band > 0) {
        long dmin = band + 1;
        double rsum = 0;
        long rcount = 0;
        for (long a = std::max(0L, i - band); a <= std::min(n - 1, i + band); ++a) {
          for (long b = std::max(0L, j - band); b <= std::min(n - 1, j + band); ++b) {
            if (mask(a, b)) continue;
            dmin = std::min(dmin, std::max(std::abs(a - i), std::abs(b - j)));
            rsum += input(a, b) - fitted(a, b);
            ++rcount;
          }
        }
        if (rcount > 0) {
          const double w = 1.0 - static_cast<double>(dmin) / static_cast<double>(band + 1);
          v += w * rsum / static_cast<double>(rcount);
        }
      }
      out(i, j) = std::clamp(v, policy.clamp_lo, policy.clamp_hi);
    }
  }
  return out;
}

inline CompletionReport complete_image(const CompletionRequest& req,
                                       const std::optional<ImageGrid>& ground_truth = std::nullopt,
                                       const IterationObserver& observer = {})
{
  req.validate();
  if (ground_truth) {
    detail::require(ground_truth->size() == req.image.size(), "complete_image: ground truth size mismatch");
  }
  const auto t_start = detail::clock::now();
  CompletionReport report;

  auto t0 = detail::clock::now();
  const GaborBank bank = make_bank(req.gabor);
  const ResponseVolume lifted = lift(req.image, bank, req.transform);
  report.timings.lift_ms = detail::ms_since(t0);

  t0 = detail::clock::now();
  const LiftedMask region(req.mask, req.dilation);
  DiffusionResult evolved = run_diffusion(lifted, region, req.diffusion, observer);
  report.diffusion = std::move(evolved.stats);
  report.timings.diffusion_ms = detail::ms_since(t0);

  t0 = detail::clock::now();
  report.projected = req.gabor.L() == 1;
  const ImageGrid raw =
      report.projected ? project_sum(evolved.state.u) : inverse_transform(evolved.state.u, bank, req.transform);
  const PixelMask known = detail::complement(req.mask);
  report.fit = fit_affine(raw, req.image, known);
  report.reconstruction = apply_affine(raw, report.fit);
  report.completed = composite(req.image, report.reconstruction, req.mask, req.output);
  report.timings.reconstruct_ms = detail::ms_since(t0);
  report.timings.total_ms = detail::ms_since(t_start);

  if (ground_truth && !req.mask.empty()) {
    report.rmse_masked = rmse_region(report.completed, *ground_truth, req.mask);
    report.rmse_corrupted = rmse_region(req.image, *ground_truth, req.mask);
  }
  return report;
}

// --- JSON ----------------------------------------------------------------------

/// Single-line diffusion record: iterations, final_rel_change, dt, mode, wall_ms.
inline nlohmann::json to_json(const DiffusionStats& s)
{
  return {{"iterations", s.iterations},
          {"final_rel_change", s.final_rel_change},
          {"dt", s.dt},
          {"mode", to_string(s.mode)},
          {"wall_ms", s.wall_ms}};
}

inline nlohmann::json to_json(const CompletionReport& r, const CompletionRequest& req)
{
  nlohmann::json j;
  j["size"] = req.image.size();
  j["masked_pixels"] = req.mask.count();
  j["parameters"] = {{"sigma", req.gabor.sigma},
                     {"orientations", req.gabor.K()},
                     {"frequencies", req.gabor.frequencies},
                     {"phases", req.gabor.M()},
                     {"phase_step", req.gabor.phase_step},
                     {"support_radius", req.gabor.radius()},
                     {"beta2", req.diffusion.beta2},
                     {"beta3", req.diffusion.beta3},
                     {"beta4", req.diffusion.beta4},
                     {"dt", req.diffusion.dt},
                     {"t_max", req.diffusion.t_max},
                     {"tol", req.diffusion.tol},
                     {"spline_degree", req.diffusion.spline_degree},
                     {"dilation", req.dilation}};
  j["mode"] = to_string(r.diffusion.mode);
  j["stencil"] = to_string(r.diffusion.stencil);
  j["reconstruction"] = r.projected ? "projection" : "inverse";
  j["iterations"] = r.diffusion.iterations;
  j["final_rel_change"] = r.diffusion.final_rel_change;
  j["converged"] = r.diffusion.converged;
  j["stability_bound"] = r.diffusion.stability_bound;
  j["diffusion"] = to_json(r.diffusion);
  j["affine"] = {{"slope", r.fit.slope}, {"intercept", r.fit.intercept}};
  j["wall_ms"] = {{"lift", r.timings.lift_ms},
                  {"diffusion", r.timings.diffusion_ms},
                  {"reconstruct", r.timings.reconstruct_ms},
                  {"total", r.timings.total_ms}};
  if (r.rmse_masked) j["rmse_masked"] = *r.rmse_masked;
  if (r.rmse_corrupted) j["rmse_corrupted"] = *r.rmse_corrupted;
  j["warnings"] = r.diffusion.warnings;
  return j;
}

} // namespace cortical
