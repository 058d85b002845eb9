#pragma once

// Built-in benchmark suites: stripe completion across an occluding bar and
// lift/inverse round trips on synthetic textures.

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cortical/diffusion.hpp"
#include "cortical/gabor.hpp"
#include "cortical/image.hpp"
#include "cortical/pipeline.hpp"
#include "cortical/synthetic.hpp"

namespace cortical::bench {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0;
  double threshold = 0;
  std::string relation;  // how value compares to threshold when passing
  double seconds = 0;
};

inline nlohmann::json to_json(const Check& c)
{
  return {{"name", c.name},
          {"passed", c.passed},
          {"value", c.value},
          {"threshold", c.threshold},
          {"relation", c.relation},
          {"seconds", c.seconds}};
}

struct StripeSetup {
  std::size_t n = 64;
  double period = 8;
  std::size_t bar_start = 28;
  std::size_t bar_width = 8;
  int orientations = 16;
  std::vector<double> frequencies = uniform_frequencies(0.4, 1.2, 6);
  int phases = 5;
  DiffusionMode mode = DiffusionMode::approximate;
  double dt = 0.1;
  double t_max = 10;
  int dilation = 2;
  int spline_degree = 3;
};

struct StripeOutcome {
  double rmse_corrupted = 0;
  double rmse_multi = 0;
  double rmse_single = 0;
  CompletionReport multi;
  CompletionReport single;
  double seconds_multi = 0;
  double seconds_single = 0;
};

inline CompletionRequest stripe_request(const StripeSetup& s, std::vector<double> freqs)
{
  const ImageGrid truth = synthetic::stripes(s.n, s.period);
  const PixelMask bar = synthetic::bar_mask(s.n, s.bar_start, s.bar_width);
  CompletionRequest req;
  req.image = synthetic::occlude(truth, bar, 0.0);
  req.mask = bar;
  req.gabor.orientations = s.orientations;
  req.gabor.frequencies = std::move(freqs);
  req.gabor.phases = s.phases;
  req.diffusion.mode = s.mode;
  req.diffusion.dt = s.dt;
  req.diffusion.t_max = s.t_max;
  req.diffusion.tol = 0;  // fixed final time T, as in the experiments
  req.diffusion.spline_degree = s.spline_degree;
  req.diffusion.set_betas(beta_coefficients(static_cast<long>(s.n), s.orientations, req.gabor.L(), s.phases));
  req.dilation = s.dilation;
  return req;
}

/// Multi-frequency completion and its single-frequency counterpart (L = 1 at
/// the stripe frequency).
inline StripeOutcome run_stripe(const StripeSetup& s)
{
  StripeOutcome out;
  const ImageGrid truth = synthetic::stripes(s.n, s.period);
  const auto time = [](auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  out.seconds_multi = time([&] { out.multi = complete_image(stripe_request(s, s.frequencies), truth); });
  out.seconds_single =
      time([&] { out.single = complete_image(stripe_request(s, {2 * std::numbers::pi / s.period}), truth); });
  out.rmse_corrupted = *out.multi.rmse_corrupted;
  out.rmse_multi = *out.multi.rmse_masked;
  out.rmse_single = *out.single.rmse_masked;
  return out;
}

inline std::vector<Check> stripe_checks(const StripeOutcome& o)
{
  return {
      {"stripe completion: masked RMSE < 0.5 x corrupted", o.rmse_multi < 0.5 * o.rmse_corrupted, o.rmse_multi,
       0.5 * o.rmse_corrupted, "<", o.seconds_multi},
      {"stripe completion: multi-frequency RMSE <= single-frequency", o.rmse_multi <= o.rmse_single, o.rmse_multi,
       o.rmse_single, "<=", o.seconds_single},
  };
}

struct RoundTripSetup {
  std::size_t n = 64;
  int orientations = 16;
  std::vector<double> frequencies = uniform_frequencies(0.5, 2.5, 6);
  int phases = 5;
  double tolerance = 0.05;
  std::uint64_t seed = 1;
};

/// Relative L2 error ||a I_T + b - I|| / ||I|| over the interior (support
/// radius away from the border), with (a, b) the least-squares affine fit.
inline double roundtrip_error(const ImageGrid& img, const GaborBank& bank)
{
  const ImageGrid rec = inverse_transform(lift(img, bank), bank);
  const std::size_t n = img.size();
  const auto r = static_cast<std::size_t>(bank.radius());
  PixelMask interior(n);
  for (std::size_t i = r; i < n - r; ++i) {
    for (std::size_t j = r; j < n - r; ++j) interior.set(i, j);
  }
  const ImageGrid fitted = apply_affine(rec, fit_affine(rec, img, interior));
  double num = 0, den = 0;
  for (std::size_t idx = 0; idx < n * n; ++idx) {
    if (!interior.at_index(idx)) continue;
    const double d = fitted.values()[idx] - img.values()[idx];
    num += d * d;
    den += img.values()[idx] * img.values()[idx];
  }
  return std::sqrt(num / den);
}

inline std::vector<Check> roundtrip_checks(const RoundTripSetup& s)
{
  GaborParams p;
  p.orientations = s.orientations;
  p.frequencies = s.frequencies;
  p.phases = s.phases;
  const GaborBank bank = make_bank(p);
  const std::vector<std::pair<std::string, ImageGrid>> crops = {
      {"wood", synthetic::wood(s.n)}, {"weave", synthetic::weave(s.n)}, {"natural", synthetic::natural(s.n, s.seed)}};
  std::vector<Check> checks;
  for (const auto& [name, img] : crops) {
    const auto t0 = std::chrono::steady_clock::now();
    const double err = roundtrip_error(img, bank);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    checks.push_back({"round trip (" + name + "): relative L2 error after affine fit", err <= s.tolerance, err,
                      s.tolerance, "<=", secs});
  }
  return checks;
}

} // namespace cortical::bench
