// cortical_figures: regenerates the occluded-arc and crossing-bar completion
// experiments at 128 x 128 and writes before/after panels as PNG files.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cortical/cortical.hpp"

namespace {

using namespace cortical;
namespace fs = std::filesystem;

struct Experiment {
  std::string name;
  ImageGrid truth;
  PixelMask mask;
  std::vector<double> freqs;
  DiffusionMode mode;
  double t_max;
};

/// Side-by-side panel of equally sized tiles with 4 px white gaps.
Raster8 panel(const std::vector<const ImageGrid*>& tiles)
{
  const std::size_t n = tiles.front()->size();
  const std::size_t gap = 4;
  const std::size_t w = tiles.size() * n + (tiles.size() - 1) * gap;
  Raster8 r{w, n, std::vector<std::uint8_t>(w * n, 255)};
  for (std::size_t t = 0; t < tiles.size(); ++t) {
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) r.pixels[y * w + t * (n + gap) + x] = quantize_8bit((*tiles[t])(x, y));
    }
  }
  return r;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Regenerate the completion figure experiments at 128x128"};
  app.option_defaults()->always_capture_default();
  std::string out_dir = "figures";
  bool quick = false;
  bool with_exact = true;
  app.add_option("--out-dir,-o", out_dir, "Directory for the PNG panels and summary.json");
  app.add_flag("--quick", quick, "64x64 images and T/4, for smoke testing");
  app.add_flag("!--no-exact", with_exact, "Skip the exact-mode runs");
  CLI11_PARSE(app, argc, argv);

  const std::size_t n = quick ? 64 : 128;
  const double time_scale = quick ? 0.25 : 1.0;
  fs::create_directories(out_dir);

  const auto wood_freqs = uniform_frequencies(2.0, 8.0, 12);
  const auto texture_freqs = uniform_frequencies(1.0, 4.0, 12);
  const double nd = static_cast<double>(n);

  // chirped arcs around the top-left corner occluded by rings around the top-right one
  const ImageGrid arcs = synthetic::chirp_arcs(n, 0, 0, 0.3, 1.6, nd * std::numbers::sqrt2);
  const PixelMask arc_rings = synthetic::ring_mask(n, nd - 1, 0, {0.3 * nd, 0.55 * nd, 0.8 * nd}, nd / 32);
  const ImageGrid texture = synthetic::wood(n);
  const PixelMask texture_arcs = synthetic::ring_mask(n, nd - 1, 0, {0.35 * nd, 0.7 * nd}, nd / 21);
  const PixelMask bars = synthetic::crossing_bars_mask(n, n / 16);

  std::vector<Experiment> runs;
  for (DiffusionMode mode : {DiffusionMode::approximate, DiffusionMode::exact}) {
    if (mode == DiffusionMode::exact && !with_exact) continue;
    const std::string tag = mode == DiffusionMode::exact ? "exact" : "approx";
    runs.push_back({"arcs_chirp_" + tag, arcs, arc_rings, wood_freqs, mode, 10});
    runs.push_back({"texture_arcs_" + tag, texture, texture_arcs, texture_freqs, mode, 10});
    runs.push_back({"texture_bars_" + tag, texture, bars, texture_freqs, mode, 15});
  }
  for (double f : {texture_freqs[0], texture_freqs[1], texture_freqs[3]}) {
    runs.push_back({"texture_arcs_single_f" + std::to_string(f).substr(0, 4), texture, texture_arcs, {f},
                    DiffusionMode::approximate, 10});
  }

  nlohmann::json summary = nlohmann::json::array();
  for (const auto& e : runs) {
    CompletionRequest req;
    req.image = synthetic::occlude(e.truth, e.mask, 0.0);
    req.mask = e.mask;
    req.gabor.frequencies = e.freqs;
    req.diffusion.mode = e.mode;
    req.diffusion.t_max = e.t_max * time_scale;
    req.diffusion.tol = 0;
    req.diffusion.set_betas(beta_coefficients(static_cast<long>(n), req.gabor.K(), req.gabor.L(), req.gabor.M()));
    std::cerr << e.name << ": " << req.gabor.channel_count() << " channels, T=" << req.diffusion.t_max << " ... "
              << std::flush;
    const CompletionReport r = complete_image(req, e.truth);
    std::cerr << r.timings.total_ms / 1000 << " s, masked RMSE " << *r.rmse_masked << " (occluded "
              << *r.rmse_corrupted << ")\n";
    write_raster(panel({&e.truth, &req.image, &r.completed}), fs::path(out_dir) / (e.name + ".png"));
    summary.push_back({{"name", e.name},
                       {"mode", to_string(e.mode)},
                       {"frequencies", e.freqs},
                       {"t_max", req.diffusion.t_max},
                       {"rmse_masked", *r.rmse_masked},
                       {"rmse_occluded", *r.rmse_corrupted},
                       {"seconds", r.timings.total_ms / 1000}});
  }
  std::ofstream(fs::path(out_dir) / "summary.json") << summary.dump(2) << "\n";
  std::cout << summary.dump() << std::endl;
  return 0;
}
