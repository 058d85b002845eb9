// cortical_inpaint: completion, lifting, inversion, curve fans and benchmarks
// from the command line. Human-readable messages go to stderr, JSON to stdout.

#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cortical/cortical.hpp"

namespace {

using namespace cortical;
namespace fs = std::filesystem;

constexpr int exit_ok = 0;
constexpr int exit_validation = 1;
constexpr int exit_numerical = 2;

/// Error tied to a command-line flag or file; the message names it.
struct FlagError : ValidationError {
  FlagError(const std::string& flag, const std::string& msg) : ValidationError(flag + ": " + msg) {}
};

std::vector<double> split_doubles(const std::string& text, char sep, const std::string& flag)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw FlagError(flag, "cannot parse number '" + item + "' in '" + text + "'");
    }
  }
  return out;
}

/// "min:max:count" (evenly spaced, inclusive) or an explicit comma list.
std::vector<double> parse_frequencies(const std::string& text, const std::string& flag = "--freqs")
{
  if (text.find(':') != std::string::npos) {
    const auto parts = split_doubles(text, ':', flag);
    if (parts.size() != 3) throw FlagError(flag, "expected min:max:count, got '" + text + "'");
    const double count = parts[2];
    if (count < 1 || count != std::floor(count)) throw FlagError(flag, "count must be a positive integer");
    if (count > 1 && !(parts[1] > parts[0])) throw FlagError(flag, "max must exceed min");
    return uniform_frequencies(parts[0], parts[1], static_cast<int>(count));
  }
  auto list = split_doubles(text, ',', flag);
  if (list.empty()) throw FlagError(flag, "empty frequency list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!(list[i] > 0)) throw FlagError(flag, "frequencies must be > 0");
    if (i > 0 && !(list[i] > list[i - 1])) throw FlagError(flag, "frequencies must be strictly increasing");
  }
  return list;
}

struct GaborFlags {
  double sigma = 2.0;
  int orientations = 32;
  std::string freqs = "2:8:12";
  int phases = 5;
  double phase_step = std::numbers::pi / 8;
  int support_radius = 0;
  std::string transform = "auto";

  void add(CLI::App* app)
  {
    app->add_option("--sigma", sigma, "Gaussian scale of the Gabor atoms (pixels)")->check(CLI::PositiveNumber);
    app->add_option("--orientations,-K", orientations, "Orientation samples over [0, pi)")
        ->check(CLI::Range(2, 1 << 16));
    app->add_option("--freqs", freqs, "Frequencies in rad/pixel: min:max:count or a comma list");
    app->add_option("--phases,-M", phases, "Phase samples")->check(CLI::Range(1, 1 << 16));
    app->add_option("--phase-step", phase_step, "Phase spacing (radians)")->check(CLI::PositiveNumber);
    app->add_option("--support-radius", support_radius, "Atom half-width in pixels (0 = ceil(3 sigma))")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--transform", transform, "Lift/inverse method")
        ->check(CLI::IsMember({"auto", "direct", "fft"}));
  }

  GaborParams params() const
  {
    GaborParams p;
    p.sigma = sigma;
    p.orientations = orientations;
    p.frequencies = parse_frequencies(freqs);
    p.phases = phases;
    p.phase_step = phase_step;
    p.support_radius = support_radius;
    const int min_radius = static_cast<int>(std::ceil(3 * sigma - 1e-12));
    if (support_radius != 0 && support_radius < min_radius) {
      throw FlagError("--support-radius", "must be >= ceil(3 sigma) = " + std::to_string(min_radius));
    }
    for (double f : p.frequencies) {
      if (f > std::numbers::pi) {
        std::cerr << "warning: --freqs contains " << f << " > pi rad/pixel; it aliases on the pixel grid\n";
        break;
      }
    }
    p.validate();
    return p;
  }

  TransformMethod method() const
  {
    if (transform == "direct") return TransformMethod::direct;
    if (transform == "fft") return TransformMethod::fft;
    return TransformMethod::automatic;
  }
};

struct DiffusionFlags {
  std::string mode = "approx";
  std::optional<double> beta2, beta3, beta4;
  double dt = 0.1;
  double tmax = 10;
  double tol = 1e-4;
  int spline_degree = 3;
  std::string stencil = "analytic";
  int dilation = 2;

  void add(CLI::App* app)
  {
    app->add_option("--mode", mode, "Diffusion operator")
        ->check(CLI::IsMember({"approx", "approximate", "exact"}));
    app->add_option("--beta2", beta2, "Weight of X2 (default K/(N sqrt 2))")->check(CLI::NonNegativeNumber);
    app->add_option("--beta3", beta3, "Weight of X3 (default L/(N sqrt 2))")->check(CLI::NonNegativeNumber);
    app->add_option("--beta4", beta4, "Weight of X4 (default M/(N sqrt 2))")->check(CLI::NonNegativeNumber);
    app->add_option("--dt", dt, "Forward-Euler time step")->check(CLI::PositiveNumber);
    app->add_option("--tmax", tmax, "Final diffusion time T")->check(CLI::PositiveNumber);
    app->add_option("--tol", tol, "Relative-change stopping threshold (0 disables)")->check(CLI::NonNegativeNumber);
    app->add_option("--spline-degree", spline_degree, "B-spline degree for off-grid reads")
        ->check(CLI::IsMember({1, 3}));
    app->add_option("--stencil", stencil, "X3X3 discretization")->check(CLI::IsMember({"analytic", "paper-literal"}));
    app->add_option("--dilation", dilation, "Mask dilation in pixels defining the diffused region")
        ->check(CLI::NonNegativeNumber);
  }

  DiffusionConfig config(std::size_t n, const GaborParams& g) const
  {
    if (dt > tmax) throw FlagError("--dt", "must not exceed --tmax");
    DiffusionConfig c;
    c.mode = mode == "exact" ? DiffusionMode::exact : DiffusionMode::approximate;
    const Betas b = beta_coefficients(static_cast<long>(n), g.K(), g.L(), g.M());
    c.beta2 = beta2.value_or(b.beta2);
    c.beta3 = beta3.value_or(b.beta3);
    c.beta4 = beta4.value_or(b.beta4);
    c.dt = dt;
    c.t_max = tmax;
    c.tol = tol;
    c.spline_degree = spline_degree;
    c.stencil = stencil == "paper-literal" ? StencilVariant::paper_literal : StencilVariant::analytic;
    c.validate();
    return c;
  }
};

ImageGrid read_image_flag(const std::string& path, const std::string& flag, bool luma)
{
  if (!fs::exists(path)) throw FlagError(flag, "file not found: " + path);
  return load_image(path, LoadOptions{luma});
}

void write_json(const nlohmann::json& j, const std::string& path)
{
  std::cout << j.dump() << std::endl;
  if (!path.empty()) {
    std::ofstream out(path);
    if (!out) throw FlagError("--report", "cannot write " + path);
    out << j.dump(2) << "\n";
  }
}

int run_complete(const std::string& input, const std::string& mask_path, const std::string& out,
                 const std::string& truth_path, const std::string& report_path, bool luma, const GaborFlags& gf,
                 const DiffusionFlags& df)
{
  CompletionRequest req;
  req.image = read_image_flag(input, "--input", luma);
  if (!fs::exists(mask_path)) throw FlagError("--mask", "file not found: " + mask_path);
  req.mask = load_mask(mask_path, LoadOptions{luma});
  if (req.mask.size() != req.image.size()) {
    throw FlagError("--mask", mask_path + " is " + std::to_string(req.mask.size()) + "x" +
                                  std::to_string(req.mask.size()) + " but --input " + input + " is " +
                                  std::to_string(req.image.size()) + "x" + std::to_string(req.image.size()) +
                                  " (dimension mismatch)");
  }
  if (req.mask.full()) throw FlagError("--mask", mask_path + " marks every pixel as corrupted");
  req.gabor = gf.params();
  if (req.image.size() <= 2 * static_cast<std::size_t>(req.gabor.radius())) {
    throw FlagError("--input", input + " is too small for support radius " + std::to_string(req.gabor.radius()));
  }
  req.diffusion = df.config(req.image.size(), req.gabor);
  req.dilation = df.dilation;
  req.transform = gf.method();
  if (req.mask.dilated(req.dilation).full()) {
    throw FlagError("--dilation", "the dilated mask covers every pixel; reduce --dilation");
  }

  std::optional<ImageGrid> truth;
  if (!truth_path.empty()) {
    truth = read_image_flag(truth_path, "--ground-truth", luma);
    if (truth->size() != req.image.size()) throw FlagError("--ground-truth", truth_path + " size differs from --input");
  }

  std::cerr << "completing " << input << " (" << req.image.size() << "x" << req.image.size() << ", "
            << req.mask.count() << " masked pixels, " << req.gabor.channel_count() << " channels, "
            << to_string(req.diffusion.mode) << " mode, " << to_string(req.diffusion.stencil) << " stencil)\n";
  const CompletionReport report = complete_image(req, truth);
  for (const auto& w : report.diffusion.warnings) std::cerr << "warning: " << w << "\n";
  save_image(report.completed, out);
  std::cerr << "wrote " << out << " after " << report.diffusion.iterations << " iterations ("
            << (report.diffusion.converged ? "converged" : "reached --tmax") << ")\n";

  nlohmann::json j = to_json(report, req);
  j["output"] = out;
  write_json(j, report_path);
  return exit_ok;
}

int run_lift(const std::string& input, const std::string& out, bool luma, const GaborFlags& gf)
{
  const ImageGrid img = read_image_flag(input, "--input", luma);
  const GaborParams p = gf.params();
  if (img.size() <= 2 * static_cast<std::size_t>(p.radius())) {
    throw FlagError("--input", input + " is too small for support radius " + std::to_string(p.radius()));
  }
  const ResponseVolume v = lift(img, make_bank(p), gf.method());
  save_volume(v, out);
  std::cerr << "wrote " << out << " (" << img.size() << "x" << img.size() << "x" << p.K() << "x" << p.L() << "x"
            << p.M() << ")\n";
  std::cout << nlohmann::json{{"output", out}, {"N", img.size()}, {"K", p.K()}, {"L", p.L()}, {"M", p.M()}}.dump()
            << std::endl;
  return exit_ok;
}

int run_invert(const std::string& volume_path, const std::string& out, const std::string& reference, bool luma,
               const std::string& transform, double sigma)
{
  if (!fs::exists(volume_path)) throw FlagError("--volume", "file not found: " + volume_path);
  ResponseVolume v = load_volume(volume_path);
  GaborParams p = v.params();
  if (sigma > 0) p.sigma = sigma;  // CRTX stores sigma; this only overrides it
  GaborFlags gf;
  gf.transform = transform;
  const bool projected = v.L() == 1;
  const ImageGrid raw = projected ? project_sum(v) : inverse_transform(v, make_bank(p), gf.method());

  ImageGrid img;
  AffineMap fit;
  if (!reference.empty()) {
    const ImageGrid ref = read_image_flag(reference, "--reference", luma);
    if (ref.size() != raw.size()) throw FlagError("--reference", reference + " size differs from the volume");
    fit = fit_affine(raw, ref, PixelMask(ref.size(), true));
    img = apply_affine(raw, fit);
  } else {
    img = stretch_to_range(raw, 0.0, 1.0);
  }
  save_image(img, out);
  std::cerr << "wrote " << out << (projected ? " (single-frequency projection)" : "") << "\n";
  nlohmann::json j{{"output", out}, {"reconstruction", projected ? "projection" : "inverse"}};
  if (!reference.empty()) j["affine"] = {{"slope", fit.slope}, {"intercept", fit.intercept}};
  std::cout << j.dump() << std::endl;
  return exit_ok;
}

int run_curves(const std::string& start_text, const std::string& family, const std::string& coeffs_text,
               double step, double duration, const std::string& method, const std::string& out)
{
  const auto s = split_doubles(start_text, ',', "--start");
  if (s.size() != 5) throw FlagError("--start", "expected x,y,theta,f,s");
  if (!(s[3] > 0)) throw FlagError("--start", "frequency f must be > 0");
  const CorticalPoint start(s[0], s[1], s[2], s[3], s[4]);
  FanSweep sweep;
  sweep.family = family == "x3x4" ? FanFamily::x3_x4 : FanFamily::x1_x2;
  sweep.values = split_doubles(coeffs_text, ',', "--coeffs");
  if (sweep.values.empty()) throw FlagError("--coeffs", "empty coefficient list");
  if (step > duration) throw FlagError("--step", "must not exceed --duration");
  const auto fan = curve_fan(start, sweep, step, duration, method == "euler" ? Integrator::euler : Integrator::rk4);

  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < fan.size(); ++i) {
    const std::string path = out + "_" + std::to_string(i) + ".csv";
    std::ofstream os(path);
    if (!os) throw FlagError("--out", "cannot write " + path);
    write_curve_csv(os, fan[i]);
    files.push_back({{"path", path},
                     {"coefficient", sweep.values[i]},
                     {"samples", fan[i].samples.size()},
                     {"truncated", fan[i].truncated}});
    if (fan[i].truncated) std::cerr << "warning: curve " << i << " truncated at the frequency floor\n";
  }
  std::cerr << "wrote " << fan.size() << " curves to " << out << "_*.csv\n";
  std::cout << nlohmann::json{{"family", family}, {"curves", files}}.dump() << std::endl;
  return exit_ok;
}

int run_bench(const std::string& suite, std::uint64_t seed)
{
  std::vector<bench::Check> checks;
  if (suite == "all" || suite == "roundtrip") {
    bench::RoundTripSetup rt;
    rt.seed = seed;
    for (auto& c : bench::roundtrip_checks(rt)) checks.push_back(std::move(c));
  }
  nlohmann::json extra;
  if (suite == "all" || suite == "stripe") {
    const auto outcome = bench::run_stripe(bench::StripeSetup{});
    extra = {{"rmse_corrupted", outcome.rmse_corrupted},
             {"rmse_multi", outcome.rmse_multi},
             {"rmse_single", outcome.rmse_single}};
    for (auto& c : bench::stripe_checks(outcome)) checks.push_back(std::move(c));
  }
  bool all = true;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (" << c.relation << " "
              << c.threshold << ", " << c.seconds << " s)\n";
    all = all && c.passed;
    arr.push_back(bench::to_json(c));
  }
  nlohmann::json j{{"checks", arr}, {"all_passed", all}, {"seed", seed}};
  if (!extra.is_null()) j["stripe"] = extra;
  std::cout << j.dump() << std::endl;
  return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Image completion by sub-Riemannian diffusion in a lifted orientation-frequency-phase space"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.allow_extras(false);

  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

  // complete
  auto* complete = app.add_subcommand("complete", "Complete the masked region of an image");
  std::string c_input, c_mask, c_out = "completed.png", c_truth, c_report;
  bool luma = false;
  GaborFlags c_gabor;
  DiffusionFlags c_diff;
  complete->add_option("--input,-i", c_input, "Input image (PNG or PGM, 8-bit grayscale, square)")->required();
  complete->add_option("--mask,-m", c_mask, "Mask image; nonzero pixels are corrupted")->required();
  complete->add_option("--out,-o", c_out, "Output image");
  complete->add_option("--ground-truth", c_truth, "Optional reference for masked-region RMSE");
  complete->add_option("--report", c_report, "Also write the JSON report to this file");
  complete->add_flag("--luma", luma, "Convert colour inputs to luma instead of rejecting them");
  c_gabor.add(complete);
  c_diff.add(complete);

  // lift
  auto* liftc = app.add_subcommand("lift", "Lift an image to a CRTX response volume");
  std::string l_input, l_out = "volume.crtx";
  GaborFlags l_gabor;
  liftc->add_option("--input,-i", l_input, "Input image")->required();
  liftc->add_option("--out,-o", l_out, "Output CRTX file");
  liftc->add_flag("--luma", luma, "Convert colour inputs to luma");
  l_gabor.add(liftc);

  // invert
  auto* invert = app.add_subcommand("invert", "Reconstruct an image from a CRTX volume");
  std::string v_volume, v_out = "reconstructed.png", v_reference, v_transform = "auto";
  double v_sigma = 0;
  invert->add_option("--volume,-v", v_volume, "Input CRTX file")->required();
  invert->add_option("--out,-o", v_out, "Output image");
  invert->add_option("--reference", v_reference,
                     "Image whose range the reconstruction is affinely fitted to (default: stretch to [0,1])");
  invert->add_option("--transform", v_transform, "Inverse method")->check(CLI::IsMember({"auto", "direct", "fft"}));
  invert->add_option("--sigma", v_sigma, "Override the stored Gaussian scale (0 = use the file)")
      ->check(CLI::NonNegativeNumber);
  invert->add_flag("--luma", luma, "Convert a colour reference to luma");

  // curves
  auto* curves = app.add_subcommand("curves", "Integrate a fan of horizontal integral curves to CSV");
  std::string k_start = "0,0,0,1,0", k_family = "x1x2", k_coeffs = "-0.5,0,0.5", k_method = "rk4",
              k_out = "curve";
  double k_step = 1e-3, k_duration = 1.0;
  curves->add_option("--start", k_start, "Start point x,y,theta,f,s");
  curves->add_option("--family", k_family, "Fan family: X1 + c X2 or X3 + c X4")
      ->check(CLI::IsMember({"x1x2", "x3x4"}));
  curves->add_option("--coeffs", k_coeffs, "Comma list of swept coefficients c");
  curves->add_option("--step", k_step, "Integration step")->check(CLI::PositiveNumber);
  curves->add_option("--duration", k_duration, "Curve parameter length")->check(CLI::PositiveNumber);
  curves->add_option("--method", k_method, "Integrator")->check(CLI::IsMember({"rk4", "euler"}));
  curves->add_option("--out,-o", k_out, "Output stem; curve i goes to <stem>_<i>.csv");

  // bench
  auto* benchc = app.add_subcommand("bench", "Run the built-in stripe and round-trip suites");
  std::string b_suite = "all";
  std::uint64_t b_seed = 1;
  benchc->add_option("--suite", b_suite, "Which suite")->check(CLI::IsMember({"all", "stripe", "roundtrip"}));
  benchc->add_option("--seed", b_seed, "Seed for the synthetic natural texture");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_validation;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  if (threads > 1) std::cerr << "warning: built without OpenMP; --threads ignored\n";
#endif

  try {
    if (complete->parsed()) return run_complete(c_input, c_mask, c_out, c_truth, c_report, luma, c_gabor, c_diff);
    if (liftc->parsed()) return run_lift(l_input, l_out, luma, l_gabor);
    if (invert->parsed()) return run_invert(v_volume, v_out, v_reference, luma, v_transform, v_sigma);
    if (curves->parsed()) return run_curves(k_start, k_family, k_coeffs, k_step, k_duration, k_method, k_out);
    if (benchc->parsed()) return run_bench(b_suite, b_seed);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return exit_numerical;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  }
  return exit_validation;
}
