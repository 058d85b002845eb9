#pragma once

// Sub-Riemannian diffusion on the lifted volume:
//   exact        L  = X1^2 + b2^2 X2^2 + b3^2 X3^2 + b4^2 X4^2
//   approximate  L~ = X1^2 + b2^2 X2^2, per (f, phase) channel
// discretized with B-spline interpolated central differences along the rotated
// offsets e_xi = (cos th, sin th) and e_eta = (-sin th, cos th), integrated by
// forward Euler with the lifted data held fixed outside the corrupted region.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cortical/bspline.hpp"
#include "cortical/errors.hpp"
#include "cortical/gabor.hpp"
#include "cortical/image.hpp"

namespace cortical {

enum class DiffusionMode { exact, approximate };

/// Discretization of X3X3. `analytic` composes d_eta_eta + 2 f d_eta d_s + f^2 d_ss;
/// `paper_literal` reproduces the printed scheme term by term, including its
/// e_xi cross group and the extra f^2/(2 ds) phase term.
enum class StencilVariant { analytic, paper_literal };

inline const char* to_string(DiffusionMode m) { return m == DiffusionMode::exact ? "exact" : "approximate"; }
inline const char* to_string(StencilVariant s) { return s == StencilVariant::analytic ? "analytic" : "paper-literal"; }

struct Betas {
  double beta2 = 0;
  double beta3 = 0;
  double beta4 = 0;
};

/// Unit-coherency weights: beta2 = K/(N sqrt 2), beta3 = L/(N sqrt 2), beta4 = M/(N sqrt 2).
inline Betas beta_coefficients(long n, long K, long L, long M)
{
  detail::require(n >= 1 && K >= 1 && L >= 1 && M >= 1, "beta_coefficients: N, K, L, M must all be >= 1");
  const double denom = static_cast<double>(n) * std::numbers::sqrt2;
  return {static_cast<double>(K) / denom, static_cast<double>(L) / denom, static_cast<double>(M) / denom};
}

struct DiffusionConfig {
  DiffusionMode mode = DiffusionMode::approximate;
  double beta2 = 0;
  double beta3 = 0;
  double beta4 = 0;
  double dt = 0.1;
  double t_max = 10;
  double tol = 1e-4;
  int spline_degree = 3;
  StencilVariant stencil = StencilVariant::analytic;

  void set_betas(const Betas& b)
  {
    beta2 = b.beta2;
    beta3 = b.beta3;
    beta4 = b.beta4;
  }

  void validate() const
  {
    detail::require(beta2 >= 0 && beta3 >= 0 && beta4 >= 0, "DiffusionConfig: beta coefficients must be >= 0");
    detail::require(std::isfinite(dt) && dt > 0, "DiffusionConfig: dt must be > 0");
    detail::require(std::isfinite(t_max) && t_max > 0, "DiffusionConfig: t_max must be > 0");
    detail::require(dt <= t_max, "DiffusionConfig: dt must not exceed t_max");
    detail::require(tol > 0 || tol == 0, "DiffusionConfig: tol must be >= 0");
    detail::require(spline_degree == 1 || spline_degree == 3, "DiffusionConfig: spline degree must be 1 or 3");
  }
};

/// Sampling of the five axes as seen by the stencils.
struct StencilGrid {
  double dx = 1.0;
  int K = 0;
  std::vector<double> freqs;
  int M = 1;
  double ds = std::numbers::pi / 8;

  double dtheta() const { return std::numbers::pi / K; }
  double theta(int k) const { return k * dtheta(); }
  int L() const { return static_cast<int>(freqs.size()); }

  static StencilGrid from(const GaborParams& p, double pixel_pitch = 1.0)
  {
    return {pixel_pitch, p.K(), p.frequencies, p.M(), p.phase_step};
  }
};

/// Corrupted-pixel mask together with its dilation; the lifted region Pi is
/// every (i, j, k, l, m) whose pixel lies in the dilated footprint.
class LiftedMask {
public:
  LiftedMask(PixelMask pixels, int dilation) : pixels_(std::move(pixels)), dilation_(dilation)
  {
    detail::require(dilation >= 0, "LiftedMask: dilation must be >= 0");
    footprint_ = pixels_.dilated(dilation);
    detail::require(!footprint_.full(), "LiftedMask: the (dilated) mask covers every pixel; no Dirichlet data remain");
    for (std::size_t idx = 0; idx < footprint_.size() * footprint_.size(); ++idx) {
      if (footprint_.at_index(idx)) interior_.push_back(idx);
    }
  }

  const PixelMask& pixels() const { return pixels_; }
  const PixelMask& footprint() const { return footprint_; }
  int dilation() const { return dilation_; }
  std::size_t size() const { return pixels_.size(); }

  /// Row-major indices of the footprint pixels.
  const std::vector<std::size_t>& free_pixels() const { return interior_; }

  bool contains(std::size_t i, std::size_t j) const { return footprint_(i, j); }

private:
  PixelMask pixels_;
  int dilation_ = 0;
  PixelMask footprint_;
  std::vector<std::size_t> interior_;
};

struct EvolvingVolume {
  ResponseVolume u;
  std::size_t iteration = 0;
  double elapsed = 0;
};

struct Index5 {
  std::size_t i = 0;
  std::size_t j = 0;
  int k = 0;
  int l = 0;
  int m = 0;
};

enum class SecondDifference { x1x1, x2x2, x3x3, x4x4 };

namespace detail {

// Three-point second difference on a possibly non-uniform axis with
// replicate ends: returns the weights applied to (u[-1], u[0], u[+1]).
struct AxisWeights {
  double minus = 0;
  double center = 0;
  double plus = 0;
};

inline AxisWeights nonuniform_second(const std::vector<double>& axis, int l)
{
  const int n = static_cast<int>(axis.size());
  if (n < 2) return {};
  const auto at = [&](int q) { return axis[static_cast<std::size_t>(q)]; };
  const double hp = l + 1 < n ? at(l + 1) - at(l) : at(l) - at(l - 1);
  const double hm = l > 0 ? at(l) - at(l - 1) : hp;
  const double s = hp + hm;
  return {2.0 / (hm * s), -2.0 / (hp * hm), 2.0 / (hp * s)};
}

} // namespace detail

/// Evaluates the discrete second-order horizontal derivatives on a volume.
/// fit() must be called whenever the volume contents change.
class StencilOperator {
public:
  StencilOperator(StencilGrid grid, int spline_degree, StencilVariant variant)
      : grid_(std::move(grid)), degree_(spline_degree), variant_(variant)
  {
    detail::require(grid_.K >= 1 && grid_.L() >= 1 && grid_.M >= 1, "StencilOperator: empty grid");
    detail::require(grid_.dx > 0 && grid_.ds > 0, "StencilOperator: spacings must be > 0");
    detail::require(spline_degree == 1 || spline_degree == 3, "StencilOperator: spline degree must be 1 or 3");
    for (int k = 0; k < grid_.K; ++k) {
      // offsets in index units; e_xi has physical length dx
      const double c = std::cos(grid_.theta(k));
      const double s = std::sin(grid_.theta(k));
      xi_plus_.push_back(spline_taps(c, s, degree_));
      xi_minus_.push_back(spline_taps(-c, -s, degree_));
      eta_plus_.push_back(spline_taps(-s, c, degree_));
      eta_minus_.push_back(spline_taps(s, -c, degree_));
    }
    for (int l = 0; l < grid_.L(); ++l) f_weights_.push_back(detail::nonuniform_second(grid_.freqs, l));
  }

  const StencilGrid& grid() const { return grid_; }

  /// Builds the interpolating spline of every channel slice of `u`.
  void fit(const ResponseVolume& u)
  {
    detail::require(u.K() == grid_.K && u.L() == grid_.L() && u.M() == grid_.M,
                    "StencilOperator::fit: volume channel shape does not match the stencil grid");
    u_ = &u;
    n_ = static_cast<int>(u.size());
    splines_.resize(u.channel_count());
    const auto channels = static_cast<long>(u.channel_count());
#pragma omp parallel for schedule(dynamic)
    for (long ch = 0; ch < channels; ++ch) {
      splines_[static_cast<std::size_t>(ch)].rebuild(
          SquareView<complex>{u.slice(static_cast<std::size_t>(ch)), u.size()}, degree_);
    }
  }

  complex x1x1(const Index5& p) const
  {
    const std::size_t ch = channel(p.k, p.l, p.m);
    const auto& sp = splines_[ch];
    const auto ku = static_cast<std::size_t>(p.k);
    const int i = static_cast<int>(p.i);
    const int j = static_cast<int>(p.j);
    return (sp.sample(xi_plus_[ku], i, j) - 2.0 * grid_value(ch, p) + sp.sample(xi_minus_[ku], i, j)) /
           (grid_.dx * grid_.dx);
  }

  complex x2x2(const Index5& p) const
  {
    const int K = grid_.K;
    const int kp = (p.k + 1) % K;
    const int km = (p.k + K - 1) % K;
    const double h = grid_.dtheta();
    return (grid_value(channel(kp, p.l, p.m), p) - 2.0 * grid_value(channel(p.k, p.l, p.m), p) +
            grid_value(channel(km, p.l, p.m), p)) /
           (h * h);
  }

  complex x4x4(const Index5& p) const
  {
    if (grid_.L() < 2) return 0.0;
    const auto& w = f_weights_[static_cast<std::size_t>(p.l)];
    const int lp = std::min(p.l + 1, grid_.L() - 1);
    const int lm = std::max(p.l - 1, 0);
    return w.minus * grid_value(channel(p.k, lm, p.m), p) + w.center * grid_value(channel(p.k, p.l, p.m), p) +
           w.plus * grid_value(channel(p.k, lp, p.m), p);
  }

  complex x3x3(const Index5& p) const
  {
    const int mp = std::min(p.m + 1, grid_.M - 1);
    const int mm = std::max(p.m - 1, 0);
    const auto ku = static_cast<std::size_t>(p.k);
    const int i = static_cast<int>(p.i);
    const int j = static_cast<int>(p.j);
    const double f = grid_.freqs[static_cast<std::size_t>(p.l)];
    const double dx = grid_.dx;
    const double ds = grid_.ds;

    const std::size_t c0 = channel(p.k, p.l, p.m);
    const std::size_t cp = channel(p.k, p.l, mp);
    const std::size_t cm = channel(p.k, p.l, mm);
    const complex u0 = grid_value(c0, p);
    const complex up = grid_value(cp, p);
    const complex um = grid_value(cm, p);

    const complex eta_eta =
        (splines_[c0].sample(eta_plus_[ku], i, j) - 2.0 * u0 + splines_[c0].sample(eta_minus_[ku], i, j)) / (dx * dx);
    const complex ss = (up - 2.0 * u0 + um) / (ds * ds);
    const complex eta_cross = splines_[cp].sample(eta_plus_[ku], i, j) - splines_[cp].sample(eta_minus_[ku], i, j) -
                              splines_[cm].sample(eta_plus_[ku], i, j) + splines_[cm].sample(eta_minus_[ku], i, j);

    if (variant_ == StencilVariant::analytic) {
      return eta_eta + f * f * ss + (2.0 * f / (4.0 * dx * ds)) * eta_cross;
    }

    const double th = grid_.theta(p.k);
    const complex xi_cross = splines_[cp].sample(xi_plus_[ku], i, j) - splines_[cp].sample(xi_minus_[ku], i, j) -
                             splines_[cm].sample(xi_plus_[ku], i, j) + splines_[cm].sample(xi_minus_[ku], i, j);
    return eta_eta + f * f * ss + (f * std::cos(th) / (2.0 * ds * dx)) * eta_cross -
           (f * std::sin(th) / (2.0 * ds * dx)) * xi_cross + (f * f / (2.0 * ds)) * (up - 2.0 * u0 + um);
  }

  complex second_difference(SecondDifference which, const Index5& p) const
  {
    switch (which) {
    case SecondDifference::x1x1: return x1x1(p);
    case SecondDifference::x2x2: return x2x2(p);
    case SecondDifference::x3x3: return x3x3(p);
    case SecondDifference::x4x4: return x4x4(p);
    }
    return 0.0;
  }

  /// L-bar at p: X1X1 + b2^2 X2X2, plus b3^2 X3X3 + b4^2 X4X4 in exact mode.
  complex apply(const Index5& p, const DiffusionConfig& cfg) const
  {
    complex v = x1x1(p) + (cfg.beta2 * cfg.beta2) * x2x2(p);
    if (cfg.mode == DiffusionMode::exact) {
      v += (cfg.beta3 * cfg.beta3) * x3x3(p);
      v += (cfg.beta4 * cfg.beta4) * x4x4(p);
    }
    return v;
  }

  std::size_t channel(int k, int l, int m) const
  {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(grid_.L()) + static_cast<std::size_t>(l)) *
               static_cast<std::size_t>(grid_.M) +
           static_cast<std::size_t>(m);
  }

private:
  complex grid_value(std::size_t ch, const Index5& p) const
  {
    return u_->slice(ch)[p.i * static_cast<std::size_t>(n_) + p.j];
  }

  StencilGrid grid_;
  int degree_;
  StencilVariant variant_;
  const ResponseVolume* u_ = nullptr;
  int n_ = 0;
  std::vector<BSplineSurface<complex>> splines_;
  std::vector<SplineTaps> xi_plus_, xi_minus_, eta_plus_, eta_minus_;
  std::vector<detail::AxisWeights> f_weights_;
};

/// Pointwise second difference on `u` (fits splines for the whole volume).
inline complex second_difference(const ResponseVolume& u, SecondDifference which, const Index5& at,
                                 const StencilGrid& grid, int spline_degree = 3,
                                 StencilVariant variant = StencilVariant::analytic)
{
  if (at.i >= u.size() || at.j >= u.size() || at.k < 0 || at.k >= u.K() || at.l < 0 || at.l >= u.L() || at.m < 0 ||
      at.m >= u.M()) {
    throw std::out_of_range("second_difference: index out of range");
  }
  StencilOperator op(grid, spline_degree, variant);
  op.fit(u);
  return op.second_difference(which, at);
}

inline complex second_difference(const ResponseVolume& u, SecondDifference which, const Index5& at,
                                 int spline_degree = 3, StencilVariant variant = StencilVariant::analytic)
{
  return second_difference(u, which, at, StencilGrid::from(u.params()), spline_degree, variant);
}

/// Largest forward-Euler step allowed by the Gershgorin bound on the stencil:
/// 2 / max over channels of the sum of stencil coefficient magnitudes (off-grid
/// reads counted as single taps). For pure second differences this equals the
/// reciprocal of the centre weight, which is also the positivity limit behind
/// the discrete maximum principle.
inline double stability_bound(const DiffusionConfig& cfg, const StencilGrid& grid)
{
  const double dx2 = grid.dx * grid.dx;
  const double dth2 = grid.dtheta() * grid.dtheta();
  const double b2 = cfg.beta2 * cfg.beta2;
  const double b3 = cfg.beta3 * cfg.beta3;
  const double b4 = cfg.beta4 * cfg.beta4;
  const bool has_phase = grid.M > 1;

  double worst = 0;
  for (int l = 0; l < grid.L(); ++l) {
    const double f = grid.freqs[static_cast<std::size_t>(l)];
    for (int k = 0; k < grid.K; ++k) {
      double sum = 4.0 / dx2 + b2 * 4.0 / dth2;
      if (cfg.mode == DiffusionMode::exact) {
        double x3 = 4.0 / dx2;
        if (has_phase) {
          const double ds = grid.ds;
          x3 += 4.0 * f * f / (ds * ds);
          if (cfg.stencil == StencilVariant::analytic) {
            x3 += 4.0 * (2.0 * f / (4.0 * grid.dx * ds));
          } else {
            const double th = grid.theta(k);
            x3 += 4.0 * f * (std::abs(std::cos(th)) + std::abs(std::sin(th))) / (2.0 * ds * grid.dx);
            x3 += 4.0 * f * f / (2.0 * ds);
          }
        }
        sum += b3 * x3;
        if (grid.L() > 1) {
          const auto w = detail::nonuniform_second(grid.freqs, l);
          sum += b4 * (std::abs(w.minus) + std::abs(w.center) + std::abs(w.plus));
        }
      }
      worst = std::max(worst, sum);
    }
  }
  return 2.0 / worst;
}

struct DiffusionStats {
  std::size_t iterations = 0;
  double final_rel_change = 0;
  bool converged = false;  // the tol criterion fired before t_max
  double dt = 0;
  DiffusionMode mode = DiffusionMode::approximate;
  StencilVariant stencil = StencilVariant::analytic;
  double stability_bound = 0;
  double wall_ms = 0;
  std::vector<std::string> warnings;
};

/// Forward-Euler engine with double buffering. The free region is rewritten
/// each step; everything else keeps the Dirichlet data of `initial`.
class DiffusionSolver {
public:
  DiffusionSolver(const ResponseVolume& initial, const LiftedMask& mask, DiffusionConfig config,
                  StencilGrid grid)
      : initial_(initial), mask_(mask), config_(std::move(config)),
        op_(std::move(grid), config_.spline_degree, config_.stencil)
  {
    config_.validate();
    detail::require(mask.size() == initial.size(), "DiffusionSolver: mask size " + std::to_string(mask.size()) +
                                                       " does not match volume size " +
                                                       std::to_string(initial.size()));
  }

  DiffusionSolver(const ResponseVolume& initial, const LiftedMask& mask, DiffusionConfig config)
      : DiffusionSolver(initial, mask, config, StencilGrid::from(initial.params()))
  {
  }

  const DiffusionConfig& config() const { return config_; }
  const StencilGrid& grid() const { return op_.grid(); }

  /// Writes U_{v} = U_{v-1} + dt L-bar U_{v-1} inside the free region of `next`
  /// and returns ||U_v - U_{v-1}||^2. `next` must already carry the Dirichlet
  /// data outside the region.
  double step_into(const ResponseVolume& current, ResponseVolume& next, std::size_t iteration)
  {
    op_.fit(current);
    const auto& free_pixels = mask_.free_pixels();
    const std::size_t n = current.size();
    const int K = current.K(), L = current.L(), M = current.M();
    const auto channels = static_cast<long>(current.channel_count());
    std::vector<double> partial(current.channel_count(), 0.0);
    std::vector<char> bad(current.channel_count(), 0);
    const double dt = config_.dt;

#pragma omp parallel for schedule(dynamic)
    for (long ch = 0; ch < channels; ++ch) {
      const auto chu = static_cast<std::size_t>(ch);
      const int m = static_cast<int>(chu % static_cast<std::size_t>(M));
      const int l = static_cast<int>((chu / static_cast<std::size_t>(M)) % static_cast<std::size_t>(L));
      const int k = static_cast<int>(chu / static_cast<std::size_t>(M * L));
      (void)K;
      const auto src = current.slice(chu);
      auto dst = next.slice(chu);
      double acc = 0;
      bool finite = true;
      for (std::size_t idx : free_pixels) {
        const Index5 p{idx / n, idx % n, k, l, m};
        const complex v = src[idx] + dt * op_.apply(p, config_);
        finite = finite && std::isfinite(v.real()) && std::isfinite(v.imag());
        acc += std::norm(v - src[idx]);
        dst[idx] = v;
      }
      partial[chu] = acc;
      bad[chu] = finite ? 0 : 1;
    }

    if (std::find(bad.begin(), bad.end(), 1) != bad.end()) {
      std::ostringstream msg;
      msg << "diffusion diverged at iteration " << iteration << ": non-finite values with dt=" << config_.dt
          << " (stability bound " << stability_bound(config_, op_.grid()) << ")";
      throw NumericalError(msg.str());
    }
    double total = 0;
    for (double v : partial) total += v;
    return total;
  }

  const ResponseVolume& initial() const { return initial_; }
  const LiftedMask& mask() const { return mask_; }

private:
  const ResponseVolume& initial_;
  const LiftedMask& mask_;
  DiffusionConfig config_;
  StencilOperator op_;
};

namespace detail {

inline double squared_norm(const ResponseVolume& u)
{
  // per-channel partial sums, folded in channel order
  std::vector<double> partial(u.channel_count(), 0.0);
  const auto channels = static_cast<long>(u.channel_count());
#pragma omp parallel for schedule(static)
  for (long ch = 0; ch < channels; ++ch) {
    double acc = 0;
    for (const complex& v : u.slice(static_cast<std::size_t>(ch))) acc += std::norm(v);
    partial[static_cast<std::size_t>(ch)] = acc;
  }
  double total = 0;
  for (double v : partial) total += v;
  return total;
}

inline void check_shapes(const ResponseVolume& a, const ResponseVolume& b, const LiftedMask& mask)
{
  require(a.same_shape(b), "diffusion: volume shape does not match the initial volume");
  require(mask.size() == a.size(), "diffusion: mask size does not match the volume");
}

} // namespace detail

/// One forward-Euler step followed by re-imposing `initial` outside the region.
inline EvolvingVolume diffusion_step(const EvolvingVolume& volume, const ResponseVolume& initial,
                                     const LiftedMask& mask, const DiffusionConfig& config)
{
  detail::check_shapes(volume.u, initial, mask);
  DiffusionSolver solver(initial, mask, config);
  EvolvingVolume next{initial, volume.iteration + 1, 0};
  next.elapsed = static_cast<double>(next.iteration) * config.dt;
  solver.step_into(volume.u, next.u, next.iteration);
  return next;
}

struct DiffusionResult {
  EvolvingVolume state;
  DiffusionStats stats;
};

using IterationObserver = std::function<void(const EvolvingVolume&, double rel_change)>;

/// Iterates from U_0 = initial until ||U_v - U_{v-1}|| / ||U_v|| < tol or
/// v dt >= t_max, whichever comes first. At least one step is always taken.
inline DiffusionResult run_diffusion(const ResponseVolume& initial, const LiftedMask& mask,
                                     const DiffusionConfig& config, const IterationObserver& observer = {},
                                     std::optional<StencilGrid> grid = std::nullopt)
{
  config.validate();
  detail::check_shapes(initial, initial, mask);
  const auto t0 = std::chrono::steady_clock::now();

  DiffusionSolver solver = grid ? DiffusionSolver(initial, mask, config, *grid) : DiffusionSolver(initial, mask, config);

  DiffusionResult result;
  auto& stats = result.stats;
  stats.dt = config.dt;
  stats.mode = config.mode;
  stats.stencil = config.stencil;
  stats.stability_bound = stability_bound(config, solver.grid());
  if (config.dt > stats.stability_bound) {
    std::ostringstream msg;
    msg << "dt=" << config.dt << " exceeds the explicit stability bound " << stats.stability_bound;
    stats.warnings.push_back(msg.str());
  }

  const auto max_iterations =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config.t_max / config.dt - 1e-9)));

  // both buffers carry the Dirichlet data; steps only touch the free region
  ResponseVolume a = initial;
  ResponseVolume b = initial;
  ResponseVolume* cur = &a;
  ResponseVolume* nxt = &b;

  std::size_t v = 0;
  double rel = 0;
  while (true) {
    ++v;
    const double diff2 = solver.step_into(*cur, *nxt, v);
    const double norm2 = detail::squared_norm(*nxt);
    if (norm2 > 0) {
      rel = std::sqrt(diff2 / norm2);
    } else {
      rel = diff2 > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    std::swap(cur, nxt);
    if (observer) observer(EvolvingVolume{*cur, v, static_cast<double>(v) * config.dt}, rel);
    if (rel < config.tol) {
      stats.converged = true;
      break;
    }
    if (v >= max_iterations) break;
  }

  stats.iterations = v;
  stats.final_rel_change = rel;
  stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  result.state = EvolvingVolume{std::move(*cur), v, static_cast<double>(v) * config.dt};
  return result;
}

} // namespace cortical
