#pragma once

// Gabor filter bank over orientation x frequency x phase, the lifting of a 2D
// image into the 5D response volume, and the two ways back to the plane: the
// inverse Gabor transform and the single-frequency projection.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cortical/errors.hpp"
#include "cortical/fft.hpp"
#include "cortical/image.hpp"

namespace cortical {

using complex = std::complex<double>;

struct GaborParams {
  double sigma = 2.0;
  int orientations = 32;            // K; theta_k = k pi / K over [0, pi)
  std::vector<double> frequencies;  // f_l in radians per pixel, strictly increasing
  int phases = 5;                   // M; phi_m = m * phase_step
  double phase_step = std::numbers::pi / 8;
  int support_radius = 0;           // 0 selects ceil(3 sigma)

  int K() const { return orientations; }
  int L() const { return static_cast<int>(frequencies.size()); }
  int M() const { return phases; }
  std::size_t channel_count() const
  {
    return static_cast<std::size_t>(K()) * static_cast<std::size_t>(L()) * static_cast<std::size_t>(M());
  }

  double delta_theta() const { return std::numbers::pi / orientations; }
  double theta(int k) const { return k * delta_theta(); }
  double frequency(int l) const { return frequencies[static_cast<std::size_t>(l)]; }
  double phase(int m) const { return m * phase_step; }

  int radius() const
  {
    return support_radius > 0 ? support_radius : static_cast<int>(std::ceil(3 * sigma - 1e-12));
  }

  void validate() const
  {
    detail::require(std::isfinite(sigma) && sigma > 0, "GaborParams: sigma must be > 0");
    detail::require(orientations >= 2, "GaborParams: orientation count K must be >= 2");
    detail::require(phases >= 1, "GaborParams: phase count M must be >= 1");
    detail::require(!frequencies.empty(), "GaborParams: at least one frequency is required");
    for (std::size_t l = 0; l < frequencies.size(); ++l) {
      detail::require(std::isfinite(frequencies[l]) && frequencies[l] > 0, "GaborParams: frequencies must be > 0");
      if (l > 0) {
        detail::require(frequencies[l] > frequencies[l - 1], "GaborParams: frequencies must be strictly increasing");
      }
    }
    detail::require(std::isfinite(phase_step) && phase_step > 0, "GaborParams: phase step must be > 0");
    detail::require(support_radius == 0 || support_radius >= static_cast<int>(std::ceil(3 * sigma - 1e-12)),
                    "GaborParams: support radius must be >= ceil(3 sigma)");
  }

  friend bool operator==(const GaborParams&, const GaborParams&) = default;
};

/// `count` evenly spaced values from lo to hi inclusive.
inline std::vector<double> uniform_frequencies(double lo, double hi, int count)
{
  detail::require(count >= 1, "uniform_frequencies: count must be >= 1");
  if (count == 1) return {lo};
  std::vector<double> f(static_cast<std::size_t>(count));
  for (int l = 0; l < count; ++l) f[static_cast<std::size_t>(l)] = lo + (hi - lo) * l / (count - 1);
  return f;
}

/// Receptive profile sampled at offset (dx, dy) from its centre and phase
/// coordinate s:
///   1/(2 sigma^2) exp(-i (r.(dx,dy) - (s - phi_m))) exp(-(dx^2 + dy^2)/(2 sigma^2))
/// with r = (-f_l sin theta_k, f_l cos theta_k).
inline complex gabor_eval(const GaborParams& p, int k, int l, int m, double dx, double dy, double s = 0.0)
{
  if (k < 0 || k >= p.K() || l < 0 || l >= p.L() || m < 0 || m >= p.M()) {
    throw std::out_of_range("gabor_eval: channel (" + std::to_string(k) + "," + std::to_string(l) + "," +
                            std::to_string(m) + ") out of range");
  }
  const double f = p.frequency(l);
  const double th = p.theta(k);
  const double r1 = -f * std::sin(th);
  const double r2 = f * std::cos(th);
  const double wave = r1 * dx + r2 * dy - (s - p.phase(m));
  const double envelope = std::exp(-(dx * dx + dy * dy) / (2 * p.sigma * p.sigma)) / (2 * p.sigma * p.sigma);
  return envelope * complex(std::cos(wave), -std::sin(wave));
}

class GaborBank {
public:
  const GaborParams& params() const { return params_; }
  int radius() const { return radius_; }
  int width() const { return 2 * radius_ + 1; }

  std::size_t channel(int k, int l, int m) const
  {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(params_.L()) + static_cast<std::size_t>(l)) *
               static_cast<std::size_t>(params_.M()) +
           static_cast<std::size_t>(m);
  }

  /// Atom samples, row-major over (dx, dy) in [-R, R]^2.
  std::span<const complex> atom(std::size_t ch) const { return atoms_[ch]; }
  std::span<const complex> atom(int k, int l, int m) const { return atoms_[channel(k, l, m)]; }

  complex atom_at(int k, int l, int m, int dx, int dy) const
  {
    return atoms_[channel(k, l, m)][static_cast<std::size_t>((dx + radius_) * width() + (dy + radius_))];
  }

  double atom_norm(std::size_t ch) const { return atom_norms_[ch]; }
  double bank_norm() const { return bank_norm_; }
  std::size_t atom_count() const { return atoms_.size(); }

private:
  friend GaborBank make_bank(const GaborParams&);

  GaborParams params_;
  int radius_ = 0;
  std::vector<std::vector<complex>> atoms_;
  std::vector<double> atom_norms_;
  double bank_norm_ = 0;
};

/// Samples every atom at s = 0 on integer offsets. The inversion norm is the
/// discrete L2 norm of the reference atom (k = 0, lowest f, m = 0).
inline GaborBank make_bank(const GaborParams& params)
{
  params.validate();
  GaborBank bank;
  bank.params_ = params;
  bank.radius_ = params.radius();
  const int R = bank.radius_;
  const std::size_t w = static_cast<std::size_t>(2 * R + 1);

  bank.atoms_.resize(params.channel_count());
  bank.atom_norms_.resize(params.channel_count());
  for (int k = 0; k < params.K(); ++k) {
    for (int l = 0; l < params.L(); ++l) {
      for (int m = 0; m < params.M(); ++m) {
        const std::size_t ch = bank.channel(k, l, m);
        auto& a = bank.atoms_[ch];
        a.resize(w * w);
        double norm2 = 0;
        for (int dx = -R; dx <= R; ++dx) {
          for (int dy = -R; dy <= R; ++dy) {
            const complex v = gabor_eval(params, k, l, m, dx, dy, 0.0);
            a[static_cast<std::size_t>(dx + R) * w + static_cast<std::size_t>(dy + R)] = v;
            norm2 += std::norm(v);
          }
        }
        bank.atom_norms_[ch] = std::sqrt(norm2);
      }
    }
  }
  bank.bank_norm_ = bank.atom_norms_[bank.channel(0, 0, 0)];
  return bank;
}

/// Lifted image: complex responses over (i, j, k, l, m). Stored channel-major
/// (one contiguous N x N slice per (k, l, m)); the logical order used by the
/// CRTX file format is row-major [i, j, k, l, m].
class ResponseVolume {
public:
  ResponseVolume() = default;
  ResponseVolume(std::size_t n, GaborParams params) : n_(n), params_(std::move(params))
  {
    detail::require(n > 0, "ResponseVolume: size must be > 0");
    data_.assign(n_ * n_ * params_.channel_count(), complex(0, 0));
  }

  std::size_t size() const { return n_; }
  const GaborParams& params() const { return params_; }
  int K() const { return params_.K(); }
  int L() const { return params_.L(); }
  int M() const { return params_.M(); }
  std::size_t channel_count() const { return params_.channel_count(); }
  std::size_t slice_size() const { return n_ * n_; }

  std::size_t channel(int k, int l, int m) const
  {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(L()) + static_cast<std::size_t>(l)) *
               static_cast<std::size_t>(M()) +
           static_cast<std::size_t>(m);
  }

  std::span<complex> slice(std::size_t ch) { return {data_.data() + ch * slice_size(), slice_size()}; }
  std::span<const complex> slice(std::size_t ch) const { return {data_.data() + ch * slice_size(), slice_size()}; }

  complex& operator()(std::size_t i, std::size_t j, int k, int l, int m)
  {
    return data_[channel(k, l, m) * slice_size() + i * n_ + j];
  }
  complex operator()(std::size_t i, std::size_t j, int k, int l, int m) const
  {
    return data_[channel(k, l, m) * slice_size() + i * n_ + j];
  }

  std::span<complex> data() { return data_; }
  std::span<const complex> data() const { return data_; }

  bool same_shape(const ResponseVolume& o) const
  {
    return n_ == o.n_ && K() == o.K() && L() == o.L() && M() == o.M();
  }

  friend bool operator==(const ResponseVolume&, const ResponseVolume&) = default;

private:
  std::size_t n_ = 0;
  GaborParams params_;
  std::vector<complex> data_;
};

enum class TransformMethod { automatic, direct, fft };

namespace detail {

inline bool use_fft(TransformMethod method, std::size_t n)
{
  return method == TransformMethod::fft || (method == TransformMethod::automatic && n >= 64);
}

// Scatter a (2R+1)^2 kernel into a P x P periodic grid; `flip` places tap
// (a, b) at (-a, -b), turning circular convolution into correlation.
inline void scatter_kernel(fft::Buffer& buf, int P, std::span<const complex> atom, int R, bool flip, bool conjugate)
{
  buf.zero();
  const int w = 2 * R + 1;
  for (int a = -R; a <= R; ++a) {
    for (int b = -R; b <= R; ++b) {
      complex v = atom[static_cast<std::size_t>((a + R) * w + (b + R))];
      if (conjugate) v = std::conj(v);
      const int ia = ((flip ? -a : a) % P + P) % P;
      const int ib = ((flip ? -b : b) % P + P) % P;
      buf[static_cast<std::size_t>(ia * P + ib)] = v;
    }
  }
}

inline void lift_direct(const ImageGrid& image, const GaborBank& bank, ResponseVolume& out)
{
  const int n = static_cast<int>(image.size());
  const int R = bank.radius();
  const int w = bank.width();
  const auto channels = static_cast<long>(bank.atom_count());
#pragma omp parallel for schedule(dynamic)
  for (long ch = 0; ch < channels; ++ch) {
    const auto atom = bank.atom(static_cast<std::size_t>(ch));
    auto dst = out.slice(static_cast<std::size_t>(ch));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        complex acc = 0;
        for (int a = std::max(-R, -i); a <= std::min(R, n - 1 - i); ++a) {
          const complex* row = atom.data() + (a + R) * w + R;
          for (int b = std::max(-R, -j); b <= std::min(R, n - 1 - j); ++b) {
            acc += row[b] * image(static_cast<std::size_t>(i + a), static_cast<std::size_t>(j + b));
          }
        }
        dst[static_cast<std::size_t>(i * n + j)] = acc;
      }
    }
  }
}

inline void lift_fft(const ImageGrid& image, const GaborBank& bank, ResponseVolume& out)
{
  const int n = static_cast<int>(image.size());
  const int R = bank.radius();
  const int P = fft::smooth_size(n + R);
  const fft::Plan2D plan(P);
  const auto PP = static_cast<std::size_t>(P) * static_cast<std::size_t>(P);

  fft::Buffer image_hat(PP);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) image_hat[static_cast<std::size_t>(i * P + j)] = image(i, j);
  }
  plan.forward(image_hat);

  const auto channels = static_cast<long>(bank.atom_count());
  const double scale = 1.0 / static_cast<double>(PP);
#pragma omp parallel
  {
    fft::Buffer work(PP);
#pragma omp for schedule(dynamic)
    for (long ch = 0; ch < channels; ++ch) {
      scatter_kernel(work, P, bank.atom(static_cast<std::size_t>(ch)), R, /*flip=*/true, /*conjugate=*/false);
      plan.forward(work);
      for (std::size_t q = 0; q < PP; ++q) work[q] *= image_hat[q];
      plan.backward(work);
      auto dst = out.slice(static_cast<std::size_t>(ch));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          dst[static_cast<std::size_t>(i * n + j)] = work[static_cast<std::size_t>(i * P + j)] * scale;
        }
      }
    }
  }
}

} // namespace detail

/// O[i,j,k,l,m] = sum over (i~, j~) of Psi_(i,j,k,l,m)[i~, j~, 0] I[i~, j~]:
/// correlation of the image with every atom, zero outside the image.
inline ResponseVolume lift(const ImageGrid& image, const GaborBank& bank,
                           TransformMethod method = TransformMethod::automatic)
{
  const std::size_t n = image.size();
  detail::require(n > static_cast<std::size_t>(2 * bank.radius()),
                  "lift: image size " + std::to_string(n) + " must exceed the filter width 2*" +
                      std::to_string(bank.radius()));
  ResponseVolume out(n, bank.params());
  if (detail::use_fft(method, n)) {
    detail::lift_fft(image, bank, out);
  } else {
    detail::lift_direct(image, bank, out);
  }
  return out;
}

namespace detail {

inline double frequency_weight(const GaborParams& p, std::size_t ch)
{
  const auto l = static_cast<int>((ch / static_cast<std::size_t>(p.M())) % static_cast<std::size_t>(p.L()));
  return std::sqrt(p.frequency(l));
}

inline ImageGrid inverse_direct(const ResponseVolume& volume, const GaborBank& bank)
{
  const int n = static_cast<int>(volume.size());
  const int R = bank.radius();
  const int w = bank.width();
  const std::size_t channels = volume.channel_count();
  ImageGrid out(volume.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      complex acc = 0;
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const auto atom = bank.atom(ch);
        const auto src = volume.slice(ch);
        complex part = 0;
        // out[i,j] += conj(atom[a,b]) U[i-a, j-b]
        for (int a = std::max(-R, i - n + 1); a <= std::min(R, i); ++a) {
          for (int b = std::max(-R, j - n + 1); b <= std::min(R, j); ++b) {
            part += std::conj(atom[static_cast<std::size_t>((a + R) * w + (b + R))]) *
                    src[static_cast<std::size_t>((i - a) * n + (j - b))];
          }
        }
        acc += frequency_weight(volume.params(), ch) * part;
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc.real() / bank.bank_norm();
    }
  }
  return out;
}

inline ImageGrid inverse_fft(const ResponseVolume& volume, const GaborBank& bank)
{
  const int n = static_cast<int>(volume.size());
  const int R = bank.radius();
  const int P = fft::smooth_size(n + R);
  const fft::Plan2D plan(P);
  const auto PP = static_cast<std::size_t>(P) * static_cast<std::size_t>(P);
  const std::size_t channels = volume.channel_count();

  // Channels are transformed in parallel batches, then folded into the
  // accumulator in channel order so the result does not depend on threading.
  constexpr std::size_t batch = 16;
  std::vector<fft::Buffer> products;
  products.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) products.emplace_back(PP);
  fft::Buffer accum(PP);

  for (std::size_t first = 0; first < channels; first += batch) {
    const auto count = static_cast<long>(std::min(batch, channels - first));
#pragma omp parallel
    {
      fft::Buffer kernel(PP);
#pragma omp for schedule(dynamic)
      for (long b = 0; b < count; ++b) {
        const std::size_t ch = first + static_cast<std::size_t>(b);
        auto& work = products[static_cast<std::size_t>(b)];
        work.zero();
        const auto src = volume.slice(ch);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            work[static_cast<std::size_t>(i * P + j)] = src[static_cast<std::size_t>(i * n + j)];
          }
        }
        plan.forward(work);
        scatter_kernel(kernel, P, bank.atom(ch), R, /*flip=*/false, /*conjugate=*/true);
        plan.forward(kernel);
        const double weight = frequency_weight(volume.params(), ch);
        for (std::size_t q = 0; q < PP; ++q) work[q] *= weight * kernel[q];
      }
    }
    for (long b = 0; b < count; ++b) {
      const auto& work = products[static_cast<std::size_t>(b)];
      for (std::size_t q = 0; q < PP; ++q) accum[q] += work[q];
    }
  }
  plan.backward(accum);

  ImageGrid out(volume.size());
  const double scale = 1.0 / (static_cast<double>(PP) * bank.bank_norm());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          accum[static_cast<std::size_t>(i * P + j)].real() * scale;
    }
  }
  return out;
}

} // namespace detail

/// Inverse Gabor transform:
///   I[i,j] = Re sum over (i~, j~, k, l, m) of sqrt(f_l) U[i~,j~,k,l,m] conj(Psi_(i~,j~,k,l,m))[i,j,0] / ||Psi||
/// The result is not clamped; display-range fix-ups belong to the caller.
inline ImageGrid inverse_transform(const ResponseVolume& volume, const GaborBank& bank,
                                   TransformMethod method = TransformMethod::automatic)
{
  const auto& vp = volume.params();
  const auto& bp = bank.params();
  detail::require(vp.K() == bp.K() && vp.L() == bp.L() && vp.M() == bp.M(),
                  "inverse_transform: volume channel shape does not match the bank");
  detail::require(volume.size() > static_cast<std::size_t>(2 * bank.radius()),
                  "inverse_transform: volume is smaller than the filter support");
  return detail::use_fft(method, volume.size()) ? detail::inverse_fft(volume, bank)
                                                : detail::inverse_direct(volume, bank);
}

/// Single-frequency fallback: Re of the sum over orientations and phases,
/// without renormalization.
inline ImageGrid project_sum(const ResponseVolume& volume)
{
  detail::require(volume.L() == 1, "project_sum: volume has " + std::to_string(volume.L()) +
                                       " frequencies; use inverse_transform when L > 1");
  ImageGrid out(volume.size());
  auto dst = out.values();
  for (int k = 0; k < volume.K(); ++k) {
    for (int m = 0; m < volume.M(); ++m) {
      const auto src = volume.slice(volume.channel(k, 0, m));
      for (std::size_t q = 0; q < src.size(); ++q) dst[q] += src[q].real();
    }
  }
  return out;
}

} // namespace cortical
