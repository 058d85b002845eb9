#pragma once

// Thin RAII layer over FFTW for square 2D complex transforms.

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <new>
#include <span>

#include <fftw3.h>

namespace cortical::fft {

namespace detail {

// Planner calls are not thread-safe in FFTW; execution with new-array
// interfaces is.
inline std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

} // namespace detail

/// fftw_malloc'd complex buffer; every buffer shares FFTW's SIMD alignment so
/// any of them can be passed to a plan via the new-array execute interface.
class Buffer {
public:
  explicit Buffer(std::size_t count)
      : size_(count), data_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count)))
  {
    if (!data_) throw std::bad_alloc();
    zero();
  }

  std::size_t size() const { return size_; }
  fftw_complex* raw() { return data_.get(); }

  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(data_.get()); }
  const std::complex<double>* data() const { return reinterpret_cast<const std::complex<double>*>(data_.get()); }
  std::span<std::complex<double>> span() { return {data(), size_}; }

  std::complex<double>& operator[](std::size_t i) { return data()[i]; }
  const std::complex<double>& operator[](std::size_t i) const { return data()[i]; }

  void zero()
  {
    for (std::size_t i = 0; i < size_; ++i) data()[i] = 0.0;
  }

private:
  std::size_t size_;
  std::unique_ptr<fftw_complex, detail::FftwFree> data_;
};

/// In-place forward and backward plans for a P x P complex grid. The backward
/// transform is unnormalized, as in FFTW.
class Plan2D {
public:
  explicit Plan2D(int p) : p_(p)
  {
    Buffer scratch(static_cast<std::size_t>(p) * static_cast<std::size_t>(p));
    std::lock_guard lock(detail::planner_mutex());
    forward_ = fftw_plan_dft_2d(p, p, scratch.raw(), scratch.raw(), FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(p, p, scratch.raw(), scratch.raw(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  ~Plan2D()
  {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  Plan2D(const Plan2D&) = delete;
  Plan2D& operator=(const Plan2D&) = delete;

  int size() const { return p_; }

  void forward(Buffer& b) const { fftw_execute_dft(forward_, b.raw(), b.raw()); }
  void backward(Buffer& b) const { fftw_execute_dft(backward_, b.raw(), b.raw()); }

private:
  int p_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Smallest size >= n whose only prime factors are 2, 3 and 5.
inline int smooth_size(int n)
{
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

} // namespace cortical::fft
