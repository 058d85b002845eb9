#pragma once

// CRTX container for response volumes. Little-endian layout:
//   "CRTX"  u32 version  u32 N K L M  f64 sigma dtheta ds  f64 freqs[L]
//   then N*N*K*L*M complex samples as (re, im) f64 pairs, row-major [i,j,k,l,m].

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cortical/errors.hpp"
#include "cortical/gabor.hpp"

namespace cortical {

inline constexpr std::uint32_t crtx_version = 1;

namespace detail {

template <class T>
void to_le(T value, unsigned char* out)
{
  std::memcpy(out, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(out, out + sizeof(T));
}

template <class T>
T from_le(const unsigned char* in)
{
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, in, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T v;
  std::memcpy(&v, raw, sizeof(T));
  return v;
}

template <class T>
void write_le(std::ostream& os, T value)
{
  unsigned char b[sizeof(T)];
  to_le(value, b);
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T read_le(std::istream& is, const char* what)
{
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) {
    throw FormatError(std::string("CRTX: truncated header reading ") + what);
  }
  return from_le<T>(b);
}

} // namespace detail

inline void write_volume(std::ostream& os, const ResponseVolume& v)
{
  const auto& p = v.params();
  const std::size_t n = v.size();
  os.write("CRTX", 4);
  detail::write_le<std::uint32_t>(os, crtx_version);
  for (std::size_t d : {n, static_cast<std::size_t>(v.K()), static_cast<std::size_t>(v.L()),
                        static_cast<std::size_t>(v.M())}) {
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  }
  detail::write_le<double>(os, p.sigma);
  detail::write_le<double>(os, p.delta_theta());
  detail::write_le<double>(os, p.phase_step);
  for (double f : p.frequencies) detail::write_le<double>(os, f);

  // one pixel's channel vector at a time, in (k, l, m) order == storage channel order
  const std::size_t channels = v.channel_count();
  std::vector<unsigned char> row(channels * 16);
  for (std::size_t idx = 0; idx < n * n; ++idx) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const complex c = v.slice(ch)[idx];
      detail::to_le(c.real(), row.data() + ch * 16);
      detail::to_le(c.imag(), row.data() + ch * 16 + 8);
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw FormatError("CRTX: write failed");
}

/// Parses a CRTX stream. The filter support radius is not stored; the
/// returned parameters carry the default for the stored sigma.
inline ResponseVolume read_volume(std::istream& is)
{
  char magic[4] = {};
  if (!is.read(magic, 4) || std::memcmp(magic, "CRTX", 4) != 0) {
    throw FormatError("CRTX: bad magic (expected \"CRTX\")");
  }
  const auto version = detail::read_le<std::uint32_t>(is, "version");
  if (version != crtx_version) {
    throw FormatError("CRTX: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(crtx_version) + ")");
  }
  const auto n = detail::read_le<std::uint32_t>(is, "N");
  const auto K = detail::read_le<std::uint32_t>(is, "K");
  const auto L = detail::read_le<std::uint32_t>(is, "L");
  const auto M = detail::read_le<std::uint32_t>(is, "M");
  if (n == 0 || K == 0 || L == 0 || M == 0) throw FormatError("CRTX: zero dimension in header");
  if (L > (1u << 20)) throw FormatError("CRTX: implausible frequency count " + std::to_string(L));

  GaborParams p;
  p.sigma = detail::read_le<double>(is, "sigma");
  const double dtheta = detail::read_le<double>(is, "dtheta");
  p.phase_step = detail::read_le<double>(is, "ds");
  p.orientations = static_cast<int>(K);
  p.phases = static_cast<int>(M);
  for (std::uint32_t l = 0; l < L; ++l) p.frequencies.push_back(detail::read_le<double>(is, "frequency"));
  if (!(std::abs(dtheta - std::numbers::pi / K) <= 1e-12)) {
    throw FormatError("CRTX: dtheta " + std::to_string(dtheta) + " inconsistent with K=" + std::to_string(K));
  }
  try {
    p.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("CRTX: invalid header parameters: ") + e.what());
  }

  // payload length check before allocating
  const auto header_end = is.tellg();
  std::uint64_t available = 0;
  bool known = false;
  if (header_end != std::streampos(-1)) {
    is.seekg(0, std::ios::end);
    const auto end = is.tellg();
    is.seekg(header_end);
    if (end != std::streampos(-1)) {
      available = static_cast<std::uint64_t>(end - header_end);
      known = true;
    }
  }
  const std::uint64_t samples = std::uint64_t{n} * n * K * L * M;
  if (known && available != samples * 16) {
    throw FormatError("CRTX: payload holds " + std::to_string(available) + " bytes, header declares " +
                      std::to_string(samples * 16) + " for shape " + std::to_string(n) + "x" + std::to_string(n) +
                      "x" + std::to_string(K) + "x" + std::to_string(L) + "x" + std::to_string(M));
  }

  ResponseVolume v(n, p);
  const std::size_t channels = v.channel_count();
  std::vector<unsigned char> row(channels * 16);
  for (std::size_t idx = 0; idx < std::size_t{n} * n; ++idx) {
    if (!is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()))) {
      throw FormatError("CRTX: truncated payload");
    }
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const double re = detail::from_le<double>(row.data() + ch * 16);
      const double im = detail::from_le<double>(row.data() + ch * 16 + 8);
      if (!std::isfinite(re) || !std::isfinite(im)) throw FormatError("CRTX: non-finite sample");
      v.slice(ch)[idx] = complex(re, im);
    }
  }
  if (!known && is.peek() != std::char_traits<char>::eof()) throw FormatError("CRTX: trailing bytes after payload");
  return v;
}

inline std::string encode_volume(const ResponseVolume& v)
{
  std::ostringstream os(std::ios::binary);
  write_volume(os, v);
  return std::move(os).str();
}

inline ResponseVolume decode_volume(const std::string& bytes)
{
  std::istringstream is(bytes, std::ios::binary);
  return read_volume(is);
}

inline void save_volume(const ResponseVolume& v, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_volume(out, v);
  out.close();
  if (!out) throw FormatError("failed writing " + path.string());
}

inline ResponseVolume load_volume(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return read_volume(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

} // namespace cortical
