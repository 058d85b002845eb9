#pragma once

// 8-bit grayscale image files (binary PGM and PNG) mapped linearly onto [0, 1].

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "cortical/errors.hpp"
#include "cortical/image.hpp"

namespace cortical {

struct LoadOptions {
  bool luma = false;  // convert colour input with Rec. 601 weights instead of rejecting it
};

/// Decoded 8-bit raster before the squareness check.
struct Raster8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, y outer
};

inline std::uint8_t quantize_8bit(double v)
{
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

namespace detail {

inline std::string lower_extension(const std::filesystem::path& p)
{
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

inline bool is_png(const std::filesystem::path& p) { return lower_extension(p) == ".png"; }

// --- PGM -------------------------------------------------------------------

inline void skip_pnm_space(std::istream& in)
{
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_pnm_int(std::istream& in, const std::string& path)
{
  skip_pnm_space(in);
  long v = -1;
  if (!(in >> v) || v < 0) throw FormatError(path + ": malformed PNM header");
  return static_cast<std::size_t>(v);
}

// Binary PGM (P5) or PPM (P6); returns the raw samples and the channel count.
inline Raster8 read_pnm(const std::filesystem::path& path, std::size_t& channels)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw FormatError(path.string() + ": not a binary PGM file (expected P5)");
  }
  channels = magic[1] == '6' ? 3 : 1;
  Raster8 r;
  r.width = read_pnm_int(in, path.string());
  r.height = read_pnm_int(in, path.string());
  const std::size_t maxval = read_pnm_int(in, path.string());
  if (maxval == 0 || maxval > 255) {
    throw FormatError(path.string() + ": unsupported bit depth (maxval " + std::to_string(maxval) +
                      "); only 8-bit images are accepted");
  }
  in.get();  // single whitespace before the raster
  r.pixels.resize(r.width * r.height * channels);
  in.read(reinterpret_cast<char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
  if (!in) throw FormatError(path.string() + ": truncated raster");
  return r;
}

// --- PNG -------------------------------------------------------------------

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

inline void png_error_to_exception(png_structp png, png_const_charp msg)
{
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

} // namespace detail

inline std::uint8_t luma_601(std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
  return static_cast<std::uint8_t>(std::floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5));
}

/// Reads an 8-bit file into a raster; colour inputs are reduced to luma only
/// when `opt.luma` is set.
inline Raster8 read_raster(const std::filesystem::path& path, const LoadOptions& opt = {})
{
  if (!detail::is_png(path)) {
    std::size_t channels = 1;
    Raster8 r = detail::read_pnm(path, channels);
    if (channels == 1) return r;
    if (!opt.luma) throw FormatError(path.string() + ": colour image rejected (pass the luma flag to convert)");
    for (std::size_t i = 0; i < r.width * r.height; ++i) {
      r.pixels[i] = luma_601(r.pixels[3 * i], r.pixels[3 * i + 1], r.pixels[3 * i + 2]);
    }
    r.pixels.resize(r.width * r.height);
    return r;
  }

  std::unique_ptr<std::FILE, detail::FileCloser> fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw FormatError("cannot open " + path.string());
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }

  std::string err;
  detail::PngReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_to_exception,
                                 detail::png_warning_ignore);
  if (!g.png) throw FormatError("libpng initialisation failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw FormatError("libpng initialisation failed");

  Raster8 r;
  std::vector<std::uint8_t> rgb;
  std::vector<png_bytep> rows;
  int colour_type = 0;
  // no C++ objects with non-trivial destructors are created between setjmp and longjmp
  if (setjmp(png_jmpbuf(g.png))) throw FormatError(path.string() + ": " + err);

  png_init_io(g.png, fp.get());
  png_set_sig_bytes(g.png, 8);
  png_read_info(g.png, g.info);
  const png_uint_32 w = png_get_image_width(g.png, g.info);
  const png_uint_32 h = png_get_image_height(g.png, g.info);
  const int depth = png_get_bit_depth(g.png, g.info);
  colour_type = png_get_color_type(g.png, g.info);
  if (depth != 8 && !(depth < 8 && colour_type == PNG_COLOR_TYPE_GRAY) && colour_type != PNG_COLOR_TYPE_PALETTE) {
    err = "unsupported bit depth " + std::to_string(depth) + "; only 8-bit images are accepted";
    png_longjmp(g.png, 1);
  }
  if (colour_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
  if (colour_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
  if (colour_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(g.png);
  png_read_update_info(g.png, g.info);
  const auto channels = static_cast<std::size_t>(png_get_channels(g.png, g.info));
  const bool colour = channels >= 3;
  if (colour && !opt.luma) {
    err = "colour image rejected (pass the luma flag to convert)";
    png_longjmp(g.png, 1);
  }

  r.width = w;
  r.height = h;
  rgb.resize(static_cast<std::size_t>(w) * h * channels);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = rgb.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(g.png, rows.data());
  png_read_end(g.png, nullptr);

  r.pixels.resize(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < r.pixels.size(); ++i) {
    const std::uint8_t* px = rgb.data() + i * channels;
    r.pixels[i] = colour ? luma_601(px[0], px[1], px[2]) : px[0];
  }
  return r;
}

inline void write_raster(const Raster8& r, const std::filesystem::path& path)
{
  if (!detail::is_png(path)) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << "P5\n" << r.width << " " << r.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
    out.close();
    if (!out) throw FormatError("failed writing " + path.string());
    return;
  }

  std::unique_ptr<std::FILE, detail::FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw FormatError("cannot open " + path.string() + " for writing");
  std::string err;
  detail::PngWriteGuard g;
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_to_exception,
                                  detail::png_warning_ignore);
  if (!g.png) throw FormatError("libpng initialisation failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw FormatError("libpng initialisation failed");
  std::vector<png_bytep> rows(r.height);
  for (std::size_t y = 0; y < r.height; ++y) rows[y] = const_cast<png_bytep>(r.pixels.data() + y * r.width);
  if (setjmp(png_jmpbuf(g.png))) throw FormatError(path.string() + ": " + err);
  png_init_io(g.png, fp.get());
  png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);
  png_write_image(g.png, rows.data());
  png_write_end(g.png, nullptr);
}

/// File rows run along y and columns along x, so file pixel (x, y) is grid (i=x, j=y).
inline ImageGrid raster_to_grid(const Raster8& r, const std::string& what)
{
  if (r.width != r.height) {
    throw ValidationError(what + ": image is " + std::to_string(r.width) + "x" + std::to_string(r.height) +
                          "; only square images are supported");
  }
  const std::size_t n = r.width;
  std::vector<double> values(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) values[x * n + y] = r.pixels[y * n + x] / 255.0;
  }
  return ImageGrid(n, std::move(values));
}

inline ImageGrid load_image(const std::filesystem::path& path, const LoadOptions& opt = {})
{
  return raster_to_grid(read_raster(path, opt), path.string());
}

/// Values are clamped to [0, 1] and rounded half-up to 8 bits.
inline void save_image(const ImageGrid& img, const std::filesystem::path& path)
{
  const std::size_t n = img.size();
  Raster8 r{n, n, std::vector<std::uint8_t>(n * n)};
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) r.pixels[y * n + x] = quantize_8bit(img(x, y));
  }
  write_raster(r, path);
}

/// Any nonzero pixel marks a corrupted location.
inline PixelMask load_mask(const std::filesystem::path& path, const LoadOptions& opt = {})
{
  const Raster8 r = read_raster(path, opt);
  if (r.width != r.height) {
    throw ValidationError(path.string() + ": mask is " + std::to_string(r.width) + "x" + std::to_string(r.height) +
                          "; only square masks are supported");
  }
  const std::size_t n = r.width;
  PixelMask m(n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) m.set(x, y, r.pixels[y * n + x] != 0);
  }
  return m;
}

inline void save_mask(const PixelMask& mask, const std::filesystem::path& path)
{
  const std::size_t n = mask.size();
  Raster8 r{n, n, std::vector<std::uint8_t>(n * n)};
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) r.pixels[y * n + x] = mask(x, y) ? 255 : 0;
  }
  write_raster(r, path);
}

} // namespace cortical
