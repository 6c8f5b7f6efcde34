#pragma once

// Grayscale PNG reading/writing on top of libpng.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "coseg/core/tensor.hpp"

namespace coseg::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GrayImage {
  Image<std::uint16_t> pixels;
  int bit_depth = 8;  // 8 or 16

  [[nodiscard]] double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

namespace detail {
struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw IoError("cannot open file: " + path.string());
  return f;
}
}  // namespace detail

/// Reads any PNG and converts it to single-channel 8- or 16-bit gray.
inline GrayImage read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing file: " + path.string());
  auto file = detail::open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError("not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: cannot create info struct");
  }
  GrayImage out;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng: failed to decode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (depth == 16) png_set_swap(png);  // host (little-endian) order
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * static_cast<std::size_t>(h));
  rows.resize(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.bit_depth = out_depth == 16 ? 16 : 8;
  out.pixels = Image<std::uint16_t>(h, w);
  for (int y = 0; y < h; ++y) {
    const png_byte* r = rows[y];
    for (int x = 0; x < w; ++x) {
      if (out.bit_depth == 16) {
        out.pixels(y, x) = static_cast<std::uint16_t>(r[2 * x] | (r[2 * x + 1] << 8));
      } else {
        out.pixels(y, x) = r[x];
      }
    }
  }
  return out;
}

/// Writes a single-channel PNG with 8 or 16 bits per sample.
inline void write_png(const std::filesystem::path& path, const Image<std::uint16_t>& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw IoError("bit depth must be 8 or 16");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto file = detail::open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: cannot create info struct");
  }
  const std::size_t bpp = bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> buffer(static_cast<std::size_t>(img.width) * img.height * bpp);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * img.width + x) * bpp;
      const std::uint16_t v = img(y, x);
      if (bit_depth == 16) {
        buffer[i] = static_cast<png_byte>(v >> 8);  // PNG is big-endian
        buffer[i + 1] = static_cast<png_byte>(v & 0xff);
      } else {
        buffer[i] = static_cast<png_byte>(std::min<std::uint16_t>(v, 255));
      }
    }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * img.width * bpp;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng: failed to encode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Writes a [0,1] map as an 8-bit image (values clamped, rounded to nearest level).
template <class P>
void write_probability_png(const std::filesystem::path& path, const Image<P>& map) {
  Image<std::uint16_t> img(map.height, map.width);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = std::clamp(static_cast<double>(map.data[i]), 0.0, 1.0);
    img.data[i] = static_cast<std::uint16_t>(std::lround(v * 255.0));
  }
  write_png(path, img, 8);
}

}  // namespace coseg::io
