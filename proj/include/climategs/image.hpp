#pragma once

// Linear RGB images and 8-bit PNG encoding. All internal math is linear; the
// 2.2 display gamma is applied only when encoding and removed when decoding.

#include "climategs/core.hpp"

#include <png.h>

#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace climategs {

inline constexpr double kDisplayGamma = 2.2;

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Image() = default;
  Image(int w, int h, const Rgb& fill = Rgb::Zero()) : width(w), height(h), pixels(std::size_t(w) * h, fill) {}
  Rgb& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
  bool empty() const { return pixels.empty(); }
};

inline std::uint8_t encode_channel(double linear) {
  const double c = std::clamp(linear, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(std::pow(c, 1.0 / kDisplayGamma) * 255.0));
}

inline double decode_channel(std::uint8_t v) { return std::pow(v / 255.0, kDisplayGamma); }

namespace detail {

struct PngWriteState {
  std::vector<std::uint8_t>* out;
};

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
  st->out->insert(st->out->end(), data, data + len);
}

inline void png_flush_noop(png_structp) {}

struct PngReadState {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

inline void png_read_from_buffer(png_structp png, png_bytep out, png_size_t len) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->pos + len > st->size) png_error(png, "truncated PNG data");
  std::memcpy(out, st->data + st->pos, len);
  st->pos += len;
}

// libpng is C: errors longjmp back to the caller, which turns them into exceptions.
struct PngError {
  char message[256] = {0};
};

[[noreturn]] inline void png_on_error(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof(err->message), "%s", msg);
  png_longjmp(png, 1);
}
inline void png_warn(png_structp, png_const_charp) {}

}  // namespace detail

/// Encodes to an 8-bit RGB PNG with display gamma.
inline std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> row(std::size_t(img.width) * 3);
  detail::PngError err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_on_error, detail::png_warn);
  if (!png) throw Error("png: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  detail::PngWriteState st{&out};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(std::string("png: ") + err.message);
  }
  png_set_write_fn(png, &st, detail::png_write_to_vector, detail::png_flush_noop);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) row[std::size_t(x) * 3 + c] = encode_channel(img.at(x, y)[c]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

/// Decodes any 8/16-bit PNG into linear RGB (alpha dropped, gray expanded).
inline Image decode_png(const std::uint8_t* data, std::size_t size) {
  if (size < 8 || png_sig_cmp(data, 0, 8) != 0) throw LoadError("png: not a PNG stream");
  Image img;
  std::vector<std::uint8_t> row;
  detail::PngError err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_on_error, detail::png_warn);
  if (!png) throw Error("png: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  detail::PngReadState st{data, size, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError(std::string("png: ") + err.message);
  }
  png_set_read_fn(png, &st, detail::png_read_from_buffer);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = int(png_get_image_width(png, info)), h = int(png_get_image_height(png, info));
  const bool bad_layout = png_get_channels(png, info) != 3;
  if (!bad_layout) {
    img = Image(w, h);
    row.resize(png_get_rowbytes(png, info));
    for (int y = 0; y < h; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) img.at(x, y)[c] = decode_channel(row[std::size_t(x) * 3 + c]);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (bad_layout) throw LoadError("png: unexpected channel layout");
  return img;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw Error("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename '" + tmp + "'");
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void save_png(const Image& img, const std::string& path) { write_file(path, encode_png(img)); }

inline Image load_png(const std::string& path) {
  const auto bytes = read_file(path);
  return decode_png(bytes.data(), bytes.size());
}

}  // namespace climategs
