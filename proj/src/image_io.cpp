// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include "analogic/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace analogic {

std::uint16_t DepthQuantization::encode(double d) const {
  const double t = std::clamp((d - near) / (far - near), 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(t * 65535.0));
}

double DepthQuantization::decode(std::uint16_t q) const {
  return near + (far - near) * (static_cast<double>(q) / 65535.0);
}

Image quantize8(const Image& img) {
  return Image(img.shape(),
               ((img.array().max(0.0).min(1.0) * 255.0).round() / 255.0).matrix());
}

DepthMap quantize_depth(const DepthMap& depth, const DepthQuantization& q) {
  DepthMap out(depth.shape());
  for (Index i = 0; i < depth.data().rows(); ++i) out.data()(i, 0) = q.decode(q.encode(depth.data()(i, 0)));
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return f;
}

void write_png(const std::filesystem::path& path, int width, int height, int color_type,
               int bit_depth, const std::vector<std::vector<png_byte>>& rows) {
  File f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed for '" + path.string() + "'");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const auto& r : rows) png_write_row(png, r.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw IoError("failed writing '" + path.string() + "'");
}

struct Decoded {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::vector<png_byte>> rows;
};

Decoded read_png(const std::filesystem::path& path) {
  File f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed for '" + path.string() + "'");
  }
  Decoded d;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("'" + path.string() + "' is not a readable PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  d.width = static_cast<int>(png_get_image_width(png, info));
  d.height = static_cast<int>(png_get_image_height(png, info));
  d.bit_depth = png_get_bit_depth(png, info);
  d.channels = png_get_channels(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  d.rows.assign(static_cast<std::size_t>(d.height), std::vector<png_byte>(rowbytes));
  for (auto& r : d.rows) png_read_row(png, r.data(), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 3 || img.batch() != 1) throw ShapeError("write_png_rgb expects 1x3xHxW");
  const int W = static_cast<int>(img.width()), H = static_cast<int>(img.height());
  std::vector<std::vector<png_byte>> rows(static_cast<std::size_t>(H),
                                          std::vector<png_byte>(static_cast<std::size_t>(W) * 3));
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c)
        rows[y][static_cast<std::size_t>(x * 3 + c)] = static_cast<png_byte>(
            std::lround(std::clamp(img(0, c, y, x), 0.0, 1.0) * 255.0));
  write_png(path, W, H, PNG_COLOR_TYPE_RGB, 8, rows);
}

Image read_png_rgb(const std::filesystem::path& path) {
  Decoded d = read_png(path);
  if (d.bit_depth != 8 || d.channels != 3)
    throw IoError("'" + path.string() + "' is not an 8-bit RGB PNG");
  Image img(1, 3, d.height, d.width);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x)
      for (int c = 0; c < 3; ++c) img(0, c, y, x) = d.rows[y][static_cast<std::size_t>(x * 3 + c)] / 255.0;
  return img;
}

void write_png_depth(const std::filesystem::path& path, const DepthMap& depth,
                     const DepthQuantization& q) {
  if (depth.channels() != 1 || depth.batch() != 1) throw ShapeError("depth PNG expects 1x1xHxW");
  const int W = static_cast<int>(depth.width()), H = static_cast<int>(depth.height());
  std::vector<std::vector<png_byte>> rows(static_cast<std::size_t>(H),
                                          std::vector<png_byte>(static_cast<std::size_t>(W) * 2));
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const std::uint16_t v = q.encode(depth(0, 0, y, x));
      rows[y][static_cast<std::size_t>(2 * x)] = static_cast<png_byte>(v >> 8);  // big-endian
      rows[y][static_cast<std::size_t>(2 * x + 1)] = static_cast<png_byte>(v & 0xff);
    }
  write_png(path, W, H, PNG_COLOR_TYPE_GRAY, 16, rows);
}

DepthMap read_png_depth(const std::filesystem::path& path, const DepthQuantization& q) {
  Decoded d = read_png(path);
  if (d.bit_depth != 16 || d.channels != 1)
    throw IoError("'" + path.string() + "' is not a 16-bit greyscale PNG");
  DepthMap depth(1, 1, d.height, d.width);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      const auto& r = d.rows[y];
      const auto v = static_cast<std::uint16_t>((r[static_cast<std::size_t>(2 * x)] << 8) |
                                                r[static_cast<std::size_t>(2 * x + 1)]);
      depth(0, 0, y, x) = q.decode(v);
    }
  return depth;
}

Image hconcat(const std::vector<Image>& images) {
  if (images.empty()) return Image();
  const Index H = images.front().height();
  Index W = 0;
  for (const auto& im : images) {
    if (im.height() != H || im.channels() != 3) throw ShapeError("hconcat: inconsistent images");
    W += im.width() + 1;
  }
  Image out = Image::constant(Shape{1, 3, H, W - 1}, 1.0);
  Index x0 = 0;
  for (const auto& im : images) {
    for (Index c = 0; c < 3; ++c)
      for (Index y = 0; y < H; ++y)
        for (Index x = 0; x < im.width(); ++x) out(0, c, y, x0 + x) = im(0, c, y, x);
    x0 += im.width() + 1;
  }
  return out;
}

}  // namespace analogic
