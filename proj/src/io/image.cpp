// Copyright 2026 The MoVQ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "movq/io/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>

#include "movq/core/error.hpp"

namespace movq::io {
namespace {

struct PngRead {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngRead() {
    if (png != nullptr) png_destroy_read_struct(&png, &info, nullptr);
    if (fp != nullptr) std::fclose(fp);
  }
};

struct PngWrite {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWrite() {
    if (png != nullptr) png_destroy_write_struct(&png, &info);
    if (fp != nullptr) std::fclose(fp);
  }
};

// The setjmp-protected phases keep only trivially destructible locals; all
// C++ objects live in the caller.
bool read_header_rgb8(png_structp png, png_infop info, std::FILE* fp,
                      png_uint_32* w, png_uint_32* h) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_read_info(png, info);
  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  int depth = png_get_bit_depth(png, info);
  int color = png_get_color_type(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  *w = width;
  *h = height;
  return true;
}

bool read_rows(png_structp png, png_bytep* rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  return true;
}

bool write_rows(png_structp png, png_infop info, std::FILE* fp,
                png_uint_32 w, png_uint_32 h, png_bytep* rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

void check_image_rank(const Tensor& image, const char* where) {
  if (image.ndim() != 3 || image.dim(1) < 1 || image.dim(2) < 1)
    throw ArgumentError(std::string(where) +
                        ": expected a (channels, height, width) tensor");
}

std::uint8_t to_byte(float v) {
  float p = std::round((v + 1.0f) * 127.5f);
  return static_cast<std::uint8_t>(std::clamp(p, 0.0f, 255.0f));
}

}  // namespace

Tensor read_png(const std::string& path) {
  PngRead ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (ctx.fp == nullptr)
    throw FormatError("read_png: cannot open " + path);
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                   nullptr);
  if (ctx.png == nullptr) throw FormatError("read_png: allocation failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (ctx.info == nullptr) throw FormatError("read_png: allocation failed");

  unsigned char signature[8];
  if (std::fread(signature, 1, 8, ctx.fp) != 8 ||
      png_sig_cmp(signature, 0, 8) != 0)
    throw FormatError("read_png: not a PNG file: " + path);
  std::rewind(ctx.fp);

  png_uint_32 w = 0, h = 0;
  if (!read_header_rgb8(ctx.png, ctx.info, ctx.fp, &w, &h))
    throw FormatError("read_png: corrupt header in " + path);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16))
    throw FormatError("read_png: implausible dimensions in " + path);
  std::size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
  if (rowbytes != static_cast<std::size_t>(w) * 3)
    throw FormatError("read_png: unsupported pixel layout in " + path);

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h) * rowbytes);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 i = 0; i < h; ++i) rows[i] = pixels.data() + i * rowbytes;
  if (!read_rows(ctx.png, rows.data()))
    throw FormatError("read_png: corrupt image data in " + path);

  Tensor out({3, static_cast<int>(h), static_cast<int>(w)});
  std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (std::int64_t i = 0; i < plane; ++i)
    for (int ch = 0; ch < 3; ++ch)
      out[ch * plane + i] = static_cast<float>(pixels[i * 3 + ch]) / 127.5f -
                            1.0f;
  return out;
}

void write_png(const std::string& path, const Tensor& image) {
  check_image_rank(image, "write_png");
  int c = image.dim(0);
  if (c != 1 && c != 3)
    throw ArgumentError("write_png: expected 1 or 3 channels, got " +
                        std::to_string(c));
  int h = image.dim(1), w = image.dim(2);
  std::int64_t plane = static_cast<std::int64_t>(h) * w;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(plane) * 3);
  for (std::int64_t i = 0; i < plane; ++i)
    for (int ch = 0; ch < 3; ++ch)
      pixels[i * 3 + ch] = to_byte(image[(c == 3 ? ch : 0) * plane + i]);

  PngWrite ctx;
  ctx.fp = std::fopen(path.c_str(), "wb");
  if (ctx.fp == nullptr)
    throw FormatError("write_png: cannot open " + path + " for writing");
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                    nullptr);
  if (ctx.png == nullptr) throw FormatError("write_png: allocation failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (ctx.info == nullptr) throw FormatError("write_png: allocation failed");

  std::vector<png_bytep> rows(h);
  for (int i = 0; i < h; ++i)
    rows[i] = pixels.data() + static_cast<std::size_t>(i) * w * 3;
  if (!write_rows(ctx.png, ctx.info, ctx.fp, static_cast<png_uint_32>(w),
                  static_cast<png_uint_32>(h), rows.data()))
    throw FormatError("write_png: failed writing " + path);
}

Tensor center_crop_resize(const Tensor& image, int size) {
  check_image_rank(image, "center_crop_resize");
  if (size < 1)
    throw ArgumentError("center_crop_resize: size must be positive");
  int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  int side = std::min(h, w);
  int top = (h - side) / 2, left = (w - side) / 2;

  Tensor out({c, size, size});
  float scale = static_cast<float>(side) / static_cast<float>(size);
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        float sy = (static_cast<float>(i) + 0.5f) * scale - 0.5f;
        float sx = (static_cast<float>(j) + 0.5f) * scale - 0.5f;
        sy = std::clamp(sy, 0.0f, static_cast<float>(side - 1));
        sx = std::clamp(sx, 0.0f, static_cast<float>(side - 1));
        int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
        int y1 = std::min(y0 + 1, side - 1), x1 = std::min(x0 + 1, side - 1);
        float fy = sy - static_cast<float>(y0);
        float fx = sx - static_cast<float>(x0);
        auto at = [&](int y, int x) {
          return image[(static_cast<std::int64_t>(ch) * h + top + y) * w +
                       left + x];
        };
        float top_row = at(y0, x0) * (1.0f - fx) + at(y0, x1) * fx;
        float bot_row = at(y1, x0) * (1.0f - fx) + at(y1, x1) * fx;
        out[(static_cast<std::int64_t>(ch) * size + i) * size + j] =
            top_row * (1.0f - fy) + bot_row * fy;
      }
  return out;
}

Tensor tile_grid(const std::vector<Tensor>& images, int cols) {
  if (images.empty()) throw ArgumentError("tile_grid: no images");
  if (cols < 1) throw ArgumentError("tile_grid: cols must be positive");
  check_image_rank(images.front(), "tile_grid");
  for (const Tensor& t : images)
    if (t.shape() != images.front().shape())
      throw ArgumentError("tile_grid: images must share one shape");

  const int gutter = 2;
  int n = static_cast<int>(images.size());
  int rows = (n + cols - 1) / cols;
  cols = std::min(cols, n);
  int c = images.front().dim(0);
  int h = images.front().dim(1), w = images.front().dim(2);
  int out_h = rows * h + (rows - 1) * gutter;
  int out_w = cols * w + (cols - 1) * gutter;
  Tensor out = Tensor::full({c, out_h, out_w}, 1.0f);
  for (int idx = 0; idx < n; ++idx) {
    int r = idx / cols, col = idx % cols;
    int oy = r * (h + gutter), ox = col * (w + gutter);
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
          out[(static_cast<std::int64_t>(ch) * out_h + oy + i) * out_w + ox +
              j] = images[idx][(static_cast<std::int64_t>(ch) * h + i) * w + j];
  }
  return out;
}

}  // namespace movq::io
