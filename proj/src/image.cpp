// Copyright 2026 The nuqta authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License. You may
// obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nuqta/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "nuqta/common.hpp"

namespace nuqta {

namespace {

float sample_src(const Image& in, double fy, double fx) {
  const auto clampi = [](ptrdiff_t v, ptrdiff_t hi) {
    return static_cast<size_t>(std::clamp<ptrdiff_t>(v, 0, hi));
  };
  const ptrdiff_t y0 = static_cast<ptrdiff_t>(std::floor(fy));
  const ptrdiff_t x0 = static_cast<ptrdiff_t>(std::floor(fx));
  const double wy = fy - std::floor(fy);
  const double wx = fx - std::floor(fx);
  const size_t y0c = clampi(y0, static_cast<ptrdiff_t>(in.h) - 1);
  const size_t y1c = clampi(y0 + 1, static_cast<ptrdiff_t>(in.h) - 1);
  const size_t x0c = clampi(x0, static_cast<ptrdiff_t>(in.w) - 1);
  const size_t x1c = clampi(x0 + 1, static_cast<ptrdiff_t>(in.w) - 1);
  const double v0 =
      in.at(y0c, x0c) + wx * (in.at(y0c, x1c) - in.at(y0c, x0c));
  const double v1 =
      in.at(y1c, x0c) + wx * (in.at(y1c, x1c) - in.at(y1c, x0c));
  return static_cast<float>(v0 + wy * (v1 - v0));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

Image resize_bilinear(const Image& in, size_t nh, size_t nw) {
  if (in.empty() || nh == 0 || nw == 0)
    throw contract_error("resize_bilinear: empty image or target");
  if (nh == in.h && nw == in.w) return in;
  Image out(nh, nw);
  const double sy = static_cast<double>(in.h) / nh;
  const double sx = static_cast<double>(in.w) / nw;
  for (size_t y = 0; y < nh; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    for (size_t x = 0; x < nw; ++x) {
      out.at(y, x) = sample_src(in, fy, (x + 0.5) * sx - 0.5);
    }
  }
  return out;
}

Image resize_nearest(const Image& in, size_t nh, size_t nw) {
  if (in.empty() || nh == 0 || nw == 0)
    throw contract_error("resize_nearest: empty image or target");
  if (nh == in.h && nw == in.w) return in;
  Image out(nh, nw);
  for (size_t y = 0; y < nh; ++y) {
    size_t sy = std::min(in.h - 1, y * in.h / nh);
    for (size_t x = 0; x < nw; ++x) {
      size_t sx = std::min(in.w - 1, x * in.w / nw);
      out.at(y, x) = in.at(sy, sx);
    }
  }
  return out;
}

void write_png_gray8(const std::string& path, const Image& img) {
  if (img.empty()) throw contract_error("write_png_gray8: empty image");
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw io_error("cannot open for writing: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw io_error("libpng init failed");
  }
  std::vector<png_byte> row(img.w);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("png write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.w),
               static_cast<png_uint_32>(img.h), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (size_t y = 0; y < img.h; ++y) {
    for (size_t x = 0; x < img.w; ++x) {
      const float v = std::clamp(img.at(y, x), 0.0f, 1.0f);
      row[x] = static_cast<png_byte>(std::lround(v * 255.0f));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png_gray8(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw io_error("cannot open: " + path);
  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 ||
      png_sig_cmp(header, 0, 8) != 0) {
    throw data_error("not a PNG file: " + path);
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw data_error("png decode failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  // Fold everything to 8-bit grayscale without alpha.
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray(png, 1, -1.0, -1.0);
  }
  png_read_update_info(png, info);

  const size_t h = png_get_image_height(png, info);
  const size_t w = png_get_image_width(png, info);
  Image out(h, w);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  for (size_t y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (size_t x = 0; x < w; ++x)
      out.at(y, x) = static_cast<float>(row[x]) / 255.0f;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace nuqta
