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
//
// Grayscale images in [0,1] plus the PNG round trip (8-bit grayscale on
// disk) and the resampling helpers shared by the generator, augmentation
// and dataset loading. Resampling uses the same half-pixel-center
// convention as the tensor ops.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nuqta {

struct Image {
  size_t h = 0, w = 0;
  std::vector<float> px;  // row-major, [0,1]

  Image() = default;
  Image(size_t h_, size_t w_, float fill = 0.0f)
      : h(h_), w(w_), px(h_ * w_, fill) {}

  float at(size_t y, size_t x) const { return px[y * w + x]; }
  float& at(size_t y, size_t x) { return px[y * w + x]; }
  bool empty() const { return px.empty(); }
};

Image resize_bilinear(const Image& in, size_t nh, size_t nw);
Image resize_nearest(const Image& in, size_t nh, size_t nw);

// 8-bit grayscale PNG, fixed encoder settings so identical pixels produce
// identical bytes.
void write_png_gray8(const std::string& path, const Image& img);
// Reads any PNG (palette, color, alpha, 16-bit) and folds it to grayscale.
Image read_png_gray8(const std::string& path);

}  // namespace nuqta
