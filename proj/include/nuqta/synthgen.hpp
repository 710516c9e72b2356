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
// Procedural text-line generator. Lines are composed right to left from a
// glyph atlas: each character picks its positional variant (isolated,
// initial, medial, final) from its neighbors inside a connected word, and
// consecutive glyphs advance with a configurable overlap so ink regions may
// intersect, mimicking a tightly cursive script.
//
// The built-in atlas is a 24-character synthetic alphabet arranged as
// 8 base shapes x {0,1,2} dots placed above or below, plus the word
// separator space. Characters sharing a base shape differ only in their
// dots, which is exactly the distinction the recognizer has to learn.
// Externally pre-shaped atlases can be substituted; text shaping itself is
// out of scope.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nuqta/common.hpp"
#include "nuqta/image.hpp"

namespace nuqta {

enum class DotPlacement { none, above, below };
enum class GlyphForm { isolated = 0, initial = 1, medial = 2, final = 3 };

struct GlyphBitmap {
  size_t h = 0, w = 0;
  std::vector<uint8_t> ink;  // 0 or 1

  GlyphBitmap() = default;
  GlyphBitmap(size_t h_, size_t w_) : h(h_), w(w_), ink(h_ * w_, 0) {}
  uint8_t at(size_t y, size_t x) const { return ink[y * w + x]; }
  void set(size_t y, size_t x) {
    if (y < h && x < w) ink[y * w + x] = 1;
  }
  size_t ink_count() const;
};

struct GlyphSpec {
  uint32_t ch = 0;
  int base_shape = -1;  // shared id; dots are the only difference within one
  int dot_count = 0;    // 0..3
  DotPlacement placement = DotPlacement::none;
  bool joins = false;   // connects to neighbors within a word
  size_t advance = 0;   // pen advance in em pixels
  double max_overlap = 0.45;
  std::array<GlyphBitmap, 4> forms;  // indexed by GlyphForm

  const GlyphBitmap& form(GlyphForm f) const {
    return forms[static_cast<size_t>(f)];
  }
};

struct GlyphAtlas {
  size_t em_height = 32;
  std::vector<uint32_t> order;  // charset order (defines class indices)
  std::map<uint32_t, GlyphSpec> glyphs;

  bool contains(uint32_t ch) const { return glyphs.count(ch) != 0; }
  const GlyphSpec& spec(uint32_t ch) const;

  // The 24-character dot-family alphabet ('a'..'x') plus ' '.
  static GlyphAtlas builtin();
};

struct LineSpec {
  std::vector<uint32_t> text;  // nonempty
  double overlap = 0.25;       // fraction of the earlier glyph's advance
  size_t height = 32;          // output image height in pixels
  double ink = 0.15;           // ink gray level
  double background = 0.85;    // background gray level
};

struct RenderResult {
  Image image;
  std::vector<uint32_t> ground_truth;  // equals LineSpec::text
};

// Composes the line right to left. Throws data_error naming the character
// when a glyph is missing, contract_error on empty text or overlap outside
// the permitted range.
RenderResult render_line(const LineSpec& spec, const GlyphAtlas& atlas);

// Pen-advance arithmetic only; the rendered image width for a given spec.
size_t line_width(const LineSpec& spec, const GlyphAtlas& atlas);

struct AugmentationConfig {
  bool resample = false;  // resolution jiggle: down then back up
  double resample_lo = 0.7, resample_hi = 1.0;
  bool stretch = false;  // horizontal stretch/compress
  double stretch_lo = 0.85, stretch_hi = 1.2;
  bool rotate = false;
  double rotate_lo = -3.0, rotate_hi = 3.0;  // degrees
  bool translate = false;
  double translate_max = 2.0;  // pixels, both axes
  bool gauss_noise = false;
  double noise_lo = 0.0, noise_hi = 0.05;
  bool salt_pepper = false;
  double sp_lo = 0.0, sp_hi = 0.02;
  bool border_crop = false;
  size_t crop_max = 2;  // pixels per side
  bool contrast = false;

  bool any() const {
    return resample || stretch || rotate || translate || gauss_noise ||
           salt_pepper || border_crop || contrast;
  }
};

// Applies the enabled sub-transforms in the fixed order geometry -> noise ->
// crop -> contrast, then clamps to [0,1]. Deterministic per rng state.
Image augment(const Image& img, const AugmentationConfig& cfg, Rng& rng);

// Uniform word draws joined by a single space.
std::vector<uint32_t> sample_text(
    const std::vector<std::vector<uint32_t>>& vocab, size_t min_words,
    size_t max_words, Rng& rng);

// Deterministic pseudo-word list covering every atlas character.
std::vector<std::vector<uint32_t>> default_vocab(const GlyphAtlas& atlas);

struct GenerateConfig {
  size_t n = 512;
  uint64_t seed = 0;
  size_t min_words = 1, max_words = 3;
  double overlap_lo = 0.10, overlap_hi = 0.35;
  size_t height = 32;
  double ink_lo = 0.02, ink_hi = 0.30;
  double background_lo = 0.70, background_hi = 0.98;
  AugmentationConfig aug;
  std::vector<std::vector<uint32_t>> vocab;  // empty -> default_vocab
  std::string config_echo;  // written verbatim into the meta file
};

// Writes images/{index:06}.png, labels.tsv, charset.txt and meta.txt under
// dir. Byte-identical for a fixed (seed, config); every reachable charset
// character appears in at least one line (coverage resampling). `threads`
// only parallelizes sample rendering; output bytes do not depend on it.
void generate_dataset(const std::string& dir, const GenerateConfig& cfg,
                      const GlyphAtlas& atlas, size_t threads = 1);

}  // namespace nuqta
