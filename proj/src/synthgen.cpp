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

#include "nuqta/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace nuqta {

size_t GlyphBitmap::ink_count() const {
  size_t n = 0;
  for (uint8_t v : ink) n += v;
  return n;
}

const GlyphSpec& GlyphAtlas::spec(uint32_t ch) const {
  auto it = glyphs.find(ch);
  if (it == glyphs.end()) {
    throw data_error("no glyph for character '" + utf8_encode_one(ch) + "'");
  }
  return it->second;
}

// ---- glyph drawing ----------------------------------------------------------

namespace {

void stamp_disc(GlyphBitmap& bm, double cy, double cx, double r) {
  const ptrdiff_t y0 = static_cast<ptrdiff_t>(std::floor(cy - r));
  const ptrdiff_t y1 = static_cast<ptrdiff_t>(std::ceil(cy + r));
  const ptrdiff_t x0 = static_cast<ptrdiff_t>(std::floor(cx - r));
  const ptrdiff_t x1 = static_cast<ptrdiff_t>(std::ceil(cx + r));
  for (ptrdiff_t y = y0; y <= y1; ++y) {
    for (ptrdiff_t x = x0; x <= x1; ++x) {
      if (y < 0 || x < 0) continue;
      const double dy = y - cy, dx = x - cx;
      if (dy * dy + dx * dx <= r * r)
        bm.set(static_cast<size_t>(y), static_cast<size_t>(x));
    }
  }
}

void thick_line(GlyphBitmap& bm, double y0, double x0, double y1, double x1,
                double r) {
  const double len = std::hypot(y1 - y0, x1 - x0);
  const int steps = std::max(1, static_cast<int>(std::ceil(len * 3)));
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    stamp_disc(bm, y0 + t * (y1 - y0), x0 + t * (x1 - x0), r);
  }
}

void circle_outline(GlyphBitmap& bm, double cy, double cx, double r,
                    double thickness) {
  for (size_t y = 0; y < bm.h; ++y) {
    for (size_t x = 0; x < bm.w; ++x) {
      const double d = std::hypot(static_cast<double>(y) - cy,
                                  static_cast<double>(x) - cx);
      if (std::abs(d - r) <= thickness / 2) bm.set(y, x);
    }
  }
}

// Eight visually distinct base strokes in a 32x16 em cell. The body sits in
// y ~ [6, 22] with the connecting baseline band at y in [20, 22].
void draw_base_shape(GlyphBitmap& bm, int shape) {
  const double r = 1.1;
  switch (shape) {
    case 0:  // open cup
      thick_line(bm, 12, 4, 19, 4, r);
      thick_line(bm, 12, 12, 19, 12, r);
      thick_line(bm, 20, 4, 20, 12, r);
      break;
    case 1:  // tall stick
      thick_line(bm, 6, 8, 21, 8, r);
      break;
    case 2:  // slash
      thick_line(bm, 8, 12, 20, 4, r);
      break;
    case 3:  // ring
      circle_outline(bm, 16, 8, 5.0, 2.2);
      break;
    case 4:  // hook
      thick_line(bm, 8, 11, 20, 11, r);
      thick_line(bm, 20, 5, 20, 11, r);
      break;
    case 5:  // wave
      thick_line(bm, 20, 2, 13, 6, r);
      thick_line(bm, 13, 6, 20, 10, r);
      thick_line(bm, 20, 10, 13, 14, r);
      break;
    case 6:  // arch
      thick_line(bm, 14, 4, 21, 4, r);
      thick_line(bm, 14, 12, 21, 12, r);
      thick_line(bm, 13, 4, 13, 12, r);
      break;
    case 7:  // loop with tail
      circle_outline(bm, 13, 6, 3.2, 2.0);
      thick_line(bm, 15, 8, 21, 14, r);
      break;
    default:
      throw contract_error("unknown base shape " + std::to_string(shape));
  }
}

void draw_dots(GlyphBitmap& bm, int count, DotPlacement placement) {
  if (count == 0 || placement == DotPlacement::none) return;
  const double cy = placement == DotPlacement::above ? 3.5 : 27.5;
  const double radius = 1.5;
  std::vector<double> xs;
  if (count == 1) {
    xs = {8.0};
  } else if (count == 2) {
    xs = {5.0, 11.0};
  } else {
    xs = {4.0, 8.0, 12.0};
  }
  for (double cx : xs) stamp_disc(bm, cy, cx, radius);
}

// Connection stubs on the joining side(s): rendering is right to left, so
// an initial form joins on its left edge, a final form on its right.
void draw_stubs(GlyphBitmap& bm, GlyphForm f) {
  const bool left = f == GlyphForm::initial || f == GlyphForm::medial;
  const bool right = f == GlyphForm::final || f == GlyphForm::medial;
  for (size_t y = 20; y <= 22; ++y) {
    if (left)
      for (size_t x = 0; x < 5; ++x) bm.set(y, x);
    if (right)
      for (size_t x = bm.w - 5; x < bm.w; ++x) bm.set(y, x);
  }
}

GlyphSpec make_letter(uint32_t ch, int base, int dots) {
  GlyphSpec g;
  g.ch = ch;
  g.base_shape = base;
  g.dot_count = dots;
  g.placement = dots == 0 ? DotPlacement::none
                          : (base % 2 == 0 ? DotPlacement::above
                                           : DotPlacement::below);
  g.joins = true;
  g.advance = 16;
  for (int f = 0; f < 4; ++f) {
    GlyphBitmap bm(32, g.advance);
    draw_base_shape(bm, base);
    draw_dots(bm, dots, g.placement);
    draw_stubs(bm, static_cast<GlyphForm>(f));
    g.forms[f] = std::move(bm);
  }
  return g;
}

}  // namespace

GlyphAtlas GlyphAtlas::builtin() {
  GlyphAtlas atlas;
  atlas.em_height = 32;
  for (int k = 0; k < 24; ++k) {
    const uint32_t ch = static_cast<uint32_t>('a' + k);
    atlas.order.push_back(ch);
    atlas.glyphs[ch] = make_letter(ch, k / 3, k % 3);
  }
  GlyphSpec space;
  space.ch = ' ';
  space.base_shape = -1;
  space.joins = false;
  space.advance = 10;
  for (int f = 0; f < 4; ++f) space.forms[f] = GlyphBitmap(32, space.advance);
  atlas.order.push_back(' ');
  atlas.glyphs[' '] = space;
  return atlas;
}

// ---- line composition -------------------------------------------------------

namespace {

struct Placement {
  const GlyphSpec* spec;
  GlyphForm form;
  size_t left;  // em pixels from the image's left edge
};

struct Layout {
  std::vector<Placement> placements;
  size_t width;  // em pixels
};

Layout layout_line(const LineSpec& spec, const GlyphAtlas& atlas) {
  if (spec.text.empty()) throw contract_error("render_line: empty text");
  const size_t m = spec.text.size();
  std::vector<const GlyphSpec*> glyphs(m);
  double max_overlap = 1.0;
  for (size_t i = 0; i < m; ++i) {
    glyphs[i] = &atlas.spec(spec.text[i]);
    max_overlap = std::min(max_overlap, glyphs[i]->max_overlap);
  }
  if (spec.overlap < 0 || spec.overlap > max_overlap) {
    throw contract_error("render_line: overlap " + std::to_string(spec.overlap) +
                         " outside [0, " + std::to_string(max_overlap) + "]");
  }

  // Positional variant from the neighbors inside a connected word.
  std::vector<GlyphForm> forms(m, GlyphForm::isolated);
  for (size_t i = 0; i < m; ++i) {
    if (!glyphs[i]->joins) continue;
    const bool prev = i > 0 && glyphs[i - 1]->joins;
    const bool next = i + 1 < m && glyphs[i + 1]->joins;
    forms[i] = prev ? (next ? GlyphForm::medial : GlyphForm::final)
                    : (next ? GlyphForm::initial : GlyphForm::isolated);
  }

  // Overlap applies between joined neighbors: the later glyph is shifted
  // toward the earlier one by overlap * advance(earlier).
  std::vector<size_t> shrink(m, 0);  // shrink[i]: overlap between i and i+1
  size_t width = 0;
  for (size_t i = 0; i < m; ++i) {
    width += glyphs[i]->advance;
    if (i + 1 < m && glyphs[i]->joins && glyphs[i + 1]->joins) {
      shrink[i] = static_cast<size_t>(
          std::llround(spec.overlap * static_cast<double>(glyphs[i]->advance)));
      width -= shrink[i];
    }
  }

  // Right-to-left: the logically first glyph's right edge is the image's
  // right edge.
  Layout out;
  out.width = width;
  out.placements.resize(m);
  size_t left = width - glyphs[0]->advance;
  out.placements[0] = {glyphs[0], forms[0], left};
  for (size_t i = 1; i < m; ++i) {
    left = left + shrink[i - 1] - glyphs[i]->advance;
    out.placements[i] = {glyphs[i], forms[i], left};
  }
  return out;
}

}  // namespace

size_t line_width(const LineSpec& spec, const GlyphAtlas& atlas) {
  return layout_line(spec, atlas).width;
}

RenderResult render_line(const LineSpec& spec, const GlyphAtlas& atlas) {
  const Layout layout = layout_line(spec, atlas);
  const size_t em = atlas.em_height;

  // Binary ink mask at em scale; overlapping glyph ink simply unions.
  GlyphBitmap mask(em, layout.width);
  for (const Placement& p : layout.placements) {
    const GlyphBitmap& bm = p.spec->form(p.form);
    for (size_t y = 0; y < bm.h && y < em; ++y)
      for (size_t x = 0; x < bm.w; ++x)
        if (bm.at(y, x)) mask.set(y, p.left + x);
  }

  Image img(em, layout.width);
  for (size_t i = 0; i < mask.ink.size(); ++i) {
    img.px[i] =
        mask.ink[i] ? static_cast<float>(spec.ink)
                    : static_cast<float>(spec.background);
  }
  if (spec.height != em) {
    const size_t nw = std::max<size_t>(
        1, static_cast<size_t>(std::llround(static_cast<double>(layout.width) *
                                            spec.height / em)));
    img = resize_nearest(img, spec.height, nw);
  }
  return RenderResult{std::move(img), spec.text};
}

// ---- augmentation -----------------------------------------------------------

namespace {

float border_fill(const Image& img) {
  return (img.at(0, 0) + img.at(0, img.w - 1) + img.at(img.h - 1, 0) +
          img.at(img.h - 1, img.w - 1)) /
         4.0f;
}

// Bilinear sample with a constant fill outside the image.
float sample_or_fill(const Image& in, double fy, double fx, float fill) {
  if (fy <= -1.0 || fx <= -1.0 || fy >= static_cast<double>(in.h) ||
      fx >= static_cast<double>(in.w)) {
    return fill;
  }
  const ptrdiff_t y0 = static_cast<ptrdiff_t>(std::floor(fy));
  const ptrdiff_t x0 = static_cast<ptrdiff_t>(std::floor(fx));
  const double wy = fy - std::floor(fy);
  const double wx = fx - std::floor(fx);
  const auto px = [&](ptrdiff_t y, ptrdiff_t x) -> double {
    if (y < 0 || x < 0 || y >= static_cast<ptrdiff_t>(in.h) ||
        x >= static_cast<ptrdiff_t>(in.w)) {
      return fill;
    }
    return in.at(static_cast<size_t>(y), static_cast<size_t>(x));
  };
  const double v0 = px(y0, x0) + wx * (px(y0, x0 + 1) - px(y0, x0));
  const double v1 = px(y0 + 1, x0) + wx * (px(y0 + 1, x0 + 1) - px(y0 + 1, x0));
  return static_cast<float>(v0 + wy * (v1 - v0));
}

}  // namespace

Image augment(const Image& img, const AugmentationConfig& cfg, Rng& rng) {
  Image out = img;

  // Geometry first.
  if (cfg.resample) {
    const double s = rng.uniform(cfg.resample_lo, cfg.resample_hi);
    const size_t sh = std::max<size_t>(2, static_cast<size_t>(std::llround(out.h * s)));
    const size_t sw = std::max<size_t>(2, static_cast<size_t>(std::llround(out.w * s)));
    if (sh != out.h || sw != out.w) {
      out = resize_bilinear(resize_bilinear(out, sh, sw), img.h, img.w);
    }
  }
  if (cfg.stretch) {
    const double f = rng.uniform(cfg.stretch_lo, cfg.stretch_hi);
    const size_t nw = std::max<size_t>(4, static_cast<size_t>(std::llround(out.w * f)));
    out = resize_bilinear(out, out.h, nw);
  }
  if (cfg.rotate) {
    const double deg = rng.uniform(cfg.rotate_lo, cfg.rotate_hi);
    const double th = deg * M_PI / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    const double cy = (static_cast<double>(out.h) - 1) / 2;
    const double cx = (static_cast<double>(out.w) - 1) / 2;
    const float fill = border_fill(out);
    Image rot(out.h, out.w);
    for (size_t y = 0; y < out.h; ++y) {
      for (size_t x = 0; x < out.w; ++x) {
        const double dy = static_cast<double>(y) - cy;
        const double dx = static_cast<double>(x) - cx;
        rot.at(y, x) = sample_or_fill(out, cy + c * dy - s * dx,
                                      cx + s * dy + c * dx, fill);
      }
    }
    out = std::move(rot);
  }
  if (cfg.translate) {
    const ptrdiff_t dy = static_cast<ptrdiff_t>(
        std::llround(rng.uniform(-cfg.translate_max, cfg.translate_max)));
    const ptrdiff_t dx = static_cast<ptrdiff_t>(
        std::llround(rng.uniform(-cfg.translate_max, cfg.translate_max)));
    if (dy != 0 || dx != 0) {
      const float fill = border_fill(out);
      Image moved(out.h, out.w, fill);
      for (ptrdiff_t y = 0; y < static_cast<ptrdiff_t>(out.h); ++y) {
        for (ptrdiff_t x = 0; x < static_cast<ptrdiff_t>(out.w); ++x) {
          const ptrdiff_t sy = y - dy, sx = x - dx;
          if (sy >= 0 && sy < static_cast<ptrdiff_t>(out.h) && sx >= 0 &&
              sx < static_cast<ptrdiff_t>(out.w)) {
            moved.at(y, x) = out.at(sy, sx);
          }
        }
      }
      out = std::move(moved);
    }
  }

  // Noise second.
  if (cfg.gauss_noise) {
    const double sigma = rng.uniform(cfg.noise_lo, cfg.noise_hi);
    for (float& v : out.px) v += static_cast<float>(rng.normal() * sigma);
  }
  if (cfg.salt_pepper) {
    const double frac = rng.uniform(cfg.sp_lo, cfg.sp_hi);
    for (float& v : out.px) {
      const double u = rng.uniform();
      if (u < frac / 2) {
        v = 0.0f;
      } else if (u < frac) {
        v = 1.0f;
      }
    }
  }

  // Border crop third (cropped margins are resampled back to size).
  if (cfg.border_crop && cfg.crop_max > 0) {
    const size_t top = rng.below(cfg.crop_max + 1);
    const size_t bottom = rng.below(cfg.crop_max + 1);
    const size_t lft = rng.below(cfg.crop_max + 1);
    const size_t rgt = rng.below(cfg.crop_max + 1);
    if ((top || bottom || lft || rgt) && out.h > top + bottom + 4 &&
        out.w > lft + rgt + 4) {
      Image cropped(out.h - top - bottom, out.w - lft - rgt);
      for (size_t y = 0; y < cropped.h; ++y)
        for (size_t x = 0; x < cropped.w; ++x)
          cropped.at(y, x) = out.at(y + top, x + lft);
      out = resize_bilinear(cropped, out.h, out.w);
    }
  }

  // Contrast stretch last.
  if (cfg.contrast) {
    float lo = out.px[0], hi = out.px[0];
    for (float v : out.px) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi > lo) {
      for (float& v : out.px) v = (v - lo) / (hi - lo);
    }
  }

  for (float& v : out.px) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

// ---- text sampling ----------------------------------------------------------

std::vector<uint32_t> sample_text(
    const std::vector<std::vector<uint32_t>>& vocab, size_t min_words,
    size_t max_words, Rng& rng) {
  if (vocab.empty()) throw contract_error("sample_text: empty vocabulary");
  if (min_words < 1 || max_words < min_words)
    throw contract_error("sample_text: bad word count range");
  const size_t n = min_words + rng.below(max_words - min_words + 1);
  std::vector<uint32_t> text;
  for (size_t i = 0; i < n; ++i) {
    if (i) text.push_back(' ');
    const auto& w = vocab[rng.below(vocab.size())];
    text.insert(text.end(), w.begin(), w.end());
  }
  return text;
}

std::vector<std::vector<uint32_t>> default_vocab(const GlyphAtlas& atlas) {
  std::vector<uint32_t> letters;
  for (uint32_t ch : atlas.order)
    if (ch != ' ') letters.push_back(ch);
  if (letters.empty()) throw contract_error("default_vocab: empty atlas");
  std::vector<std::vector<uint32_t>> vocab;
  const size_t n = letters.size();
  // One covering word per letter, then filler words for variety. The list is
  // a fixed function of the atlas, independent of any dataset seed.
  for (size_t k = 0; k < n; ++k) {
    vocab.push_back({letters[k], letters[(k + 7) % n], letters[(k + 13) % n]});
  }
  Rng rng(0x6e71a5);
  for (int i = 0; i < 40; ++i) {
    std::vector<uint32_t> w(2 + rng.below(4));
    for (auto& c : w) c = letters[rng.below(n)];
    vocab.push_back(std::move(w));
  }
  return vocab;
}

// ---- dataset generation -------------------------------------------------------

namespace {

struct Item {
  std::vector<uint32_t> text;
  Image img;
};

Item render_sample(uint64_t seed_i, const GenerateConfig& cfg,
                   const GlyphAtlas& atlas,
                   const std::vector<std::vector<uint32_t>>& vocab,
                   const std::vector<uint32_t>* forced_text) {
  Rng rng(seed_i);
  Item item;
  item.text = forced_text ? *forced_text
                          : sample_text(vocab, cfg.min_words, cfg.max_words, rng);
  LineSpec line;
  line.text = item.text;
  line.overlap = rng.uniform(cfg.overlap_lo, cfg.overlap_hi);
  line.height = cfg.height;
  line.ink = rng.uniform(cfg.ink_lo, cfg.ink_hi);
  line.background = rng.uniform(cfg.background_lo, cfg.background_hi);
  RenderResult r = render_line(line, atlas);
  item.img = cfg.aug.any() ? augment(r.image, cfg.aug, rng) : std::move(r.image);
  return item;
}

std::string echo_text(const GenerateConfig& cfg) {
  if (!cfg.config_echo.empty()) return cfg.config_echo;
  std::ostringstream os;
  os << "[generate]\n";
  os << "n = " << cfg.n << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "min_words = " << cfg.min_words << "\n";
  os << "max_words = " << cfg.max_words << "\n";
  os << "height = " << cfg.height << "\n";
  os << "overlap = " << cfg.overlap_lo << ".." << cfg.overlap_hi << "\n";
  os << "augment = " << (cfg.aug.any() ? "on" : "off") << "\n";
  return os.str();
}

}  // namespace

void generate_dataset(const std::string& dir, const GenerateConfig& cfg,
                      const GlyphAtlas& atlas, size_t threads) {
  if (cfg.n < 1) throw contract_error("generate_dataset: n must be >= 1");
  const auto vocab = cfg.vocab.empty() ? default_vocab(atlas) : cfg.vocab;
  for (const auto& w : vocab) {
    if (w.empty()) throw data_error("vocabulary contains an empty word");
    for (uint32_t ch : w) (void)atlas.spec(ch);  // throws naming the char
  }

  std::error_code ec;
  fs::create_directories(fs::path(dir) / "images", ec);
  if (ec) throw io_error("cannot create dataset directory: " + dir);

  std::vector<Item> items(cfg.n);
  const auto render_range = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i)
      items[i] = render_sample(derive_seed(cfg.seed, i), cfg, atlas, vocab,
                               nullptr);
  };
  if (threads <= 1 || cfg.n < 2 * threads) {
    render_range(0, cfg.n);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (cfg.n + threads - 1) / threads;
    for (size_t t = 0; t < threads; ++t) {
      const size_t lo = t * chunk, hi = std::min(cfg.n, lo + chunk);
      if (lo < hi) pool.emplace_back(render_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  // Coverage resampling: every reachable charset character must appear in at
  // least one line. Replacements walk backwards from the last sample.
  std::set<uint32_t> reachable;
  for (const auto& w : vocab) reachable.insert(w.begin(), w.end());
  if (cfg.max_words >= 2) reachable.insert(' ');
  for (size_t pass = 0; pass < cfg.n; ++pass) {
    std::set<uint32_t> present;
    for (const auto& it : items) present.insert(it.text.begin(), it.text.end());
    uint32_t missing = 0;
    bool found = false;
    for (uint32_t ch : atlas.order) {
      if (reachable.count(ch) && !present.count(ch)) {
        missing = ch;
        found = true;
        break;
      }
    }
    if (!found) break;
    std::vector<uint32_t> forced;
    if (missing == ' ') {
      forced = vocab[0];
      forced.push_back(' ');
      forced.insert(forced.end(), vocab[1 % vocab.size()].begin(),
                    vocab[1 % vocab.size()].end());
    } else {
      for (const auto& w : vocab) {
        if (std::find(w.begin(), w.end(), missing) != w.end()) {
          forced = w;
          break;
        }
      }
    }
    items[cfg.n - 1 - pass] = render_sample(derive_seed(cfg.seed, cfg.n + pass),
                                            cfg, atlas, vocab, &forced);
  }

  std::ofstream labels(fs::path(dir) / "labels.tsv", std::ios::binary);
  if (!labels) throw io_error("cannot write labels.tsv under " + dir);
  for (size_t i = 0; i < cfg.n; ++i) {
    const std::string rel = "images/" + format_index6(i) + ".png";
    write_png_gray8((fs::path(dir) / rel).string(), items[i].img);
    labels << rel << "\t" << utf8_encode(items[i].text) << "\n";
  }
  labels.close();

  std::ofstream charset(fs::path(dir) / "charset.txt", std::ios::binary);
  for (uint32_t ch : atlas.order) charset << utf8_encode_one(ch) << "\n";
  charset.close();

  std::ofstream meta(fs::path(dir) / "meta.txt", std::ios::binary);
  meta << echo_text(cfg);
  meta.close();
}

}  // namespace nuqta
