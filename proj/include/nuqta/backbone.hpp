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
// Feature extraction backbones. All of them consume a grayscale line image
// [N,1,H,W] and emit a feature map whose width carries the time axis:
//
//   unet            five-resolution encoder/decoder with skip connections;
//                   the decoder returns to full input resolution.
//   hrnet           four stages of parallel multi-resolution streams with
//                   repeated fusion; the head upsamples every stream to the
//                   highest resolution and concatenates.
//   lowres-baseline a conventional stride-reducing stack whose final map is
//                   1/16 height and 1/4 width, with no upsampling. Serves as
//                   the control model for the dot-discrimination experiment.

#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "nuqta/nn.hpp"

namespace nuqta {

template <class T>
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual Tensor<T> forward(const Tensor<T>& image, bool training) = 0;
  virtual size_t out_channels() const = 0;
  // Time steps produced for a given (already padded) input width.
  virtual size_t out_width(size_t in_width) const = 0;
  // Input H and W must be multiples of these.
  virtual size_t height_divisor() const = 0;
  virtual size_t width_divisor() const = 0;
  virtual void register_into(ParamSet<T>& ps, const std::string& prefix) = 0;
  virtual std::string kind() const = 0;
};

// ---- unet -------------------------------------------------------------------

struct UNetConfig {
  size_t in_channels = 1;
  size_t base_channels = 16;
  // Channel schedule per resolution level: base * mult[r-1] for r in 1..5.
  std::array<size_t, 5> channel_mult{1, 2, 4, 6, 8};

  size_t channels(size_t level) const {
    return base_channels * channel_mult[level - 1];
  }
};

template <class T>
class UNetBackbone final : public Backbone<T> {
 public:
  UNetBackbone(const UNetConfig& cfg, Rng& rng);

  // Two conv+norm+relu blocks, then a 2x2 max-pool; extents exactly halved.
  // The pre-pool map (the skip M_r) is written to *skip when given.
  Tensor<T> encode_step(size_t level, const Tensor<T>& f_prev, bool training,
                        Tensor<T>* skip = nullptr);
  // Upsample by 2, concatenate the skip, then two conv+norm+relu blocks.
  Tensor<T> decode_step(size_t level, const Tensor<T>& f_next,
                        const Tensor<T>& m_r, bool training);

  Tensor<T> forward(const Tensor<T>& image, bool training) override;
  size_t out_channels() const override { return cfg_.channels(1); }
  size_t out_width(size_t in_width) const override { return in_width; }
  size_t height_divisor() const override { return 16; }
  size_t width_divisor() const override { return 16; }
  void register_into(ParamSet<T>& ps, const std::string& prefix) override;
  std::string kind() const override { return "unet"; }

  const UNetConfig& config() const { return cfg_; }

  struct DoubleConv {
    ConvBlock<T> c1, c2;
    Tensor<T> operator()(const Tensor<T>& x, bool training) {
      return c2(c1(x, training), training);
    }
  };
  std::array<DoubleConv, 5> enc;  // enc[r-1] at resolution r
  std::array<DoubleConv, 4> dec;  // dec[r-1] at resolution r

 private:
  UNetConfig cfg_;
};

// ---- hrnet ------------------------------------------------------------------

struct HRNetConfig {
  size_t in_channels = 1;
  // Stream widths for r = 1..4; widths double as resolution halves.
  std::array<size_t, 4> widths{16, 32, 64, 128};
  size_t blocks_per_stream = 2;
};

template <class T>
class HRNetBackbone final : public Backbone<T> {
 public:
  HRNetBackbone(const HRNetConfig& cfg, Rng& rng);

  // f_ir: identity for i == r, strided 3x3 convolutions for i < r, 1x1 conv
  // plus bilinear upsampling for i > r. Indices are 1-based like the stage
  // and resolution indices.
  Tensor<T> transform(size_t stage, size_t i, size_t r, const Tensor<T>& in,
                      bool training);
  // Fuses the I input streams of the given stage into its output streams
  // (I+1 of them; the final stage keeps 4) and applies relu to each sum.
  std::vector<Tensor<T>> fuse_streams(const std::vector<Tensor<T>>& streams,
                                      size_t stage, bool training);

  Tensor<T> forward(const Tensor<T>& image, bool training) override;
  size_t out_channels() const override;
  size_t out_width(size_t in_width) const override { return in_width; }
  size_t height_divisor() const override { return 8; }
  size_t width_divisor() const override { return 8; }
  void register_into(ParamSet<T>& ps, const std::string& prefix) override;
  std::string kind() const override { return "hrnet"; }

  const HRNetConfig& config() const { return cfg_; }
  static size_t out_stream_count(size_t stage) {
    return stage < 4 ? stage + 1 : 4;
  }

  struct ResidualBlock {
    Conv2dLayer<T> c1, c2;
    BatchNorm2dLayer<T> b1, b2;
    Tensor<T> operator()(const Tensor<T>& x, bool training) {
      Tensor<T> y = relu(b1(c1(x), training));
      y = b2(c2(y), training);
      return relu(add(y, x));
    }
  };
  // One conv+bn unit of a transform path.
  struct TransformUnit {
    Conv2dLayer<T> conv;
    BatchNorm2dLayer<T> bn;
  };
  struct Transform {
    std::vector<TransformUnit> units;  // empty for i == r
    size_t upsample_factor = 1;        // 2^(i-r) when i > r
  };
  struct Stage {
    // blocks[r-1]: residual chain of input stream r.
    std::vector<std::vector<ResidualBlock>> blocks;
    // fuse[r'-1][i-1]: transform from input stream i to output stream r'.
    std::vector<std::vector<Transform>> fuse;
  };

  ConvBlock<T> stem1, stem2;
  std::array<Stage, 4> stages;

 private:
  HRNetConfig cfg_;
};

// ---- lowres baseline ----------------------------------------------------------

struct LowresConfig {
  size_t in_channels = 1;
  std::array<size_t, 4> channels{8, 16, 32, 32};
};

template <class T>
class LowresBackbone final : public Backbone<T> {
 public:
  LowresBackbone(const LowresConfig& cfg, Rng& rng);

  Tensor<T> forward(const Tensor<T>& image, bool training) override;
  size_t out_channels() const override { return cfg_.channels[3]; }
  size_t out_width(size_t in_width) const override { return in_width / 4; }
  size_t height_divisor() const override { return 16; }
  size_t width_divisor() const override { return 4; }
  void register_into(ParamSet<T>& ps, const std::string& prefix) override;
  std::string kind() const override { return "lowres-baseline"; }

  std::array<ConvBlock<T>, 4> blocks;

 private:
  LowresConfig cfg_;
};

}  // namespace nuqta
