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
// The full line recognizer: backbone -> sequence head -> per-step log class
// scores, plus the checkpoint round trip. Checkpoints are little-endian
// binary with magic bytes, a format version, the charset block, the blank
// index, a config echo and a named shape table, so a checkpoint alone is
// enough to reconstruct the model.

#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "nuqta/backbone.hpp"
#include "nuqta/config.hpp"
#include "nuqta/dataset.hpp"
#include "nuqta/seqhead.hpp"

namespace nuqta {

struct ModelConfig {
  std::string backbone = "unet";  // unet | hrnet | lowres-baseline
  size_t unet_base_channels = 16;
  std::array<size_t, 4> hrnet_widths{16, 32, 64, 128};
  size_t hrnet_blocks = 2;
  std::array<size_t, 4> lowres_channels{8, 16, 32, 32};
  size_t hidden = 256;
  size_t dropout_passes = 5;
  double dropout_fraction = 0.5;
  size_t height = 32;  // training line height

  static ModelConfig from_config(const Config& cfg);
  void to_config(Config& cfg) const;
};

template <class T>
class Recognizer {
 public:
  Recognizer(const ModelConfig& cfg, size_t charset_size, uint64_t init_seed);

  // Per-step [N, K+1] log-probabilities for a batch of line images.
  Sequence<T> forward(const Tensor<T>& images, bool training, Rng& rng);
  Tensor<T> features(const Tensor<T>& images, bool training) {
    return backbone->forward(images, training);
  }

  size_t out_width(size_t padded_width) const {
    return backbone->out_width(padded_width);
  }
  size_t width_divisor() const { return backbone->width_divisor(); }
  size_t charset_size() const { return charset_size_; }
  const ModelConfig& config() const { return cfg_; }
  ParamSet<T>& params() { return params_; }

  std::unique_ptr<Backbone<T>> backbone;
  SeqHead<T> head;

 private:
  ModelConfig cfg_;
  size_t charset_size_ = 0;
  ParamSet<T> params_;
};

template <class T>
std::unique_ptr<Backbone<T>> make_backbone(const ModelConfig& cfg, Rng& rng);

// ---- checkpoints -------------------------------------------------------------

inline constexpr char kCheckpointMagic[4] = {'N', 'Q', 'C', 'P'};
inline constexpr uint32_t kCheckpointVersion = 1;

template <class T>
void save_checkpoint(const std::string& path, Recognizer<T>& model,
                     const CharSet& charset);

struct CheckpointHeader {
  uint8_t dtype = 0;  // sizeof(T): 4 or 8
  ModelConfig model;
  CharSet charset;
};
CheckpointHeader peek_checkpoint(const std::string& path);

// Rebuilds the model from the embedded config and parameter table. Refuses
// files with a bad magic, version, or mismatched shapes.
template <class T>
std::unique_ptr<Recognizer<T>> load_checkpoint(const std::string& path,
                                               CharSet* charset_out = nullptr);

}  // namespace nuqta
