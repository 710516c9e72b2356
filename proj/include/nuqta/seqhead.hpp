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
// Sequence modeling head: collapse the backbone feature map to a width-major
// sequence, regularize with temporal dropout, run two bidirectional LSTM
// layers whose per-step forward/backward states are combined by a learned
// linear map, and emit per-step log class scores (last class = CTC blank).

#pragma once

#include <vector>

#include "nuqta/nn.hpp"

namespace nuqta {

// A time-major sequence: element t is a [N, D] tensor.
template <class T>
using Sequence = std::vector<Tensor<T>>;

struct SeqHeadConfig {
  size_t hidden = 256;         // LSTM state size per direction
  size_t dropout_passes = 5;   // averaged parallel masks
  double dropout_fraction = 0.5;
};

// Mean over height, then one sequence step per feature-map column.
template <class T>
Sequence<T> collapse_height(const Tensor<T>& features);

// Training: average of `passes` masked copies, each zeroing exactly
// floor(T * fraction) whole timesteps chosen uniformly without replacement,
// survivors pre-scaled by 1/(1-fraction). Eval: identity. T < 2 in training
// degenerates to the identity and records a warning.
template <class T>
Sequence<T> temporal_dropout(const Sequence<T>& v, size_t passes,
                             double fraction, bool training, Rng& rng);
size_t temporal_dropout_degenerate_warnings();

template <class T>
struct LstmDirection {
  Tensor<T> w_ih;  // [D, 4H], gate order i,f,g,o
  Tensor<T> w_hh;  // [H, 4H]
  Tensor<T> b;     // [4H]

  LstmDirection() = default;
  LstmDirection(size_t input, size_t hidden, Rng& rng);
  // One step; h and c are [N, H] and are replaced.
  void step(const Tensor<T>& x, Tensor<T>& h, Tensor<T>& c) const;
  void register_into(ParamSet<T>& ps, const std::string& prefix);
};

template <class T>
struct BiLstmLayer {
  LstmDirection<T> fwd, bwd;
  // Per-step FC combine, split by direction so the two contributions are
  // added as one pairwise sum: h_t = hf_t * w_f + hb_t * w_b + bias. The
  // split keeps the reversal symmetry exact in floating point.
  Tensor<T> w_f, w_b;  // [H, out]
  Tensor<T> bias;      // [out]
  size_t hidden = 0;

  BiLstmLayer() = default;
  BiLstmLayer(size_t input, size_t hidden, size_t out, Rng& rng);
  Tensor<T> combine(const Tensor<T>& hf, const Tensor<T>& hb) const;
  Sequence<T> forward(const Sequence<T>& xs) const;
  void register_into(ParamSet<T>& ps, const std::string& prefix);
};

template <class T>
class SeqHead {
 public:
  SeqHead() = default;
  SeqHead(size_t input_dim, const SeqHeadConfig& cfg, size_t charset_size,
          Rng& rng);

  // Per-step [N, K+1] log-probabilities (rows normalized).
  Sequence<T> forward(const Tensor<T>& features, bool training, Rng& rng);
  // Context modeling only (two stacked BiLSTM layers).
  Sequence<T> dbilstm(const Sequence<T>& v) const;
  Sequence<T> classify(const Sequence<T>& h) const;

  size_t charset_size() const { return charset_size_; }
  void register_into(ParamSet<T>& ps, const std::string& prefix);

  BiLstmLayer<T> layer1, layer2;
  LinearLayer<T> classifier;  // hidden -> K+1

 private:
  SeqHeadConfig cfg_;
  size_t charset_size_ = 0;
};

}  // namespace nuqta
