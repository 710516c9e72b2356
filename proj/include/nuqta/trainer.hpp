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
// Training loop: AdaDelta with decay 0.95 and lr 1.0, global-norm gradient
// clipping at 5, He-initialized weights, shuffled batches, periodic
// accuracy evaluation and best-checkpoint saving. Line images are resized
// to a fixed height with aspect-preserving width, right-padded to the batch
// maximum; CTC input lengths track the true widths.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nuqta/ctc.hpp"
#include "nuqta/dataset.hpp"
#include "nuqta/metrics.hpp"
#include "nuqta/model.hpp"

namespace nuqta {

struct TrainConfig {
  size_t batch_size = 32;
  double clip = 5.0;
  double lr = 1.0;
  double rho = 0.95;
  double eps = 1e-6;
  size_t max_iters = 3000;
  size_t eval_every = 100;
  uint64_t seed = 0;
  // Stop as soon as the evaluated accuracy reaches this (if >= 0).
  double stop_accuracy = -1.0;

  static TrainConfig from_config(const Config& cfg);
  void to_config(Config& cfg) const;
};

// One AdaDelta update on a single parameter:
//   Eg2   <- rho Eg2 + (1-rho) g^2
//   dx    =  -(sqrt(Edx2 + eps) / sqrt(Eg2 + eps)) g
//   Edx2  <- rho Edx2 + (1-rho) dx^2
//   param += lr dx
template <class T>
void adadelta_step(Tensor<T>& param, std::vector<T>& eg2, std::vector<T>& edx2,
                   double rho, double eps, double lr);

template <class T>
class AdaDelta {
 public:
  AdaDelta(ParamSet<T>& params, double rho, double eps, double lr);
  // Applies one update from the accumulated gradients, then clears them.
  void step(ParamSet<T>& params);

  double rho, eps, lr;

 private:
  std::vector<std::vector<T>> eg2_, edx2_;
};

// Scales all gradients so their combined L2 norm is at most `magnitude`;
// returns the pre-clip norm.
template <class T>
double clip_gradients(ParamSet<T>& params, double magnitude);

// A padded batch: images [N,1,H,Wmax] with ink high (1 - gray), plus the
// per-sample padded widths the CTC input lengths derive from.
template <class T>
struct Batch {
  Tensor<T> images;
  std::vector<size_t> widths;
  std::vector<const Sample*> samples;
};

template <class T>
Batch<T> make_batch(const std::vector<const Sample*>& samples,
                    size_t target_height, size_t width_divisor);

// Mean CTC loss over the batch.
template <class T>
Tensor<T> batch_ctc_loss(Recognizer<T>& model, const Batch<T>& batch,
                         const Sequence<T>& log_probs);

// Greedy-decoded predictions for a whole dataset (eval mode).
template <class T>
std::vector<EvalPair> predict_dataset(Recognizer<T>& model,
                                      const Dataset& data, size_t batch_size,
                                      size_t beam_width = 0);

struct TrainStats {
  double best_accuracy = -1.0;
  size_t iters_run = 0;
  std::string checkpoint_path;
  std::string log_path;
};

// Trains in place; logs `iter<TAB>loss[<TAB>accuracy]` lines to
// out_dir/train.log and writes the best-accuracy checkpoint to
// out_dir/model.ckpt. Accuracy is evaluated on val (or on the training set
// when val is null). Aborts with numeric_error naming the batch indices if
// the loss goes non-finite.
template <class T>
TrainStats train(Recognizer<T>& model, const Dataset& train_set,
                 const Dataset* val_set, const TrainConfig& cfg,
                 const std::string& out_dir);

}  // namespace nuqta
