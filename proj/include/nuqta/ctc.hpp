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
// Connectionist Temporal Classification: loss, gradient and decoding over
// a [T, K+1] log-probability matrix. The blank class is always the last
// index (K); all lattice math runs in the log domain.

#pragma once

#include <cstdint>
#include <vector>

#include "nuqta/tensor.hpp"

namespace nuqta {

struct CtcResult {
  double loss = 0.0;      // negative log-likelihood; +inf when infeasible
  bool feasible = false;  // a path collapsing to the target exists
};

// Forward-backward negative log-likelihood. logp is row-major [T, K1] with
// K1 = K + 1 classes, blank = K1 - 1. Targets hold class indices < K1 - 1.
CtcResult ctc_loss(const double* logp, size_t T, size_t K1,
                   const std::vector<int>& target);

// Gradient of ctc_loss with respect to the log-probability entries, treated
// as free variables (no row-sum constraint). dlogp must hold T*K1 values and
// is overwritten.
CtcResult ctc_grad(const double* logp, size_t T, size_t K1,
                   const std::vector<int>& target, double* dlogp);

// Tape-recorded CTC loss over the first valid_T rows of log_probs [T, K1].
// Rows past valid_T contribute nothing and receive zero gradient. Throws
// numeric_error when no feasible alignment exists.
template <class T>
Tensor<T> ctc_loss_op(const Tensor<T>& log_probs,
                      const std::vector<int>& target, size_t valid_T);

// Best-path decoding: per-step argmax, collapse consecutive repeats, then
// remove blanks, in that order.
std::vector<int> greedy_decode(const double* logp, size_t T, size_t K1);

// Prefix beam search over collapsed transcripts. With beam_width >= (K1)^T
// the search is exhaustive and returns the most probable collapsed
// transcript; beam_width = 1 need not coincide with greedy_decode.
std::vector<int> beam_decode(const double* logp, size_t T, size_t K1,
                             size_t beam_width);

// Convenience overloads for tensors shaped [T, K1].
template <class T>
std::vector<int> greedy_decode(const Tensor<T>& log_probs, size_t valid_T);
template <class T>
std::vector<int> beam_decode(const Tensor<T>& log_probs, size_t valid_T,
                             size_t beam_width);

}  // namespace nuqta
