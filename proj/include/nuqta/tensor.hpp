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
// Dense row-major tensors with reverse-mode automatic differentiation.
//
// Two precision modes are provided through the element type: float for
// training speed, double for the verification suites (gradient checks need
// the headroom). There is no implicit broadcasting except bias-add and
// per-channel scale; every other op requires exact shape agreement, which
// keeps the backward rules auditable.
//
// Convention notes:
//  * upsample_bilinear uses half-pixel centers (align_corners = false):
//    src = (dst + 0.5) / factor - 0.5, clamped to the valid range.
//  * log_softmax_rows normalizes over the last axis of a 2-D tensor.
//  * dropout is inverted (survivors pre-scaled by 1/keep), so the eval path
//    equals the expectation of the train path.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "nuqta/common.hpp"

namespace nuqta {

using Shape = std::vector<size_t>;

size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {
template <class T>
struct Storage {
  Shape shape;
  std::vector<T> v;  // values, row-major
  std::vector<T> g;  // gradient; empty until first accumulation
  bool requires_grad = false;
};
}  // namespace detail

// Value-semantics handle onto shared storage. Tensors are immutable after
// forward construction except for gradient accumulation.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  // Leaf with requires_grad set; the usual way to make a parameter.
  static Tensor param(Shape shape, std::vector<T> values);

  bool defined() const { return s_ != nullptr; }
  const Shape& shape() const { return s_->shape; }
  size_t ndim() const { return s_->shape.size(); }
  size_t dim(size_t i) const { return s_->shape[i]; }
  size_t size() const { return s_->v.size(); }

  const T* data() const { return s_->v.data(); }
  T* data() { return s_->v.data(); }
  const std::vector<T>& values() const { return s_->v; }

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool b) { s_->requires_grad = b; }

  bool has_grad() const { return !s_->g.empty(); }
  // Gradient buffer, zero-allocated on first touch.
  T* grad();
  const std::vector<T>& grad_values() const;
  void zero_grad();

  // Scalar extraction; contract error unless size() == 1.
  T item() const;

  std::shared_ptr<detail::Storage<T>> storage() const { return s_; }

 private:
  std::shared_ptr<detail::Storage<T>> s_;
};

// Record of one training-step graph. Constructing a Tape makes it the active
// recorder for the current thread (nesting allowed, innermost wins); ops
// executed while a tape is active append their backward rule in topological
// order, so one reverse sweep visits each node exactly once.
template <class T>
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();
  void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }
  size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and runs the recorded rules in reverse,
  // accumulating (summing) into every requires_grad leaf.
  void backward(const Tensor<T>& loss);

 private:
  std::vector<std::function<void()>> nodes_;
  Tape* prev_ = nullptr;
  bool ran_ = false;
};

// Convenience: backward on the innermost active tape.
template <class T>
void backward(const Tensor<T>& loss) {
  if (!Tape<T>::active()) throw contract_error("backward: no active tape");
  Tape<T>::active()->backward(loss);
}

// When true (default), every forward primitive verifies its output is
// finite and throws numeric_error otherwise.
void set_finite_checks(bool on);
bool finite_checks();

// ---- primitives ------------------------------------------------------------

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& a, T c);
// Elementwise multiply by a constant mask (no gradient to the mask).
template <class T>
Tensor<T> apply_mask(const Tensor<T>& a, const std::vector<T>& mask);
template <class T>
Tensor<T> relu(const Tensor<T>& a);
template <class T>
Tensor<T> sigmoid(const Tensor<T>& a);
template <class T>
Tensor<T> tanh(const Tensor<T>& a);
template <class T>
Tensor<T> sum(const Tensor<T>& a);  // -> shape {1}

// a[m,k] x b[k,n] -> [m,n]
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// x[n,in] * w[in,out] + b[out] broadcast over rows.
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
// x[n,m] + b[m] broadcast over rows.
template <class T>
Tensor<T> bias_add_rows(const Tensor<T>& x, const Tensor<T>& b);

// x[N,C,H,W], k[F,C,kh,kw], bias[F].
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& k, const Tensor<T>& bias,
                 size_t stride, size_t padding);
template <class T>
Tensor<T> max_pool2x2(const Tensor<T>& x);
// Pools height only (2x1 window); companion for stride-reducing baselines.
template <class T>
Tensor<T> max_pool2x1(const Tensor<T>& x);
template <class T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, size_t factor);
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> adaptive_avg_pool_height(const Tensor<T>& x);

// Per-channel batch normalization over (N,H,W). Training mode normalizes
// with batch statistics (biased variance) and folds them into the running
// stats with the given momentum; eval mode uses the running stats.
template <class T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, std::vector<T>& running_mean,
                     std::vector<T>& running_var, bool training, T eps,
                     T momentum = T(0.1));

template <class T>
Tensor<T> log_softmax_rows(const Tensor<T>& x);  // x[n,k]

template <class T>
Tensor<T> slice_cols(const Tensor<T>& x, size_t c0, size_t c1);
template <class T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b);

// [N,C,1,W] -> W tensors of shape [N,C] (one tape node).
template <class T>
std::vector<Tensor<T>> unbind_width(const Tensor<T>& x);
// Row n of each of the T sequence steps, stacked into [T,K] (one tape node).
template <class T>
Tensor<T> gather_sample(const std::vector<Tensor<T>>& seq, size_t n);
// Elementwise sum of same-shaped tensors.
template <class T>
Tensor<T> sum_tensors(const std::vector<Tensor<T>>& xs);

// ---- verification ----------------------------------------------------------

// Max over coordinates of |analytic - central difference| / max(1, |analytic|)
// for a scalar-valued f at x. Non-finite intermediates make the check fail
// with +infinity. 64-bit mode only.
double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                  Tensor<double> x, double h);

}  // namespace nuqta
