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
// Small layer toolkit on top of the tensor core: named parameter/buffer
// registry (the checkpoint and the optimizer both walk it in registration
// order), He initialization, and the conv/norm/linear building blocks.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nuqta/common.hpp"
#include "nuqta/tensor.hpp"

namespace nuqta {

template <class T>
struct ParamSet {
  std::vector<std::pair<std::string, Tensor<T>>> params;
  std::vector<std::pair<std::string, std::vector<T>*>> buffers;

  void add(const std::string& name, const Tensor<T>& t) {
    params.emplace_back(name, t);
  }
  void add_buffer(const std::string& name, std::vector<T>* b) {
    buffers.emplace_back(name, b);
  }
  size_t param_count() const {
    size_t n = 0;
    for (const auto& [name, t] : params) n += t.size();
    return n;
  }
};

// Normal draws with standard deviation sqrt(2 / fan_in), in row-major order.
template <class T>
Tensor<T> he_init(Shape shape, size_t fan_in, Rng& rng) {
  if (fan_in < 1) throw contract_error("he_init: fan_in must be >= 1");
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.normal() * stddev);
  return Tensor<T>::param(std::move(shape), std::move(v));
}

template <class T>
Tensor<T> zeros_param(Shape shape) {
  Tensor<T> t(std::move(shape));
  t.set_requires_grad(true);
  return t;
}

template <class T>
struct Conv2dLayer {
  Tensor<T> weight;  // [out, in, k, k]
  Tensor<T> bias;    // [out]
  size_t stride = 1, padding = 0;

  Conv2dLayer() = default;
  Conv2dLayer(size_t in, size_t out, size_t k, size_t stride_, size_t padding_,
              Rng& rng)
      : weight(he_init<T>({out, in, k, k}, in * k * k, rng)),
        bias(zeros_param<T>({out})),
        stride(stride_),
        padding(padding_) {}

  Tensor<T> operator()(const Tensor<T>& x) const {
    return conv2d(x, weight, bias, stride, padding);
  }
  void register_into(ParamSet<T>& ps, const std::string& prefix) {
    ps.add(prefix + ".w", weight);
    ps.add(prefix + ".b", bias);
  }
};

template <class T>
struct BatchNorm2dLayer {
  Tensor<T> gamma, beta;
  std::vector<T> running_mean, running_var;
  T eps = T(1e-5);

  BatchNorm2dLayer() = default;
  explicit BatchNorm2dLayer(size_t channels)
      : gamma(Shape{channels}, std::vector<T>(channels, T(1))),
        beta(Shape{channels}, std::vector<T>(channels, T(0))),
        running_mean(channels, T(0)),
        running_var(channels, T(1)) {
    gamma.set_requires_grad(true);
    beta.set_requires_grad(true);
  }

  Tensor<T> operator()(const Tensor<T>& x, bool training) {
    return batch_norm(x, gamma, beta, running_mean, running_var, training,
                      eps);
  }
  void register_into(ParamSet<T>& ps, const std::string& prefix) {
    ps.add(prefix + ".gamma", gamma);
    ps.add(prefix + ".beta", beta);
    ps.add_buffer(prefix + ".rmean", &running_mean);
    ps.add_buffer(prefix + ".rvar", &running_var);
  }
};

template <class T>
struct LinearLayer {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  LinearLayer() = default;
  LinearLayer(size_t in, size_t out, Rng& rng)
      : weight(he_init<T>({in, out}, in, rng)), bias(zeros_param<T>({out})) {}

  Tensor<T> operator()(const Tensor<T>& x) const {
    return linear(x, weight, bias);
  }
  void register_into(ParamSet<T>& ps, const std::string& prefix) {
    ps.add(prefix + ".w", weight);
    ps.add(prefix + ".b", bias);
  }
};

// conv -> batch norm -> relu
template <class T>
struct ConvBlock {
  Conv2dLayer<T> conv;
  BatchNorm2dLayer<T> bn;

  ConvBlock() = default;
  ConvBlock(size_t in, size_t out, size_t k, size_t stride, size_t padding,
            Rng& rng)
      : conv(in, out, k, stride, padding, rng), bn(out) {}

  Tensor<T> operator()(const Tensor<T>& x, bool training) {
    return relu(bn(conv(x), training));
  }
  void register_into(ParamSet<T>& ps, const std::string& prefix) {
    conv.register_into(ps, prefix + ".conv");
    bn.register_into(ps, prefix + ".bn");
  }
};

}  // namespace nuqta
