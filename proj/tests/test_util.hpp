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

#pragma once

#include <cmath>
#include <vector>

#include "nuqta/common.hpp"
#include "nuqta/tensor.hpp"

namespace testutil {

template <class T>
nuqta::Tensor<T> rand_tensor(nuqta::Shape shape, nuqta::Rng& rng,
                             double lo = -1.0, double hi = 1.0) {
  std::vector<T> v(nuqta::shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return nuqta::Tensor<T>(std::move(shape), std::move(v));
}

// Scalar readout with fixed random weights; a stronger probe than plain sum
// because it is sensitive to element placement.
inline nuqta::Tensor<double> weighted_readout(const nuqta::Tensor<double>& t,
                                              uint64_t seed) {
  nuqta::Rng rng(seed);
  std::vector<double> w(t.size());
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  return nuqta::sum(nuqta::apply_mask(t, w));
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil
