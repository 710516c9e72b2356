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

#include "nuqta/seqhead.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>

namespace nuqta {

namespace {
std::atomic<size_t> g_td_warnings{0};
}

size_t temporal_dropout_degenerate_warnings() { return g_td_warnings.load(); }

template <class T>
Sequence<T> collapse_height(const Tensor<T>& features) {
  return unbind_width(adaptive_avg_pool_height(features));
}

template <class T>
Sequence<T> temporal_dropout(const Sequence<T>& v, size_t passes,
                             double fraction, bool training, Rng& rng) {
  if (passes < 1) throw contract_error("temporal_dropout: passes >= 1");
  if (fraction < 0.0 || fraction >= 1.0)
    throw contract_error("temporal_dropout: fraction must be in [0, 1)");
  if (!training || fraction == 0.0) return v;
  const size_t steps = v.size();
  const size_t drop = static_cast<size_t>(
      std::floor(static_cast<double>(steps) * fraction));
  if (steps < 2 || drop == 0) {
    if (steps < 2) {
      g_td_warnings.fetch_add(1);
      std::fprintf(stderr,
                   "warning: temporal_dropout degenerates for T=%zu; "
                   "applying identity\n",
                   steps);
    }
    return v;
  }
  // Averaging `passes` masked copies of the same sequence equals scaling
  // step t by (survivals_t / keep) / passes.
  const double keep = 1.0 - fraction;
  std::vector<size_t> survivals(steps, 0);
  std::vector<size_t> idx(steps);
  for (size_t p = 0; p < passes; ++p) {
    for (size_t i = 0; i < steps; ++i) idx[i] = i;
    // Partial Fisher-Yates: the first `drop` entries are the dropped steps.
    for (size_t i = 0; i < drop; ++i) {
      const size_t j = i + static_cast<size_t>(rng.below(steps - i));
      std::swap(idx[i], idx[j]);
    }
    for (size_t i = drop; i < steps; ++i) survivals[idx[i]]++;
  }
  Sequence<T> out;
  out.reserve(steps);
  for (size_t t = 0; t < steps; ++t) {
    const double m = static_cast<double>(survivals[t]) /
                     (keep * static_cast<double>(passes));
    out.push_back(scale(v[t], static_cast<T>(m)));
  }
  return out;
}

// ---- LSTM --------------------------------------------------------------------

template <class T>
LstmDirection<T>::LstmDirection(size_t input, size_t hidden, Rng& rng)
    : w_ih(he_init<T>({input, 4 * hidden}, input, rng)),
      w_hh(he_init<T>({hidden, 4 * hidden}, hidden, rng)),
      b(zeros_param<T>({4 * hidden})) {}

template <class T>
void LstmDirection<T>::step(const Tensor<T>& x, Tensor<T>& h,
                            Tensor<T>& c) const {
  const size_t H = w_hh.dim(0);
  Tensor<T> pre = add(linear(x, w_ih, b), matmul(h, w_hh));
  Tensor<T> i = sigmoid(slice_cols(pre, 0, H));
  Tensor<T> f = sigmoid(slice_cols(pre, H, 2 * H));
  Tensor<T> g = tanh(slice_cols(pre, 2 * H, 3 * H));
  Tensor<T> o = sigmoid(slice_cols(pre, 3 * H, 4 * H));
  c = add(mul(f, c), mul(i, g));
  h = mul(o, tanh(c));
}

template <class T>
void LstmDirection<T>::register_into(ParamSet<T>& ps,
                                     const std::string& prefix) {
  ps.add(prefix + ".w_ih", w_ih);
  ps.add(prefix + ".w_hh", w_hh);
  ps.add(prefix + ".b", b);
}

template <class T>
BiLstmLayer<T>::BiLstmLayer(size_t input, size_t hidden_, size_t out, Rng& rng)
    : fwd(input, hidden_, rng),
      bwd(input, hidden_, rng),
      w_f(he_init<T>({hidden_, out}, 2 * hidden_, rng)),
      w_b(he_init<T>({hidden_, out}, 2 * hidden_, rng)),
      bias(zeros_param<T>({out})),
      hidden(hidden_) {}

template <class T>
Tensor<T> BiLstmLayer<T>::combine(const Tensor<T>& hf,
                                  const Tensor<T>& hb) const {
  return bias_add_rows(add(matmul(hf, w_f), matmul(hb, w_b)), bias);
}

template <class T>
Sequence<T> BiLstmLayer<T>::forward(const Sequence<T>& xs) const {
  if (xs.empty()) throw contract_error("bilstm_layer: empty sequence");
  const size_t steps = xs.size();
  const size_t n = xs[0].dim(0);
  Sequence<T> hf(steps), hb(steps);
  {
    Tensor<T> h({n, hidden}), c({n, hidden});
    for (size_t t = 0; t < steps; ++t) {
      fwd.step(xs[t], h, c);
      hf[t] = h;
    }
  }
  {
    Tensor<T> h({n, hidden}), c({n, hidden});
    for (size_t t = steps; t-- > 0;) {
      bwd.step(xs[t], h, c);
      hb[t] = h;
    }
  }
  Sequence<T> out;
  out.reserve(steps);
  for (size_t t = 0; t < steps; ++t) out.push_back(combine(hf[t], hb[t]));
  return out;
}

template <class T>
void BiLstmLayer<T>::register_into(ParamSet<T>& ps,
                                   const std::string& prefix) {
  fwd.register_into(ps, prefix + ".fwd");
  bwd.register_into(ps, prefix + ".bwd");
  ps.add(prefix + ".combine.w_f", w_f);
  ps.add(prefix + ".combine.w_b", w_b);
  ps.add(prefix + ".combine.b", bias);
}

// ---- head --------------------------------------------------------------------

template <class T>
SeqHead<T>::SeqHead(size_t input_dim, const SeqHeadConfig& cfg,
                    size_t charset_size, Rng& rng)
    : layer1(input_dim, cfg.hidden, cfg.hidden, rng),
      layer2(cfg.hidden, cfg.hidden, cfg.hidden, rng),
      classifier(cfg.hidden, charset_size + 1, rng),
      cfg_(cfg),
      charset_size_(charset_size) {}

template <class T>
Sequence<T> SeqHead<T>::dbilstm(const Sequence<T>& v) const {
  return layer2.forward(layer1.forward(v));
}

template <class T>
Sequence<T> SeqHead<T>::classify(const Sequence<T>& h) const {
  Sequence<T> out;
  out.reserve(h.size());
  for (const auto& step : h)
    out.push_back(log_softmax_rows(classifier(step)));
  return out;
}

template <class T>
Sequence<T> SeqHead<T>::forward(const Tensor<T>& features, bool training,
                                Rng& rng) {
  Sequence<T> v = collapse_height(features);
  v = temporal_dropout(v, cfg_.dropout_passes, cfg_.dropout_fraction, training,
                       rng);
  return classify(dbilstm(v));
}

template <class T>
void SeqHead<T>::register_into(ParamSet<T>& ps, const std::string& prefix) {
  layer1.register_into(ps, prefix + ".bilstm1");
  layer2.register_into(ps, prefix + ".bilstm2");
  classifier.register_into(ps, prefix + ".cls");
}

#define NUQTA_INSTANTIATE_SEQ(T)                                              \
  template Sequence<T> collapse_height(const Tensor<T>&);                     \
  template Sequence<T> temporal_dropout(const Sequence<T>&, size_t, double,   \
                                        bool, Rng&);                          \
  template struct LstmDirection<T>;                                           \
  template struct BiLstmLayer<T>;                                             \
  template class SeqHead<T>;

NUQTA_INSTANTIATE_SEQ(float)
NUQTA_INSTANTIATE_SEQ(double)

#undef NUQTA_INSTANTIATE_SEQ

}  // namespace nuqta
