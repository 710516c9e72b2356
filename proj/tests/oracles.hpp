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
// Test-only reference implementations. Everything in here is written the
// dumb, obviously-correct way (nested loops, exhaustive enumeration, full
// DP matrices) and stays independent of the library code paths it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

namespace oracles {

// Plain nested-loop convolution; accumulation order over (c, kh, kw) matches
// a row-major scan of the kernel, bias added after the sum.
template <class T>
std::vector<T> conv2d_reference(const std::vector<T>& x, size_t N, size_t C,
                                size_t H, size_t W, const std::vector<T>& k,
                                size_t F, size_t kh, size_t kw,
                                const std::vector<T>& bias, size_t stride,
                                size_t pad) {
  const size_t OH = (H + 2 * pad - kh) / stride + 1;
  const size_t OW = (W + 2 * pad - kw) / stride + 1;
  std::vector<T> out(N * F * OH * OW, T(0));
  for (size_t n = 0; n < N; ++n)
    for (size_t f = 0; f < F; ++f)
      for (size_t oh = 0; oh < OH; ++oh)
        for (size_t ow = 0; ow < OW; ++ow) {
          T acc = T(0);
          for (size_t c = 0; c < C; ++c)
            for (size_t ih = 0; ih < kh; ++ih)
              for (size_t iw = 0; iw < kw; ++iw) {
                ptrdiff_t y = static_cast<ptrdiff_t>(oh * stride + ih) -
                              static_cast<ptrdiff_t>(pad);
                ptrdiff_t xx = static_cast<ptrdiff_t>(ow * stride + iw) -
                               static_cast<ptrdiff_t>(pad);
                T v = T(0);
                if (y >= 0 && y < static_cast<ptrdiff_t>(H) && xx >= 0 &&
                    xx < static_cast<ptrdiff_t>(W)) {
                  v = x[((n * C + c) * H + static_cast<size_t>(y)) * W +
                        static_cast<size_t>(xx)];
                }
                acc += k[((f * C + c) * kh + ih) * kw + iw] * v;
              }
          out[((n * F + f) * OH + oh) * OW + ow] = acc + bias[f];
        }
  return out;
}

// ---- CTC by exhaustive path enumeration -------------------------------------

// Collapse a frame-level path: merge repeats, then drop blanks.
inline std::vector<int> collapse_path(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int c : path) {
    if (c != prev && c != blank) out.push_back(c);
    prev = c;
  }
  return out;
}

// -log sum of probabilities of all (K1)^T paths that collapse to target.
inline double ctc_nll_bruteforce(const std::vector<double>& logp, size_t T,
                                 size_t K1, const std::vector<int>& target) {
  const int blank = static_cast<int>(K1) - 1;
  std::vector<int> path(T, 0);
  double total = -std::numeric_limits<double>::infinity();
  const auto logaddexp = [](double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
  };
  for (;;) {
    double lp = 0;
    for (size_t t = 0; t < T; ++t) lp += logp[t * K1 + path[t]];
    if (collapse_path(path, blank) == target) total = logaddexp(total, lp);
    // odometer increment
    size_t t = 0;
    while (t < T && ++path[t] == static_cast<int>(K1)) path[t++] = 0;
    if (t == T) break;
  }
  return -total;
}

// Most probable collapsed transcript by summing path mass per transcript.
inline std::vector<int> ctc_best_transcript_bruteforce(
    const std::vector<double>& logp, size_t T, size_t K1) {
  const int blank = static_cast<int>(K1) - 1;
  std::map<std::vector<int>, double> mass;
  const auto logaddexp = [](double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
  };
  std::vector<int> path(T, 0);
  for (;;) {
    double lp = 0;
    for (size_t t = 0; t < T; ++t) lp += logp[t * K1 + path[t]];
    auto key = collapse_path(path, blank);
    auto it = mass.find(key);
    if (it == mass.end()) {
      mass[key] = lp;
    } else {
      it->second = logaddexp(it->second, lp);
    }
    size_t t = 0;
    while (t < T && ++path[t] == static_cast<int>(K1)) path[t++] = 0;
    if (t == T) break;
  }
  std::vector<int> best;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (const auto& [k, v] : mass) {
    if (v > best_lp) {
      best_lp = v;
      best = k;
    }
  }
  return best;
}

// ---- Levenshtein, full-matrix ------------------------------------------------

inline size_t edit_distance_reference(const std::vector<uint32_t>& a,
                                      const std::vector<uint32_t>& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<std::vector<size_t>> d(n + 1, std::vector<size_t>(m + 1));
  for (size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (a[i - 1] != b[j - 1] ? 1u : 0u),
                          d[i - 1][j] + 1, d[i][j - 1] + 1});
  return d[n][m];
}

// ---- scalar LSTM, one cell at a time ----------------------------------------

// Gate layout [i, f, g, o]; x-projection weights w_ih[D][4H] and recurrent
// weights w_hh[H][4H] stored row-major, one shared bias.
struct ScalarLstm {
  size_t D, H;
  std::vector<double> w_ih, w_hh, b;

  static double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  // Runs the recurrence over x[T][D]; returns h[T][H].
  std::vector<std::vector<double>> run(
      const std::vector<std::vector<double>>& xs) const {
    std::vector<double> h(H, 0.0), c(H, 0.0);
    std::vector<std::vector<double>> out;
    for (const auto& x : xs) {
      std::vector<double> pre(4 * H, 0.0);
      for (size_t j = 0; j < 4 * H; ++j) {
        double acc = b[j];
        for (size_t d = 0; d < D; ++d) acc += x[d] * w_ih[d * 4 * H + j];
        for (size_t k = 0; k < H; ++k) acc += h[k] * w_hh[k * 4 * H + j];
        pre[j] = acc;
      }
      std::vector<double> nh(H), nc(H);
      for (size_t k = 0; k < H; ++k) {
        double ig = sigm(pre[k]);
        double fg = sigm(pre[H + k]);
        double gg = std::tanh(pre[2 * H + k]);
        double og = sigm(pre[3 * H + k]);
        nc[k] = fg * c[k] + ig * gg;
        nh[k] = og * std::tanh(nc[k]);
      }
      h = nh;
      c = nc;
      out.push_back(h);
    }
    return out;
  }
};

// ---- AdaDelta scalar recurrence ---------------------------------------------

struct ScalarAdaDelta {
  double rho, eps, lr;
  double eg2 = 0.0, edx2 = 0.0;

  double step(double grad) {
    eg2 = rho * eg2 + (1.0 - rho) * grad * grad;
    double dx = -(std::sqrt(edx2 + eps) / std::sqrt(eg2 + eps)) * grad;
    edx2 = rho * edx2 + (1.0 - rho) * dx * dx;
    return lr * dx;
  }
};

}  // namespace oracles
