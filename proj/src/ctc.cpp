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

#include "nuqta/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace nuqta {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Blank-interleaved label sequence: blank, l1, blank, l2, ..., blank.
std::vector<int> extended_labels(const std::vector<int>& target, int blank) {
  std::vector<int> ext(2 * target.size() + 1, blank);
  for (size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

void validate(size_t T, size_t K1, const std::vector<int>& target) {
  if (T == 0 || K1 < 1) throw contract_error("ctc: empty input");
  for (int c : target) {
    if (c < 0 || c >= static_cast<int>(K1) - 1) {
      throw contract_error("ctc: target class " + std::to_string(c) +
                           " out of range for " + std::to_string(K1 - 1) +
                           " labels");
    }
  }
}

// alpha[t][s] includes the emission at t; row t kept for the backward pass.
void ctc_alpha(const double* logp, size_t T, size_t K1,
               const std::vector<int>& ext, std::vector<double>& alpha) {
  const size_t S = ext.size();
  alpha.assign(T * S, kNegInf);
  alpha[0] = logp[ext[0]];
  if (S > 1) alpha[1] = logp[ext[1]];
  for (size_t t = 1; t < T; ++t) {
    const double* row = logp + t * K1;
    for (size_t s = 0; s < S; ++s) {
      double acc = alpha[(t - 1) * S + s];
      if (s >= 1) acc = logaddexp(acc, alpha[(t - 1) * S + s - 1]);
      if (s >= 2 && ext[s] != static_cast<int>(K1) - 1 && ext[s] != ext[s - 2])
        acc = logaddexp(acc, alpha[(t - 1) * S + s - 2]);
      alpha[t * S + s] = acc == kNegInf ? kNegInf : acc + row[ext[s]];
    }
  }
}

}  // namespace

CtcResult ctc_loss(const double* logp, size_t T, size_t K1,
                   const std::vector<int>& target) {
  validate(T, K1, target);
  CtcResult r;
  if (target.size() > T) {
    r.loss = std::numeric_limits<double>::infinity();
    r.feasible = false;
    return r;
  }
  const auto ext = extended_labels(target, static_cast<int>(K1) - 1);
  const size_t S = ext.size();
  std::vector<double> alpha;
  ctc_alpha(logp, T, K1, ext, alpha);
  double logZ = alpha[(T - 1) * S + S - 1];
  if (S > 1) logZ = logaddexp(logZ, alpha[(T - 1) * S + S - 2]);
  r.feasible = logZ != kNegInf;
  r.loss = r.feasible ? -logZ : std::numeric_limits<double>::infinity();
  return r;
}

CtcResult ctc_grad(const double* logp, size_t T, size_t K1,
                   const std::vector<int>& target, double* dlogp) {
  validate(T, K1, target);
  std::fill(dlogp, dlogp + T * K1, 0.0);
  CtcResult r = ctc_loss(logp, T, K1, target);
  if (!r.feasible) return r;

  const int blank = static_cast<int>(K1) - 1;
  const auto ext = extended_labels(target, blank);
  const size_t S = ext.size();
  std::vector<double> alpha;
  ctc_alpha(logp, T, K1, ext, alpha);

  // beta[t][s] also includes the emission at t, so alpha + beta double-counts
  // logp[t][ext[s]] once; the gradient below subtracts it back out.
  std::vector<double> beta(T * S, kNegInf);
  beta[(T - 1) * S + S - 1] = logp[(T - 1) * K1 + ext[S - 1]];
  if (S > 1) beta[(T - 1) * S + S - 2] = logp[(T - 1) * K1 + ext[S - 2]];
  for (size_t t = T - 1; t-- > 0;) {
    const double* row = logp + t * K1;
    for (size_t s = 0; s < S; ++s) {
      double acc = beta[(t + 1) * S + s];
      if (s + 1 < S) acc = logaddexp(acc, beta[(t + 1) * S + s + 1]);
      if (s + 2 < S && ext[s + 2] != blank && ext[s + 2] != ext[s])
        acc = logaddexp(acc, beta[(t + 1) * S + s + 2]);
      beta[t * S + s] = acc == kNegInf ? kNegInf : acc + row[ext[s]];
    }
  }

  const double logZ = -r.loss;
  for (size_t t = 0; t < T; ++t) {
    // Sum lattice mass per class, then convert to d(-logZ)/d(logp).
    std::vector<double> per_class(K1, kNegInf);
    for (size_t s = 0; s < S; ++s) {
      const double m = alpha[t * S + s] + beta[t * S + s];
      if (m == kNegInf) continue;
      per_class[ext[s]] = logaddexp(per_class[ext[s]], m);
    }
    for (size_t k = 0; k < K1; ++k) {
      if (per_class[k] == kNegInf) continue;
      dlogp[t * K1 + k] = -std::exp(per_class[k] - logp[t * K1 + k] - logZ);
    }
  }
  return r;
}

template <class T>
Tensor<T> ctc_loss_op(const Tensor<T>& log_probs,
                      const std::vector<int>& target, size_t valid_T) {
  if (log_probs.ndim() != 2)
    throw dim_error("ctc_loss_op: expected [T,K+1], got " +
                    shape_str(log_probs.shape()));
  const size_t Tfull = log_probs.dim(0), K1 = log_probs.dim(1);
  if (valid_T == 0 || valid_T > Tfull)
    throw contract_error("ctc_loss_op: valid_T out of range");

  // Lattice math always runs in double regardless of the storage type.
  std::vector<double> lp(valid_T * K1);
  for (size_t i = 0; i < lp.size(); ++i)
    lp[i] = static_cast<double>(log_probs.data()[i]);
  CtcResult r = ctc_loss(lp.data(), valid_T, K1, target);
  if (!r.feasible) {
    throw numeric_error(
        "ctc: no feasible alignment (target length " +
        std::to_string(target.size()) + " vs " + std::to_string(valid_T) +
        " usable timesteps)");
  }

  bool rec = Tape<T>::active() && log_probs.requires_grad();
  Tensor<T> out(Shape{1}, std::vector<T>{static_cast<T>(r.loss)});
  out.set_requires_grad(rec);
  if (rec) {
    auto sx = log_probs.storage();
    auto so = out.storage();
    auto lp_keep = std::make_shared<std::vector<double>>(std::move(lp));
    Tape<T>::active()->record([sx, so, lp_keep, target, valid_T, K1] {
      if (so->g.empty()) return;
      std::vector<double> dlp(valid_T * K1);
      ctc_grad(lp_keep->data(), valid_T, K1, target, dlp.data());
      if (sx->g.empty()) sx->g.assign(sx->v.size(), T(0));
      const double g = static_cast<double>(so->g[0]);
      for (size_t i = 0; i < dlp.size(); ++i)
        sx->g[i] += static_cast<T>(g * dlp[i]);
    });
  }
  return out;
}

std::vector<int> greedy_decode(const double* logp, size_t T, size_t K1) {
  const int blank = static_cast<int>(K1) - 1;
  std::vector<int> out;
  int prev = -1;
  for (size_t t = 0; t < T; ++t) {
    const double* row = logp + t * K1;
    int best = 0;
    for (size_t k = 1; k < K1; ++k)
      if (row[k] > row[best]) best = static_cast<int>(k);
    if (best != prev && best != blank) out.push_back(best);
    prev = best;
  }
  return out;
}

std::vector<int> beam_decode(const double* logp, size_t T, size_t K1,
                             size_t beam_width) {
  if (beam_width < 1) throw contract_error("beam_decode: beam_width >= 1");
  const int blank = static_cast<int>(K1) - 1;

  struct Mass {
    double pb = kNegInf;   // ends in blank
    double pnb = kNegInf;  // ends in the prefix's last label
  };
  using Beam = std::map<std::vector<int>, Mass>;

  Beam beam;
  beam[{}] = Mass{0.0, kNegInf};

  for (size_t t = 0; t < T; ++t) {
    const double* row = logp + t * K1;
    Beam next;
    for (const auto& [prefix, m] : beam) {
      const double total = logaddexp(m.pb, m.pnb);
      for (size_t k = 0; k < K1; ++k) {
        const double p = row[k];
        if (static_cast<int>(k) == blank) {
          Mass& nm = next[prefix];
          nm.pb = logaddexp(nm.pb, total + p);
        } else if (!prefix.empty() && prefix.back() == static_cast<int>(k)) {
          // Repeated label: merges into the same prefix unless a blank
          // intervened.
          Mass& same = next[prefix];
          same.pnb = logaddexp(same.pnb, m.pnb + p);
          std::vector<int> grown = prefix;
          grown.push_back(static_cast<int>(k));
          Mass& nm = next[grown];
          nm.pnb = logaddexp(nm.pnb, m.pb + p);
        } else {
          std::vector<int> grown = prefix;
          grown.push_back(static_cast<int>(k));
          Mass& nm = next[grown];
          nm.pnb = logaddexp(nm.pnb, total + p);
        }
      }
    }
    if (next.size() > beam_width) {
      std::vector<std::pair<double, const std::vector<int>*>> scored;
      scored.reserve(next.size());
      for (const auto& [prefix, m] : next)
        scored.emplace_back(logaddexp(m.pb, m.pnb), &prefix);
      std::nth_element(scored.begin(), scored.begin() + beam_width - 1,
                       scored.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      Beam pruned;
      for (size_t i = 0; i < beam_width; ++i)
        pruned[*scored[i].second] = next[*scored[i].second];
      next = std::move(pruned);
    }
    beam = std::move(next);
  }

  const std::vector<int>* best = nullptr;
  double best_lp = kNegInf;
  for (const auto& [prefix, m] : beam) {
    const double total = logaddexp(m.pb, m.pnb);
    if (best == nullptr || total > best_lp) {
      best_lp = total;
      best = &prefix;
    }
  }
  return best ? *best : std::vector<int>{};
}

template <class T>
std::vector<int> greedy_decode(const Tensor<T>& log_probs, size_t valid_T) {
  const size_t K1 = log_probs.dim(1);
  std::vector<double> lp(valid_T * K1);
  for (size_t i = 0; i < lp.size(); ++i)
    lp[i] = static_cast<double>(log_probs.data()[i]);
  return greedy_decode(lp.data(), valid_T, K1);
}

template <class T>
std::vector<int> beam_decode(const Tensor<T>& log_probs, size_t valid_T,
                             size_t beam_width) {
  const size_t K1 = log_probs.dim(1);
  std::vector<double> lp(valid_T * K1);
  for (size_t i = 0; i < lp.size(); ++i)
    lp[i] = static_cast<double>(log_probs.data()[i]);
  return beam_decode(lp.data(), valid_T, K1, beam_width);
}

template Tensor<float> ctc_loss_op(const Tensor<float>&,
                                   const std::vector<int>&, size_t);
template Tensor<double> ctc_loss_op(const Tensor<double>&,
                                    const std::vector<int>&, size_t);
template std::vector<int> greedy_decode(const Tensor<float>&, size_t);
template std::vector<int> greedy_decode(const Tensor<double>&, size_t);
template std::vector<int> beam_decode(const Tensor<float>&, size_t, size_t);
template std::vector<int> beam_decode(const Tensor<double>&, size_t, size_t);

}  // namespace nuqta
