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

#include "nuqta/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace nuqta {

size_t shape_numel(const Shape& s) {
  size_t n = 1;
  for (size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

namespace {

bool g_finite_checks = true;

template <class T>
void check_finite(const char* op, const detail::Storage<T>& s) {
  if (!g_finite_checks) return;
  // v - v is 0 for finite values and NaN for NaN/Inf.
  for (const T& v : s.v) {
    if (!(v - v == T(0))) {
      throw numeric_error(std::string(op) + ": non-finite value in output");
    }
  }
}

template <class T>
void ensure_grad(detail::Storage<T>& s) {
  if (s.g.empty()) s.g.assign(s.v.size(), T(0));
}

template <class T>
bool want_record(std::initializer_list<const Tensor<T>*> ins) {
  if (!Tape<T>::active()) return false;
  for (const Tensor<T>* t : ins) {
    if (t->requires_grad()) return true;
  }
  return false;
}

template <class T>
Tensor<T> make_out(Shape shape, bool rec) {
  Tensor<T> t(std::move(shape));
  t.set_requires_grad(rec);
  return t;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw dim_error(msg);
}

// ---- deterministic GEMM ----------------------------------------------------
//
// C[m,n] (+)= A[m,k] * B[k,n], row-major. Accumulation over k is strictly
// sequential per output element, so the summation order equals that of a
// plain nested loop; the inner j loop vectorizes without reassociation.

template <class T>
void gemm_axpy(bool accumulate, size_t m, size_t n, size_t k, const T* a,
               const T* b, T* c) {
  for (size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    const T* arow = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T>
void transpose_mat(size_t m, size_t n, const T* a, T* at) {
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) at[j * m + i] = a[i * n + j];
}

}  // namespace

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks() { return g_finite_checks; }

// ---- Tensor ----------------------------------------------------------------

template <class T>
Tensor<T>::Tensor(Shape shape, T fill) {
  s_ = std::make_shared<detail::Storage<T>>();
  s_->shape = std::move(shape);
  s_->v.assign(shape_numel(s_->shape), fill);
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) {
  if (shape_numel(shape) != values.size()) {
    throw dim_error("Tensor: " + std::to_string(values.size()) +
                    " values for shape " + shape_str(shape));
  }
  s_ = std::make_shared<detail::Storage<T>>();
  s_->shape = std::move(shape);
  s_->v = std::move(values);
}

template <class T>
Tensor<T> Tensor<T>::param(Shape shape, std::vector<T> values) {
  Tensor<T> t(std::move(shape), std::move(values));
  t.set_requires_grad(true);
  return t;
}

template <class T>
T* Tensor<T>::grad() {
  ensure_grad(*s_);
  return s_->g.data();
}

template <class T>
const std::vector<T>& Tensor<T>::grad_values() const {
  return s_->g;
}

template <class T>
void Tensor<T>::zero_grad() {
  s_->g.clear();
}

template <class T>
T Tensor<T>::item() const {
  if (size() != 1) {
    throw contract_error("item: tensor has " + std::to_string(size()) +
                         " elements, expected 1");
  }
  return s_->v[0];
}

// ---- Tape ------------------------------------------------------------------

namespace {
// Function-local so the TLS init wrapper lives in this translation unit.
template <class T>
Tape<T>*& active_tape_slot() {
  static thread_local Tape<T>* slot = nullptr;
  return slot;
}
}  // namespace

template <class T>
Tape<T>* Tape<T>::active() {
  return active_tape_slot<T>();
}

template <class T>
Tape<T>::Tape() {
  prev_ = active_tape_slot<T>();
  active_tape_slot<T>() = this;
}

template <class T>
Tape<T>::~Tape() {
  active_tape_slot<T>() = prev_;
}

template <class T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (loss.size() != 1) {
    throw contract_error("backward: loss must be scalar, got shape " +
                         shape_str(loss.shape()));
  }
  if (ran_) throw contract_error("backward: tape already consumed");
  if (nodes_.empty()) throw contract_error("backward: empty tape");
  ran_ = true;
  auto s = loss.storage();
  ensure_grad(*s);
  s->g[0] = T(1);
  for (size_t i = nodes_.size(); i > 0; --i) nodes_[i - 1]();
}

// ---- elementwise -----------------------------------------------------------

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " +
                                      shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  bool rec = want_record<T>({&a, &b});
  Tensor<T> out = make_out<T>(a.shape(), rec);
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) po[i] = pa[i] + pb[i];
  check_finite("add", *out.storage());
  if (rec) {
    auto sa = a.storage(), sb = b.storage(), so = out.storage();
    Tape<T>::active()->record([sa, sb, so] {
      if (so->g.empty()) return;
      if (sa->requires_grad) {
        ensure_grad(*sa);
        for (size_t i = 0; i < so->g.size(); ++i) sa->g[i] += so->g[i];
      }
      if (sb->requires_grad) {
        ensure_grad(*sb);
        for (size_t i = 0; i < so->g.size(); ++i) sb->g[i] += so->g[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch " +
                                      shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  bool rec = want_record<T>({&a, &b});
  Tensor<T> out = make_out<T>(a.shape(), rec);
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) po[i] = pa[i] * pb[i];
  check_finite("mul", *out.storage());
  if (rec) {
    auto sa = a.storage(), sb = b.storage(), so = out.storage();
    Tape<T>::active()->record([sa, sb, so] {
      if (so->g.empty()) return;
      if (sa->requires_grad) {
        ensure_grad(*sa);
        for (size_t i = 0; i < so->g.size(); ++i)
          sa->g[i] += so->g[i] * sb->v[i];
      }
      if (sb->requires_grad) {
        ensure_grad(*sb);
        for (size_t i = 0; i < so->g.size(); ++i)
          sb->g[i] += so->g[i] * sa->v[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  bool rec = want_record<T>({&a});
  Tensor<T> out = make_out<T>(a.shape(), rec);
  const T* pa = a.data();
  T* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) po[i] = pa[i] * c;
  check_finite("scale", *out.storage());
  if (rec) {
    auto sa = a.storage(), so = out.storage();
    Tape<T>::active()->record([sa, so, c] {
      if (so->g.empty()) return;
      ensure_grad(*sa);
      for (size_t i = 0; i < so->g.size(); ++i) sa->g[i] += so->g[i] * c;
    });
  }
  return out;
}

template <class T>
Tensor<T> apply_mask(const Tensor<T>& a, const std::vector<T>& mask) {
  require(a.size() == mask.size(), "apply_mask: mask size mismatch");
  bool rec = want_record<T>({&a});
  Tensor<T> out = make_out<T>(a.shape(), rec);
  const T* pa = a.data();
  T* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) po[i] = pa[i] * mask[i];
  check_finite("apply_mask", *out.storage());
  if (rec) {
    auto sa = a.storage(), so = out.storage();
    Tape<T>::active()->record([sa, so, mask] {
      if (so->g.empty()) return;
      ensure_grad(*sa);
      for (size_t i = 0; i < so->g.size(); ++i) sa->g[i] += so->g[i] * mask[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> relu(const Tensor<T>& a) {
  bool rec = want_record<T>({&a});
  Tensor<T> out = make_out<T>(a.shape(), rec);
  const T* pa = a.data();
  T* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) po[i] = pa[i] > T(0) ? pa[i] : T(0);
  check_finite("relu", *out.storage());
  if (rec) {
    auto sa = a.storage(), so = out.storage();
    Tape<T>::active()->record([sa, so] {
      if (so->g.empty()) return;
      ensure_grad(*sa);
      for (size_t i = 0; i < so->g.size(); ++i)
        if (sa->v[i] > T(0)) sa->g[i] += so->g[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  bool rec = want_record<T>({&a});
  Tensor<T> out = make_out<T>(a.shape(), rec);
  const T* pa = a.data();
  T* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) {
    // Branch on sign for stability in both tails.
    T x = pa[i];
    if (x >= T(0)) {
      T e = std::exp(-x);
      po[i] = T(1) / (T(1) + e);
    } else {
      T e = std::exp(x);
      po[i] = e / (T(1) + e);
    }
  }
  check_finite("sigmoid", *out.storage());
  if (rec) {
    auto sa = a.storage(), so = out.storage();
    Tape<T>::active()->record([sa, so] {
      if (so->g.empty()) return;
      ensure_grad(*sa);
      for (size_t i = 0; i < so->g.size(); ++i) {
        T y = so->v[i];
        sa->g[i] += so->g[i] * y * (T(1) - y);
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> tanh(const Tensor<T>& a) {
  bool rec = want_record<T>({&a});
  Tensor<T> out = make_out<T>(a.shape(), rec);
  const T* pa = a.data();
  T* po = out.data();
  for (size_t i = 0; i < out.size(); ++i) po[i] = std::tanh(pa[i]);
  check_finite("tanh", *out.storage());
  if (rec) {
    auto sa = a.storage(), so = out.storage();
    Tape<T>::active()->record([sa, so] {
      if (so->g.empty()) return;
      ensure_grad(*sa);
      for (size_t i = 0; i < so->g.size(); ++i) {
        T y = so->v[i];
        sa->g[i] += so->g[i] * (T(1) - y * y);
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  bool rec = want_record<T>({&a});
  Tensor<T> out = make_out<T>({1}, rec);
  const T* pa = a.data();
  T acc = T(0);
  for (size_t i = 0; i < a.size(); ++i) acc += pa[i];
  out.data()[0] = acc;
  check_finite("sum", *out.storage());
  if (rec) {
    auto sa = a.storage(), so = out.storage();
    Tape<T>::active()->record([sa, so] {
      if (so->g.empty()) return;
      ensure_grad(*sa);
      T g = so->g[0];
      for (size_t i = 0; i < sa->g.size(); ++i) sa->g[i] += g;
    });
  }
  return out;
}

// ---- matrix ops ------------------------------------------------------------

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(0),
          "matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
              shape_str(b.shape()));
  const size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  bool rec = want_record<T>({&a, &b});
  Tensor<T> out = make_out<T>({m, n}, rec);
  gemm_axpy(false, m, n, k, a.data(), b.data(), out.data());
  check_finite("matmul", *out.storage());
  if (rec) {
    auto sa = a.storage(), sb = b.storage(), so = out.storage();
    Tape<T>::active()->record([sa, sb, so, m, n, k] {
      if (so->g.empty()) return;
      if (sa->requires_grad) {
        ensure_grad(*sa);
        std::vector<T> bt(n * k);
        transpose_mat(k, n, sb->v.data(), bt.data());
        gemm_axpy(true, m, k, n, so->g.data(), bt.data(), sa->g.data());
      }
      if (sb->requires_grad) {
        ensure_grad(*sb);
        std::vector<T> at(k * m);
        transpose_mat(m, k, sa->v.data(), at.data());
        gemm_axpy(true, k, n, m, at.data(), so->g.data(), sb->g.data());
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require(x.ndim() == 2 && w.ndim() == 2 && x.dim(1) == w.dim(0),
          "linear: incompatible shapes " + shape_str(x.shape()) + " x " +
              shape_str(w.shape()));
  require(b.ndim() == 1 && b.dim(0) == w.dim(1),
          "linear: bias shape " + shape_str(b.shape()));
  const size_t m = x.dim(0), k = x.dim(1), n = w.dim(1);
  bool rec = want_record<T>({&x, &w, &b});
  Tensor<T> out = make_out<T>({m, n}, rec);
  gemm_axpy(false, m, n, k, x.data(), w.data(), out.data());
  T* po = out.data();
  const T* pb = b.data();
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) po[i * n + j] += pb[j];
  check_finite("linear", *out.storage());
  if (rec) {
    auto sx = x.storage(), sw = w.storage(), sb = b.storage(),
         so = out.storage();
    Tape<T>::active()->record([sx, sw, sb, so, m, n, k] {
      if (so->g.empty()) return;
      if (sx->requires_grad) {
        ensure_grad(*sx);
        std::vector<T> wt(n * k);
        transpose_mat(k, n, sw->v.data(), wt.data());
        gemm_axpy(true, m, k, n, so->g.data(), wt.data(), sx->g.data());
      }
      if (sw->requires_grad) {
        ensure_grad(*sw);
        std::vector<T> xt(k * m);
        transpose_mat(m, k, sx->v.data(), xt.data());
        gemm_axpy(true, k, n, m, xt.data(), so->g.data(), sw->g.data());
      }
      if (sb->requires_grad) {
        ensure_grad(*sb);
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) sb->g[j] += so->g[i * n + j];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> bias_add_rows(const Tensor<T>& x, const Tensor<T>& b) {
  require(x.ndim() == 2 && b.ndim() == 1 && b.dim(0) == x.dim(1),
          "bias_add_rows: bias shape " + shape_str(b.shape()) + " for " +
              shape_str(x.shape()));
  const size_t m = x.dim(0), n = x.dim(1);
  bool rec = want_record<T>({&x, &b});
  Tensor<T> out = make_out<T>(x.shape(), rec);
  const T* px = x.data();
  const T* pb = b.data();
  T* po = out.data();
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) po[i * n + j] = px[i * n + j] + pb[j];
  check_finite("bias_add_rows", *out.storage());
  if (rec) {
    auto sx = x.storage(), sb = b.storage(), so = out.storage();
    Tape<T>::active()->record([sx, sb, so, m, n] {
      if (so->g.empty()) return;
      if (sx->requires_grad) {
        ensure_grad(*sx);
        for (size_t i = 0; i < so->g.size(); ++i) sx->g[i] += so->g[i];
      }
      if (sb->requires_grad) {
        ensure_grad(*sb);
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) sb->g[j] += so->g[i * n + j];
      }
    });
  }
  return out;
}

// ---- convolution -----------------------------------------------------------

namespace {

// col[(c*kh+ih)*kw+iw, oh*OW+ow] = x[n,c, oh*s+ih-p, ow*s+iw-p] (0 outside).
template <class T>
void im2col(const T* x, size_t C, size_t H, size_t W, size_t kh, size_t kw,
            size_t stride, size_t pad, size_t OH, size_t OW, T* col) {
  for (size_t c = 0; c < C; ++c) {
    for (size_t ih = 0; ih < kh; ++ih) {
      for (size_t iw = 0; iw < kw; ++iw) {
        T* crow = col + ((c * kh + ih) * kw + iw) * (OH * OW);
        for (size_t oh = 0; oh < OH; ++oh) {
          ptrdiff_t y = static_cast<ptrdiff_t>(oh * stride + ih) -
                        static_cast<ptrdiff_t>(pad);
          for (size_t ow = 0; ow < OW; ++ow) {
            ptrdiff_t xx = static_cast<ptrdiff_t>(ow * stride + iw) -
                           static_cast<ptrdiff_t>(pad);
            T v = T(0);
            if (y >= 0 && y < static_cast<ptrdiff_t>(H) && xx >= 0 &&
                xx < static_cast<ptrdiff_t>(W)) {
              v = x[(c * H + static_cast<size_t>(y)) * W +
                    static_cast<size_t>(xx)];
            }
            crow[oh * OW + ow] = v;
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* col, size_t C, size_t H, size_t W, size_t kh,
                size_t kw, size_t stride, size_t pad, size_t OH, size_t OW,
                T* dx) {
  for (size_t c = 0; c < C; ++c) {
    for (size_t ih = 0; ih < kh; ++ih) {
      for (size_t iw = 0; iw < kw; ++iw) {
        const T* crow = col + ((c * kh + ih) * kw + iw) * (OH * OW);
        for (size_t oh = 0; oh < OH; ++oh) {
          ptrdiff_t y = static_cast<ptrdiff_t>(oh * stride + ih) -
                        static_cast<ptrdiff_t>(pad);
          if (y < 0 || y >= static_cast<ptrdiff_t>(H)) continue;
          for (size_t ow = 0; ow < OW; ++ow) {
            ptrdiff_t xx = static_cast<ptrdiff_t>(ow * stride + iw) -
                           static_cast<ptrdiff_t>(pad);
            if (xx < 0 || xx >= static_cast<ptrdiff_t>(W)) continue;
            dx[(c * H + static_cast<size_t>(y)) * W + static_cast<size_t>(xx)] +=
                crow[oh * OW + ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& k, const Tensor<T>& bias,
                 size_t stride, size_t padding) {
  require(x.ndim() == 4 && k.ndim() == 4, "conv2d: expected 4-D tensors");
  require(x.dim(1) == k.dim(1),
          "conv2d: input channels " + std::to_string(x.dim(1)) +
              " != kernel channels " + std::to_string(k.dim(1)));
  require(bias.ndim() == 1 && bias.dim(0) == k.dim(0),
          "conv2d: bias shape " + shape_str(bias.shape()));
  if (stride == 0) throw contract_error("conv2d: stride must be positive");
  const size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const size_t F = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  require(kh <= H + 2 * padding && kw <= W + 2 * padding,
          "conv2d: kernel larger than padded input");
  const size_t OH = (H + 2 * padding - kh) / stride + 1;
  const size_t OW = (W + 2 * padding - kw) / stride + 1;
  const size_t K = C * kh * kw, M = OH * OW;

  bool rec = want_record<T>({&x, &k, &bias});
  Tensor<T> out = make_out<T>({N, F, OH, OW}, rec);
  std::vector<T> col(K * M);
  for (size_t n = 0; n < N; ++n) {
    im2col(x.data() + n * C * H * W, C, H, W, kh, kw, stride, padding, OH, OW,
           col.data());
    T* on = out.data() + n * F * M;
    gemm_axpy(false, F, M, K, k.data(), col.data(), on);
    const T* pb = bias.data();
    for (size_t f = 0; f < F; ++f)
      for (size_t i = 0; i < M; ++i) on[f * M + i] += pb[f];
  }
  check_finite("conv2d", *out.storage());
  if (rec) {
    auto sx = x.storage(), sk = k.storage(), sb = bias.storage(),
         so = out.storage();
    Tape<T>::active()->record([sx, sk, sb, so, N, C, H, W, F, kh, kw, stride,
                               padding, OH, OW, K, M] {
      if (so->g.empty()) return;
      std::vector<T> col(K * M);
      std::vector<T> colt;
      std::vector<T> kt;
      std::vector<T> dcol;
      if (sx->requires_grad) {
        ensure_grad(*sx);
        kt.resize(K * F);
        transpose_mat(F, K, sk->v.data(), kt.data());
        dcol.resize(K * M);
      }
      if (sk->requires_grad) {
        ensure_grad(*sk);
        colt.resize(M * K);
      }
      if (sb->requires_grad) ensure_grad(*sb);
      for (size_t n = 0; n < N; ++n) {
        const T* gn = so->g.data() + n * F * M;
        if (sx->requires_grad || sk->requires_grad) {
          im2col(sx->v.data() + n * C * H * W, C, H, W, kh, kw, stride, padding,
                 OH, OW, col.data());
        }
        if (sk->requires_grad) {
          transpose_mat(K, M, col.data(), colt.data());
          gemm_axpy(true, F, K, M, gn, colt.data(), sk->g.data());
        }
        if (sb->requires_grad) {
          for (size_t f = 0; f < F; ++f)
            for (size_t i = 0; i < M; ++i) sb->g[f] += gn[f * M + i];
        }
        if (sx->requires_grad) {
          gemm_axpy(false, K, M, F, kt.data(), gn, dcol.data());
          col2im_add(dcol.data(), C, H, W, kh, kw, stride, padding, OH, OW,
                     sx->g.data() + n * C * H * W);
        }
      }
    });
  }
  return out;
}

// ---- pooling / resampling --------------------------------------------------

template <class T>
Tensor<T> max_pool2x2(const Tensor<T>& x) {
  require(x.ndim() == 4, "max_pool2x2: expected 4-D tensor");
  const size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H % 2 == 0 && W % 2 == 0,
          "max_pool2x2: odd spatial extents " + shape_str(x.shape()));
  const size_t OH = H / 2, OW = W / 2;
  bool rec = want_record<T>({&x});
  Tensor<T> out = make_out<T>({N, C, OH, OW}, rec);
  // Saved flat input index of each maximum; first in scan order wins ties.
  auto argmax = std::make_shared<std::vector<size_t>>(out.size());
  const T* px = x.data();
  T* po = out.data();
  size_t o = 0;
  for (size_t n = 0; n < N; ++n) {
    for (size_t c = 0; c < C; ++c) {
      const size_t base = (n * C + c) * H * W;
      for (size_t oh = 0; oh < OH; ++oh) {
        for (size_t ow = 0; ow < OW; ++ow, ++o) {
          size_t best = base + (2 * oh) * W + 2 * ow;
          T bv = px[best];
          const size_t cand[3] = {base + (2 * oh) * W + 2 * ow + 1,
                                  base + (2 * oh + 1) * W + 2 * ow,
                                  base + (2 * oh + 1) * W + 2 * ow + 1};
          for (size_t idx : cand) {
            if (px[idx] > bv) {
              bv = px[idx];
              best = idx;
            }
          }
          po[o] = bv;
          (*argmax)[o] = best;
        }
      }
    }
  }
  check_finite("max_pool2x2", *out.storage());
  if (rec) {
    auto sx = x.storage(), so = out.storage();
    Tape<T>::active()->record([sx, so, argmax] {
      if (so->g.empty()) return;
      ensure_grad(*sx);
      for (size_t i = 0; i < so->g.size(); ++i)
        sx->g[(*argmax)[i]] += so->g[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> max_pool2x1(const Tensor<T>& x) {
  require(x.ndim() == 4, "max_pool2x1: expected 4-D tensor");
  const size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H % 2 == 0, "max_pool2x1: odd height " + shape_str(x.shape()));
  const size_t OH = H / 2;
  bool rec = want_record<T>({&x});
  Tensor<T> out = make_out<T>({N, C, OH, W}, rec);
  auto argmax = std::make_shared<std::vector<size_t>>(out.size());
  const T* px = x.data();
  T* po = out.data();
  size_t o = 0;
  for (size_t nc = 0; nc < N * C; ++nc) {
    const size_t base = nc * H * W;
    for (size_t oh = 0; oh < OH; ++oh) {
      for (size_t w = 0; w < W; ++w, ++o) {
        size_t i0 = base + (2 * oh) * W + w;
        size_t i1 = base + (2 * oh + 1) * W + w;
        size_t best = px[i1] > px[i0] ? i1 : i0;
        po[o] = px[best];
        (*argmax)[o] = best;
      }
    }
  }
  check_finite("max_pool2x1", *out.storage());
  if (rec) {
    auto sx = x.storage(), so = out.storage();
    Tape<T>::active()->record([sx, so, argmax] {
      if (so->g.empty()) return;
      ensure_grad(*sx);
      for (size_t i = 0; i < so->g.size(); ++i)
        sx->g[(*argmax)[i]] += so->g[i];
    });
  }
  return out;
}

namespace {

struct LerpCoord {
  size_t lo, hi;
  double w;  // weight of hi
};

// Half-pixel-center source coordinate (align_corners = false).
inline LerpCoord lerp_coord(size_t dst, size_t factor, size_t src_extent) {
  double s =
      (static_cast<double>(dst) + 0.5) / static_cast<double>(factor) - 0.5;
  double fl = std::floor(s);
  LerpCoord c;
  c.w = s - fl;
  ptrdiff_t lo = static_cast<ptrdiff_t>(fl);
  ptrdiff_t hi = lo + 1;
  ptrdiff_t maxi = static_cast<ptrdiff_t>(src_extent) - 1;
  c.lo = static_cast<size_t>(std::clamp<ptrdiff_t>(lo, 0, maxi));
  c.hi = static_cast<size_t>(std::clamp<ptrdiff_t>(hi, 0, maxi));
  return c;
}

}  // namespace

template <class T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, size_t factor) {
  require(x.ndim() == 4, "upsample_bilinear: expected 4-D tensor");
  if (factor == 0)
    throw contract_error("upsample_bilinear: factor must be >= 1");
  const size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const size_t OH = H * factor, OW = W * factor;
  bool rec = want_record<T>({&x});
  Tensor<T> out = make_out<T>({N, C, OH, OW}, rec);

  std::vector<LerpCoord> ys(OH), xs(OW);
  for (size_t oy = 0; oy < OH; ++oy) ys[oy] = lerp_coord(oy, factor, H);
  for (size_t ox = 0; ox < OW; ++ox) xs[ox] = lerp_coord(ox, factor, W);

  const T* px = x.data();
  T* po = out.data();
  for (size_t nc = 0; nc < N * C; ++nc) {
    const T* in = px + nc * H * W;
    T* op = po + nc * OH * OW;
    for (size_t oy = 0; oy < OH; ++oy) {
      const LerpCoord& cy = ys[oy];
      const T wy = static_cast<T>(cy.w);
      for (size_t ox = 0; ox < OW; ++ox) {
        const LerpCoord& cx = xs[ox];
        const T wx = static_cast<T>(cx.w);
        // Lerp form keeps constant inputs exactly constant.
        T v0 = in[cy.lo * W + cx.lo] +
               wx * (in[cy.lo * W + cx.hi] - in[cy.lo * W + cx.lo]);
        T v1 = in[cy.hi * W + cx.lo] +
               wx * (in[cy.hi * W + cx.hi] - in[cy.hi * W + cx.lo]);
        op[oy * OW + ox] = v0 + wy * (v1 - v0);
      }
    }
  }
  check_finite("upsample_bilinear", *out.storage());
  if (rec) {
    auto sx = x.storage(), so = out.storage();
    auto ysp = std::make_shared<std::vector<LerpCoord>>(std::move(ys));
    auto xsp = std::make_shared<std::vector<LerpCoord>>(std::move(xs));
    Tape<T>::active()->record([sx, so, ysp, xsp, N, C, H, W, OH, OW] {
      if (so->g.empty()) return;
      ensure_grad(*sx);
      for (size_t nc = 0; nc < N * C; ++nc) {
        T* dx = sx->g.data() + nc * H * W;
        const T* dg = so->g.data() + nc * OH * OW;
        for (size_t oy = 0; oy < OH; ++oy) {
          const LerpCoord& cy = (*ysp)[oy];
          const T wy = static_cast<T>(cy.w);
          for (size_t ox = 0; ox < OW; ++ox) {
            const LerpCoord& cx = (*xsp)[ox];
            const T wx = static_cast<T>(cx.w);
            const T g = dg[oy * OW + ox];
            dx[cy.lo * W + cx.lo] += (T(1) - wy) * (T(1) - wx) * g;
            dx[cy.lo * W + cx.hi] += (T(1) - wy) * wx * g;
            dx[cy.hi * W + cx.lo] += wy * (T(1) - wx) * g;
            dx[cy.hi * W + cx.hi] += wy * wx * g;
          }
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.ndim() == 4 && b.ndim() == 4,
          "concat_channels: expected 4-D tensors");
  require(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
          "concat_channels: spatial mismatch " + shape_str(a.shape()) +
              " vs " + shape_str(b.shape()));
  const size_t N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2),
               W = a.dim(3);
  const size_t HW = H * W;
  bool rec = want_record<T>({&a, &b});
  Tensor<T> out = make_out<T>({N, Ca + Cb, H, W}, rec);
  T* po = out.data();
  for (size_t n = 0; n < N; ++n) {
    std::memcpy(po + n * (Ca + Cb) * HW, a.data() + n * Ca * HW,
                Ca * HW * sizeof(T));
    std::memcpy(po + (n * (Ca + Cb) + Ca) * HW, b.data() + n * Cb * HW,
                Cb * HW * sizeof(T));
  }
  check_finite("concat_channels", *out.storage());
  if (rec) {
    auto sa = a.storage(), sb = b.storage(), so = out.storage();
    Tape<T>::active()->record([sa, sb, so, N, Ca, Cb, HW] {
      if (so->g.empty()) return;
      for (size_t n = 0; n < N; ++n) {
        if (sa->requires_grad) {
          ensure_grad(*sa);
          const T* g = so->g.data() + n * (Ca + Cb) * HW;
          T* da = sa->g.data() + n * Ca * HW;
          for (size_t i = 0; i < Ca * HW; ++i) da[i] += g[i];
        }
        if (sb->requires_grad) {
          ensure_grad(*sb);
          const T* g = so->g.data() + (n * (Ca + Cb) + Ca) * HW;
          T* db = sb->g.data() + n * Cb * HW;
          for (size_t i = 0; i < Cb * HW; ++i) db[i] += g[i];
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> adaptive_avg_pool_height(const Tensor<T>& x) {
  require(x.ndim() == 4, "adaptive_avg_pool_height: expected 4-D tensor");
  const size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H >= 1, "adaptive_avg_pool_height: empty height");
  bool rec = want_record<T>({&x});
  Tensor<T> out = make_out<T>({N, C, 1, W}, rec);
  const T* px = x.data();
  T* po = out.data();
  const T inv = T(1) / static_cast<T>(H);
  for (size_t nc = 0; nc < N * C; ++nc) {
    const T* in = px + nc * H * W;
    T* op = po + nc * W;
    for (size_t w = 0; w < W; ++w) {
      T acc = T(0);
      for (size_t h = 0; h < H; ++h) acc += in[h * W + w];
      op[w] = acc * inv;
    }
  }
  check_finite("adaptive_avg_pool_height", *out.storage());
  if (rec) {
    auto sx = x.storage(), so = out.storage();
    Tape<T>::active()->record([sx, so, N, C, H, W, inv] {
      if (so->g.empty()) return;
      ensure_grad(*sx);
      for (size_t nc = 0; nc < N * C; ++nc) {
        T* dx = sx->g.data() + nc * H * W;
        const T* g = so->g.data() + nc * W;
        for (size_t h = 0; h < H; ++h)
          for (size_t w = 0; w < W; ++w) dx[h * W + w] += g[w] * inv;
      }
    });
  }
  return out;
}

// ---- batch norm ------------------------------------------------------------

template <class T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, std::vector<T>& running_mean,
                     std::vector<T>& running_var, bool training, T eps,
                     T momentum) {
  require(x.ndim() == 4, "batch_norm: expected 4-D tensor");
  const size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(gamma.size() == C && beta.size() == C,
          "batch_norm: gamma/beta length " + std::to_string(gamma.size()) +
              " for " + std::to_string(C) + " channels");
  require(running_mean.size() == C && running_var.size() == C,
          "batch_norm: running stats length mismatch");
  const size_t m = N * H * W;
  const size_t HW = H * W;
  bool rec = want_record<T>({&x, &gamma, &beta});
  Tensor<T> out = make_out<T>(x.shape(), rec);

  auto mean = std::make_shared<std::vector<T>>(C, T(0));
  auto invstd = std::make_shared<std::vector<T>>(C, T(0));
  const T* px = x.data();
  T* po = out.data();
  const T* pg = gamma.data();
  const T* pb = beta.data();

  for (size_t c = 0; c < C; ++c) {
    T mu, var;
    if (training) {
      T acc = T(0);
      for (size_t n = 0; n < N; ++n) {
        const T* in = px + (n * C + c) * HW;
        for (size_t i = 0; i < HW; ++i) acc += in[i];
      }
      mu = acc / static_cast<T>(m);
      T vacc = T(0);
      for (size_t n = 0; n < N; ++n) {
        const T* in = px + (n * C + c) * HW;
        for (size_t i = 0; i < HW; ++i) {
          T d = in[i] - mu;
          vacc += d * d;
        }
      }
      var = vacc / static_cast<T>(m);
      running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * mu;
      running_var[c] = (T(1) - momentum) * running_var[c] + momentum * var;
    } else {
      mu = running_mean[c];
      var = running_var[c];
    }
    (*mean)[c] = mu;
    (*invstd)[c] = T(1) / std::sqrt(var + eps);
    const T a = pg[c] * (*invstd)[c];
    for (size_t n = 0; n < N; ++n) {
      const T* in = px + (n * C + c) * HW;
      T* op = po + (n * C + c) * HW;
      for (size_t i = 0; i < HW; ++i) op[i] = a * (in[i] - mu) + pb[c];
    }
  }
  check_finite("batch_norm", *out.storage());

  if (rec) {
    auto sx = x.storage(), sg = gamma.storage(), sb = beta.storage(),
         so = out.storage();
    Tape<T>::active()->record(
        [sx, sg, sb, so, mean, invstd, training, N, C, HW, m] {
          if (so->g.empty()) return;
          for (size_t c = 0; c < C; ++c) {
            const T mu = (*mean)[c], is = (*invstd)[c];
            // Channel reductions shared by all three gradients.
            T sum_dy = T(0), sum_dy_xhat = T(0);
            for (size_t n = 0; n < N; ++n) {
              const T* dy = so->g.data() + (n * C + c) * HW;
              const T* xv = sx->v.data() + (n * C + c) * HW;
              for (size_t i = 0; i < HW; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += dy[i] * (xv[i] - mu) * is;
              }
            }
            if (sg->requires_grad) {
              ensure_grad(*sg);
              sg->g[c] += sum_dy_xhat;
            }
            if (sb->requires_grad) {
              ensure_grad(*sb);
              sb->g[c] += sum_dy;
            }
            if (sx->requires_grad) {
              ensure_grad(*sx);
              const T a = sg->v[c] * is;
              const T im = T(1) / static_cast<T>(m);
              for (size_t n = 0; n < N; ++n) {
                const T* dy = so->g.data() + (n * C + c) * HW;
                const T* xv = sx->v.data() + (n * C + c) * HW;
                T* dx = sx->g.data() + (n * C + c) * HW;
                if (training) {
                  for (size_t i = 0; i < HW; ++i) {
                    T xhat = (xv[i] - mu) * is;
                    dx[i] +=
                        a * (dy[i] - sum_dy * im - xhat * sum_dy_xhat * im);
                  }
                } else {
                  for (size_t i = 0; i < HW; ++i) dx[i] += a * dy[i];
                }
              }
            }
          }
        });
  }
  return out;
}

// ---- softmax ---------------------------------------------------------------

template <class T>
Tensor<T> log_softmax_rows(const Tensor<T>& x) {
  require(x.ndim() == 2, "log_softmax_rows: expected 2-D tensor");
  const size_t n = x.dim(0), k = x.dim(1);
  require(k >= 1, "log_softmax_rows: empty rows");
  bool rec = want_record<T>({&x});
  Tensor<T> out = make_out<T>(x.shape(), rec);
  const T* px = x.data();
  T* po = out.data();
  for (size_t i = 0; i < n; ++i) {
    const T* row = px + i * k;
    T mx = row[0];
    for (size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    T acc = T(0);
    for (size_t j = 0; j < k; ++j) acc += std::exp(row[j] - mx);
    T lse = mx + std::log(acc);
    for (size_t j = 0; j < k; ++j) po[i * k + j] = row[j] - lse;
  }
  check_finite("log_softmax_rows", *out.storage());
  if (rec) {
    auto sx = x.storage(), so = out.storage();
    Tape<T>::active()->record([sx, so, n, k] {
      if (so->g.empty()) return;
      ensure_grad(*sx);
      for (size_t i = 0; i < n; ++i) {
        const T* dy = so->g.data() + i * k;
        const T* y = so->v.data() + i * k;
        T* dx = sx->g.data() + i * k;
        T s = T(0);
        for (size_t j = 0; j < k; ++j) s += dy[j];
        for (size_t j = 0; j < k; ++j) dx[j] += dy[j] - std::exp(y[j]) * s;
      }
    });
  }
  return out;
}

// ---- slicing / stacking ----------------------------------------------------

template <class T>
Tensor<T> slice_cols(const Tensor<T>& x, size_t c0, size_t c1) {
  require(x.ndim() == 2, "slice_cols: expected 2-D tensor");
  const size_t n = x.dim(0), m = x.dim(1);
  require(c0 < c1 && c1 <= m, "slice_cols: bad range");
  const size_t w = c1 - c0;
  bool rec = want_record<T>({&x});
  Tensor<T> out = make_out<T>({n, w}, rec);
  const T* px = x.data();
  T* po = out.data();
  for (size_t i = 0; i < n; ++i)
    std::memcpy(po + i * w, px + i * m + c0, w * sizeof(T));
  if (rec) {
    auto sx = x.storage(), so = out.storage();
    Tape<T>::active()->record([sx, so, n, m, c0, w] {
      if (so->g.empty()) return;
      ensure_grad(*sx);
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < w; ++j)
          sx->g[i * m + c0 + j] += so->g[i * w + j];
    });
  }
  return out;
}

template <class T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.ndim() == 2 && b.ndim() == 2 && a.dim(0) == b.dim(0),
          "concat_cols: row mismatch " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
  const size_t n = a.dim(0), ma = a.dim(1), mb = b.dim(1);
  bool rec = want_record<T>({&a, &b});
  Tensor<T> out = make_out<T>({n, ma + mb}, rec);
  T* po = out.data();
  for (size_t i = 0; i < n; ++i) {
    std::memcpy(po + i * (ma + mb), a.data() + i * ma, ma * sizeof(T));
    std::memcpy(po + i * (ma + mb) + ma, b.data() + i * mb, mb * sizeof(T));
  }
  if (rec) {
    auto sa = a.storage(), sb = b.storage(), so = out.storage();
    Tape<T>::active()->record([sa, sb, so, n, ma, mb] {
      if (so->g.empty()) return;
      for (size_t i = 0; i < n; ++i) {
        if (sa->requires_grad) {
          ensure_grad(*sa);
          for (size_t j = 0; j < ma; ++j)
            sa->g[i * ma + j] += so->g[i * (ma + mb) + j];
        }
        if (sb->requires_grad) {
          ensure_grad(*sb);
          for (size_t j = 0; j < mb; ++j)
            sb->g[i * mb + j] += so->g[i * (ma + mb) + ma + j];
        }
      }
    });
  }
  return out;
}

template <class T>
std::vector<Tensor<T>> unbind_width(const Tensor<T>& x) {
  require(x.ndim() == 4 && x.dim(2) == 1,
          "unbind_width: expected [N,C,1,W], got " + shape_str(x.shape()));
  const size_t N = x.dim(0), C = x.dim(1), W = x.dim(3);
  bool rec = want_record<T>({&x});
  std::vector<Tensor<T>> outs;
  outs.reserve(W);
  const T* px = x.data();
  for (size_t w = 0; w < W; ++w) {
    Tensor<T> t = make_out<T>({N, C}, rec);
    T* po = t.data();
    for (size_t n = 0; n < N; ++n)
      for (size_t c = 0; c < C; ++c) po[n * C + c] = px[(n * C + c) * W + w];
    outs.push_back(t);
  }
  if (rec) {
    auto sx = x.storage();
    std::vector<std::shared_ptr<detail::Storage<T>>> souts;
    souts.reserve(W);
    for (auto& t : outs) souts.push_back(t.storage());
    Tape<T>::active()->record([sx, souts, N, C, W] {
      ensure_grad(*sx);
      for (size_t w = 0; w < W; ++w) {
        const auto& so = souts[w];
        if (so->g.empty()) continue;
        for (size_t n = 0; n < N; ++n)
          for (size_t c = 0; c < C; ++c)
            sx->g[(n * C + c) * W + w] += so->g[n * C + c];
      }
    });
  }
  return outs;
}

template <class T>
Tensor<T> gather_sample(const std::vector<Tensor<T>>& seq, size_t n) {
  if (seq.empty()) throw contract_error("gather_sample: empty sequence");
  const size_t N = seq[0].dim(0), K = seq[0].dim(1), S = seq.size();
  require(n < N, "gather_sample: row out of range");
  bool rec = false;
  if (Tape<T>::active()) {
    for (const auto& t : seq) rec = rec || t.requires_grad();
  }
  Tensor<T> out = make_out<T>({S, K}, rec);
  T* po = out.data();
  for (size_t t = 0; t < S; ++t) {
    require(seq[t].ndim() == 2 && seq[t].dim(0) == N && seq[t].dim(1) == K,
            "gather_sample: inconsistent step shapes");
    std::memcpy(po + t * K, seq[t].data() + n * K, K * sizeof(T));
  }
  if (rec) {
    std::vector<std::shared_ptr<detail::Storage<T>>> sins;
    sins.reserve(S);
    for (const auto& t : seq) sins.push_back(t.storage());
    auto so = out.storage();
    Tape<T>::active()->record([sins, so, n, K, S] {
      if (so->g.empty()) return;
      for (size_t t = 0; t < S; ++t) {
        if (!sins[t]->requires_grad) continue;
        ensure_grad(*sins[t]);
        for (size_t j = 0; j < K; ++j)
          sins[t]->g[n * K + j] += so->g[t * K + j];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> sum_tensors(const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw contract_error("sum_tensors: empty list");
  bool rec = false;
  if (Tape<T>::active()) {
    for (const auto& t : xs) rec = rec || t.requires_grad();
  }
  Tensor<T> out = make_out<T>(xs[0].shape(), rec);
  T* po = out.data();
  for (const auto& t : xs) {
    require(t.shape() == xs[0].shape(), "sum_tensors: shape mismatch");
    const T* p = t.data();
    for (size_t i = 0; i < out.size(); ++i) po[i] += p[i];
  }
  check_finite("sum_tensors", *out.storage());
  if (rec) {
    std::vector<std::shared_ptr<detail::Storage<T>>> sins;
    sins.reserve(xs.size());
    for (const auto& t : xs) sins.push_back(t.storage());
    auto so = out.storage();
    Tape<T>::active()->record([sins, so] {
      if (so->g.empty()) return;
      for (const auto& si : sins) {
        if (!si->requires_grad) continue;
        ensure_grad(*si);
        for (size_t i = 0; i < so->g.size(); ++i) si->g[i] += so->g[i];
      }
    });
  }
  return out;
}

// ---- gradient check --------------------------------------------------------

double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                  Tensor<double> x, double h) {
  if (h <= 0) throw contract_error("grad_check: h must be positive");
  x.set_requires_grad(true);
  x.zero_grad();
  std::vector<double> analytic(x.size(), 0.0);
  try {
    Tape<double> tape;
    Tensor<double> y = f(x);
    tape.backward(y);
    if (x.has_grad()) analytic = x.grad_values();
  } catch (const numeric_error&) {
    return std::numeric_limits<double>::infinity();
  }
  x.set_requires_grad(false);
  double max_err = 0.0;
  double* px = x.data();
  for (size_t i = 0; i < x.size(); ++i) {
    const double orig = px[i];
    double fp, fm;
    try {
      px[i] = orig + h;
      fp = f(x).item();
      px[i] = orig - h;
      fm = f(x).item();
    } catch (const numeric_error&) {
      px[i] = orig;
      return std::numeric_limits<double>::infinity();
    }
    px[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      return std::numeric_limits<double>::infinity();
    }
    const double numeric = (fp - fm) / (2.0 * h);
    const double err =
        std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    max_err = std::max(max_err, err);
  }
  x.set_requires_grad(true);
  return max_err;
}

// ---- explicit instantiations -----------------------------------------------

#define NUQTA_INSTANTIATE(T)                                                   \
  template class Tensor<T>;                                                    \
  template class Tape<T>;                                                      \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> scale(const Tensor<T>&, T);                               \
  template Tensor<T> apply_mask(const Tensor<T>&, const std::vector<T>&);      \
  template Tensor<T> relu(const Tensor<T>&);                                   \
  template Tensor<T> sigmoid(const Tensor<T>&);                                \
  template Tensor<T> tanh(const Tensor<T>&);                                   \
  template Tensor<T> sum(const Tensor<T>&);                                    \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>&);                                 \
  template Tensor<T> bias_add_rows(const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>&, size_t, size_t);                 \
  template Tensor<T> max_pool2x2(const Tensor<T>&);                            \
  template Tensor<T> max_pool2x1(const Tensor<T>&);                            \
  template Tensor<T> upsample_bilinear(const Tensor<T>&, size_t);              \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> adaptive_avg_pool_height(const Tensor<T>&);               \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&,            \
                                const Tensor<T>&, std::vector<T>&,             \
                                std::vector<T>&, bool, T, T);                  \
  template Tensor<T> log_softmax_rows(const Tensor<T>&);                       \
  template Tensor<T> slice_cols(const Tensor<T>&, size_t, size_t);             \
  template Tensor<T> concat_cols(const Tensor<T>&, const Tensor<T>&);          \
  template std::vector<Tensor<T>> unbind_width(const Tensor<T>&);              \
  template Tensor<T> gather_sample(const std::vector<Tensor<T>>&, size_t);     \
  template Tensor<T> sum_tensors(const std::vector<Tensor<T>>&);

NUQTA_INSTANTIATE(float)
NUQTA_INSTANTIATE(double)

#undef NUQTA_INSTANTIATE

}  // namespace nuqta
