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

#include "nuqta/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace nuqta {

TrainConfig TrainConfig::from_config(const Config& cfg) {
  TrainConfig t;
  t.batch_size = static_cast<size_t>(
      cfg.get_int("train", "batch_size", static_cast<long long>(t.batch_size)));
  t.clip = cfg.get_num("train", "clip", t.clip);
  t.lr = cfg.get_num("train", "lr", t.lr);
  t.rho = cfg.get_num("train", "rho", t.rho);
  t.eps = cfg.get_num("train", "eps", t.eps);
  t.max_iters = static_cast<size_t>(
      cfg.get_int("train", "max_iters", static_cast<long long>(t.max_iters)));
  t.eval_every = static_cast<size_t>(
      cfg.get_int("train", "eval_every", static_cast<long long>(t.eval_every)));
  t.seed = static_cast<uint64_t>(
      cfg.get_int("train", "seed", static_cast<long long>(t.seed)));
  t.stop_accuracy = cfg.get_num("train", "stop_accuracy", t.stop_accuracy);
  if (t.batch_size < 1) throw data_error("train.batch_size must be >= 1");
  if (t.clip <= 0) throw data_error("train.clip must be > 0");
  return t;
}

void TrainConfig::to_config(Config& cfg) const {
  cfg.set("train", "batch_size", std::to_string(batch_size));
  cfg.set("train", "clip", std::to_string(clip));
  cfg.set("train", "lr", std::to_string(lr));
  cfg.set("train", "rho", std::to_string(rho));
  cfg.set("train", "eps", std::to_string(eps));
  cfg.set("train", "max_iters", std::to_string(max_iters));
  cfg.set("train", "eval_every", std::to_string(eval_every));
  cfg.set("train", "seed", std::to_string(seed));
  cfg.set("train", "stop_accuracy", std::to_string(stop_accuracy));
}

// ---- optimizer ---------------------------------------------------------------

template <class T>
void adadelta_step(Tensor<T>& param, std::vector<T>& eg2, std::vector<T>& edx2,
                   double rho, double eps, double lr) {
  if (eg2.size() != param.size() || edx2.size() != param.size())
    throw contract_error("adadelta_step: accumulator shape mismatch");
  if (!param.has_grad()) return;
  const std::vector<T>& g = param.grad_values();
  T* p = param.data();
  for (size_t i = 0; i < param.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    double e = static_cast<double>(eg2[i]);
    double d = static_cast<double>(edx2[i]);
    e = rho * e + (1.0 - rho) * gi * gi;
    const double dx = -(std::sqrt(d + eps) / std::sqrt(e + eps)) * gi;
    d = rho * d + (1.0 - rho) * dx * dx;
    eg2[i] = static_cast<T>(e);
    edx2[i] = static_cast<T>(d);
    p[i] = static_cast<T>(static_cast<double>(p[i]) + lr * dx);
  }
}

template <class T>
AdaDelta<T>::AdaDelta(ParamSet<T>& params, double rho_, double eps_,
                      double lr_)
    : rho(rho_), eps(eps_), lr(lr_) {
  for (auto& [name, t] : params.params) {
    eg2_.emplace_back(t.size(), T(0));
    edx2_.emplace_back(t.size(), T(0));
  }
}

template <class T>
void AdaDelta<T>::step(ParamSet<T>& params) {
  for (size_t i = 0; i < params.params.size(); ++i) {
    adadelta_step(params.params[i].second, eg2_[i], edx2_[i], rho, eps, lr);
    params.params[i].second.zero_grad();
  }
}

template <class T>
double clip_gradients(ParamSet<T>& params, double magnitude) {
  if (magnitude <= 0) throw contract_error("clip_gradients: magnitude > 0");
  double sq = 0;
  for (auto& [name, t] : params.params) {
    if (!t.has_grad()) continue;
    for (T g : t.grad_values()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > magnitude) {
    const double s = magnitude / norm;
    for (auto& [name, t] : params.params) {
      if (!t.has_grad()) continue;
      T* g = t.grad();
      for (size_t i = 0; i < t.size(); ++i)
        g[i] = static_cast<T>(static_cast<double>(g[i]) * s);
    }
  }
  return norm;
}

// ---- batching ----------------------------------------------------------------

template <class T>
Batch<T> make_batch(const std::vector<const Sample*>& samples,
                    size_t target_height, size_t width_divisor) {
  if (samples.empty()) throw contract_error("make_batch: empty batch");
  const size_t n = samples.size();
  std::vector<Image> resized(n);
  std::vector<size_t> widths(n);
  size_t wmax = 0;
  for (size_t i = 0; i < n; ++i) {
    const Image& im = samples[i]->image;
    size_t w = im.w;
    Image scaled = im;
    if (im.h != target_height) {
      w = std::max<size_t>(
          1, static_cast<size_t>(std::llround(
                 static_cast<double>(im.w) * target_height / im.h)));
      scaled = resize_bilinear(im, target_height, w);
    }
    // Pad width up to the backbone's divisor.
    const size_t padded = ((w + width_divisor - 1) / width_divisor) *
                          width_divisor;
    widths[i] = padded;
    wmax = std::max(wmax, padded);
    resized[i] = std::move(scaled);
  }
  Batch<T> batch;
  batch.widths = std::move(widths);
  batch.samples = samples;
  batch.images = Tensor<T>({n, 1, target_height, wmax});
  T* px = batch.images.data();
  for (size_t i = 0; i < n; ++i) {
    const Image& im = resized[i];
    for (size_t y = 0; y < target_height; ++y) {
      for (size_t x = 0; x < im.w; ++x) {
        // Ink high: padding value 0 means background.
        px[(i * target_height + y) * wmax + x] =
            static_cast<T>(1.0f - im.at(y, x));
      }
    }
  }
  return batch;
}

template <class T>
Tensor<T> batch_ctc_loss(Recognizer<T>& model, const Batch<T>& batch,
                         const Sequence<T>& log_probs) {
  const size_t n = batch.samples.size();
  std::vector<Tensor<T>> losses;
  losses.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    Tensor<T> mat = gather_sample(log_probs, i);
    const size_t valid = model.out_width(batch.widths[i]);
    losses.push_back(ctc_loss_op(mat, batch.samples[i]->labels, valid));
  }
  return scale(sum_tensors(losses), static_cast<T>(1.0 / double(n)));
}

template <class T>
std::vector<EvalPair> predict_dataset(Recognizer<T>& model,
                                      const Dataset& data, size_t batch_size,
                                      size_t beam_width) {
  std::vector<EvalPair> pairs;
  pairs.reserve(data.samples.size());
  Rng noop_rng(0);
  for (size_t at = 0; at < data.samples.size(); at += batch_size) {
    std::vector<const Sample*> chunk;
    for (size_t i = at; i < std::min(at + batch_size, data.samples.size());
         ++i) {
      chunk.push_back(&data.samples[i]);
    }
    Batch<T> batch = make_batch<T>(chunk, model.config().height,
                                   model.width_divisor());
    Sequence<T> lp = model.forward(batch.images, false, noop_rng);
    for (size_t i = 0; i < chunk.size(); ++i) {
      Tensor<T> mat = gather_sample(lp, i);
      const size_t valid = model.out_width(batch.widths[i]);
      std::vector<int> labels =
          beam_width > 0 ? beam_decode(mat, valid, beam_width)
                         : greedy_decode(mat, valid);
      pairs.emplace_back(data.charset.decode(labels), chunk[i]->transcript);
    }
  }
  return pairs;
}

// ---- loop --------------------------------------------------------------------

template <class T>
TrainStats train(Recognizer<T>& model, const Dataset& train_set,
                 const Dataset* val_set, const TrainConfig& cfg,
                 const std::string& out_dir) {
  if (train_set.samples.empty()) throw data_error("train: dataset empty");
  if (train_set.charset.size() != model.charset_size())
    throw data_error("train: dataset charset does not match the model head");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory: " + out_dir);
  TrainStats stats;
  stats.log_path = (fs::path(out_dir) / "train.log").string();
  stats.checkpoint_path = (fs::path(out_dir) / "model.ckpt").string();
  std::ofstream log(stats.log_path, std::ios::binary);
  if (!log) throw io_error("cannot write " + stats.log_path);

  AdaDelta<T> opt(model.params(), cfg.rho, cfg.eps, cfg.lr);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x5307));
  Rng dropout_rng(derive_seed(cfg.seed, 0xD307));

  std::vector<size_t> order(train_set.samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle_rng.shuffle(order);
  size_t cursor = 0;

  const auto evaluate_accuracy = [&]() {
    const Dataset& ds = val_set ? *val_set : train_set;
    return char_accuracy(predict_dataset(model, ds, cfg.batch_size));
  };

  char line[128];
  for (size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    std::vector<const Sample*> chunk;
    std::vector<size_t> chunk_idx;
    for (size_t b = 0; b < std::min(cfg.batch_size, order.size()); ++b) {
      if (cursor == order.size()) {
        shuffle_rng.shuffle(order);
        cursor = 0;
      }
      chunk_idx.push_back(order[cursor]);
      chunk.push_back(&train_set.samples[order[cursor]]);
      ++cursor;
    }

    double loss_value = 0;
    try {
      Batch<T> batch =
          make_batch<T>(chunk, model.config().height, model.width_divisor());
      Tape<T> tape;
      Sequence<T> lp = model.forward(batch.images, true, dropout_rng);
      Tensor<T> loss = batch_ctc_loss(model, batch, lp);
      loss_value = static_cast<double>(loss.item());
      if (!std::isfinite(loss_value))
        throw numeric_error("non-finite loss");
      tape.backward(loss);
    } catch (const numeric_error& e) {
      std::ostringstream os;
      os << "training aborted at iter " << iter << " (" << e.what()
         << "); batch indices:";
      for (size_t idx : chunk_idx) os << " " << idx;
      throw numeric_error(os.str());
    }
    clip_gradients(model.params(), cfg.clip);
    opt.step(model.params());
    stats.iters_run = iter;

    const bool eval_now =
        cfg.eval_every > 0 &&
        (iter % cfg.eval_every == 0 || iter == cfg.max_iters);
    if (eval_now) {
      const double acc = evaluate_accuracy();
      std::snprintf(line, sizeof(line), "%zu\t%.9g\t%.9g\n", iter, loss_value,
                    acc);
      log << line;
      log.flush();
      if (acc > stats.best_accuracy) {
        stats.best_accuracy = acc;
        save_checkpoint(stats.checkpoint_path, model, train_set.charset);
      }
      if (cfg.stop_accuracy >= 0 && acc >= cfg.stop_accuracy) break;
    } else {
      std::snprintf(line, sizeof(line), "%zu\t%.9g\n", iter, loss_value);
      log << line;
    }
  }
  if (stats.best_accuracy < 0) {
    // Never evaluated (eval_every = 0): still persist the final weights.
    save_checkpoint(stats.checkpoint_path, model, train_set.charset);
  }
  return stats;
}

#define NUQTA_INSTANTIATE_TRAINER(T)                                          \
  template void adadelta_step(Tensor<T>&, std::vector<T>&, std::vector<T>&,   \
                              double, double, double);                        \
  template class AdaDelta<T>;                                                 \
  template double clip_gradients(ParamSet<T>&, double);                       \
  template struct Batch<T>;                                                   \
  template Batch<T> make_batch(const std::vector<const Sample*>&, size_t,     \
                               size_t);                                       \
  template Tensor<T> batch_ctc_loss(Recognizer<T>&, const Batch<T>&,         \
                                    const Sequence<T>&);                      \
  template std::vector<EvalPair> predict_dataset(Recognizer<T>&,             \
                                                 const Dataset&, size_t,      \
                                                 size_t);                     \
  template TrainStats train(Recognizer<T>&, const Dataset&, const Dataset*,  \
                            const TrainConfig&, const std::string&);

NUQTA_INSTANTIATE_TRAINER(float)
NUQTA_INSTANTIATE_TRAINER(double)

#undef NUQTA_INSTANTIATE_TRAINER

}  // namespace nuqta
