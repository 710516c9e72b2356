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

#include "nuqta/backbone.hpp"

#include <cmath>

namespace nuqta {

// ---- unet -------------------------------------------------------------------

template <class T>
UNetBackbone<T>::UNetBackbone(const UNetConfig& cfg, Rng& rng) : cfg_(cfg) {
  for (size_t r = 1; r <= 5; ++r) {
    const size_t in = r == 1 ? cfg.in_channels : cfg.channels(r - 1);
    const size_t out = cfg.channels(r);
    enc[r - 1].c1 = ConvBlock<T>(in, out, 3, 1, 1, rng);
    enc[r - 1].c2 = ConvBlock<T>(out, out, 3, 1, 1, rng);
  }
  for (size_t r = 1; r <= 4; ++r) {
    const size_t in = cfg.channels(r + 1) + cfg.channels(r);
    const size_t out = cfg.channels(r);
    dec[r - 1].c1 = ConvBlock<T>(in, out, 3, 1, 1, rng);
    dec[r - 1].c2 = ConvBlock<T>(out, out, 3, 1, 1, rng);
  }
}

template <class T>
Tensor<T> UNetBackbone<T>::encode_step(size_t level, const Tensor<T>& f_prev,
                                       bool training, Tensor<T>* skip) {
  if (level < 1 || level > 4)
    throw contract_error("unet encode_step: level out of range");
  if (f_prev.dim(2) % 2 != 0 || f_prev.dim(3) % 2 != 0) {
    throw dim_error("unet encode_step: odd spatial extents " +
                    shape_str(f_prev.shape()));
  }
  Tensor<T> m = enc[level - 1](f_prev, training);
  if (skip) *skip = m;
  return max_pool2x2(m);
}

template <class T>
Tensor<T> UNetBackbone<T>::decode_step(size_t level, const Tensor<T>& f_next,
                                       const Tensor<T>& m_r, bool training) {
  if (level < 1 || level > 4)
    throw contract_error("unet decode_step: level out of range");
  Tensor<T> up = upsample_bilinear(f_next, 2);
  if (up.dim(2) != m_r.dim(2) || up.dim(3) != m_r.dim(3)) {
    throw dim_error("unet decode_step: skip extents " + shape_str(m_r.shape()) +
                    " do not match upsampled " + shape_str(up.shape()));
  }
  return dec[level - 1](concat_channels(up, m_r), training);
}

template <class T>
Tensor<T> UNetBackbone<T>::forward(const Tensor<T>& image, bool training) {
  if (image.ndim() != 4 || image.dim(1) != cfg_.in_channels)
    throw dim_error("unet: expected [N," + std::to_string(cfg_.in_channels) +
                    ",H,W], got " + shape_str(image.shape()));
  if (image.dim(2) % 16 != 0 || image.dim(3) % 16 != 0) {
    throw dim_error(
        "unet: spatial extents must be multiples of 16 for the five-level "
        "pyramid; got " +
        shape_str(image.shape()) + " (pad the input)");
  }
  std::array<Tensor<T>, 4> skips;
  Tensor<T> f = image;
  for (size_t r = 1; r <= 4; ++r) f = encode_step(r, f, training, &skips[r - 1]);
  f = enc[4](f, training);  // bottom of the pyramid, no pool
  for (size_t r = 4; r >= 1; --r) f = decode_step(r, f, skips[r - 1], training);
  return f;
}

template <class T>
void UNetBackbone<T>::register_into(ParamSet<T>& ps,
                                    const std::string& prefix) {
  for (size_t r = 1; r <= 5; ++r) {
    enc[r - 1].c1.register_into(ps, prefix + ".enc" + std::to_string(r) + ".a");
    enc[r - 1].c2.register_into(ps, prefix + ".enc" + std::to_string(r) + ".b");
  }
  for (size_t r = 1; r <= 4; ++r) {
    dec[r - 1].c1.register_into(ps, prefix + ".dec" + std::to_string(r) + ".a");
    dec[r - 1].c2.register_into(ps, prefix + ".dec" + std::to_string(r) + ".b");
  }
}

// ---- hrnet ------------------------------------------------------------------

template <class T>
HRNetBackbone<T>::HRNetBackbone(const HRNetConfig& cfg, Rng& rng) : cfg_(cfg) {
  stem1 = ConvBlock<T>(cfg.in_channels, cfg.widths[0], 3, 1, 1, rng);
  stem2 = ConvBlock<T>(cfg.widths[0], cfg.widths[0], 3, 1, 1, rng);
  for (size_t stage = 1; stage <= 4; ++stage) {
    Stage& st = stages[stage - 1];
    st.blocks.resize(stage);
    for (size_t r = 1; r <= stage; ++r) {
      const size_t w = cfg.widths[r - 1];
      for (size_t b = 0; b < cfg.blocks_per_stream; ++b) {
        ResidualBlock blk;
        blk.c1 = Conv2dLayer<T>(w, w, 3, 1, 1, rng);
        blk.b1 = BatchNorm2dLayer<T>(w);
        blk.c2 = Conv2dLayer<T>(w, w, 3, 1, 1, rng);
        blk.b2 = BatchNorm2dLayer<T>(w);
        st.blocks[r - 1].push_back(std::move(blk));
      }
    }
    const size_t outs = out_stream_count(stage);
    st.fuse.resize(outs);
    for (size_t r = 1; r <= outs; ++r) {
      st.fuse[r - 1].resize(stage);
      for (size_t i = 1; i <= stage; ++i) {
        Transform& tr = st.fuse[r - 1][i - 1];
        if (i < r) {
          // Halve (r - i) times with strided 3x3 convolutions, widening one
          // resolution step at a time.
          for (size_t step = 0; step < r - i; ++step) {
            TransformUnit u;
            const size_t cin = cfg.widths[i - 1 + step];
            const size_t cout = cfg.widths[i + step];
            u.conv = Conv2dLayer<T>(cin, cout, 3, 2, 1, rng);
            u.bn = BatchNorm2dLayer<T>(cout);
            tr.units.push_back(std::move(u));
          }
        } else if (i > r) {
          TransformUnit u;
          u.conv = Conv2dLayer<T>(cfg.widths[i - 1], cfg.widths[r - 1], 1, 1, 0,
                                  rng);
          u.bn = BatchNorm2dLayer<T>(cfg.widths[r - 1]);
          tr.units.push_back(std::move(u));
          tr.upsample_factor = size_t{1} << (i - r);
        }
      }
    }
  }
}

template <class T>
Tensor<T> HRNetBackbone<T>::transform(size_t stage, size_t i, size_t r,
                                      const Tensor<T>& in, bool training) {
  if (stage < 1 || stage > 4 || i < 1 || i > stage || r < 1 ||
      r > out_stream_count(stage)) {
    throw contract_error("hrnet transform: invalid indices stage=" +
                         std::to_string(stage) + " i=" + std::to_string(i) +
                         " r=" + std::to_string(r));
  }
  if (i == r) return in;
  Transform& tr = stages[stage - 1].fuse[r - 1][i - 1];
  Tensor<T> x = in;
  if (i < r) {
    for (size_t u = 0; u < tr.units.size(); ++u) {
      x = tr.units[u].bn(tr.units[u].conv(x), training);
      if (u + 1 < tr.units.size()) x = relu(x);
    }
    return x;
  }
  x = tr.units[0].bn(tr.units[0].conv(x), training);
  return upsample_bilinear(x, tr.upsample_factor);
}

template <class T>
std::vector<Tensor<T>> HRNetBackbone<T>::fuse_streams(
    const std::vector<Tensor<T>>& streams, size_t stage, bool training) {
  if (stage < 1 || stage > 4)
    throw contract_error("hrnet fuse_streams: invalid stage");
  if (streams.size() != stage) {
    throw dim_error("hrnet fuse_streams: stage " + std::to_string(stage) +
                    " expects " + std::to_string(stage) + " streams, got " +
                    std::to_string(streams.size()));
  }
  for (size_t i = 1; i <= stage; ++i) {
    if (streams[i - 1].dim(1) != cfg_.widths[i - 1]) {
      throw dim_error("hrnet fuse_streams: stream " + std::to_string(i) +
                      " width " + std::to_string(streams[i - 1].dim(1)) +
                      " != " + std::to_string(cfg_.widths[i - 1]));
    }
    if (i > 1 && (streams[i - 2].dim(2) != 2 * streams[i - 1].dim(2) ||
                  streams[i - 2].dim(3) != 2 * streams[i - 1].dim(3))) {
      throw dim_error("hrnet fuse_streams: stream " + std::to_string(i) +
                      " is not at half the previous resolution");
    }
  }
  const size_t outs = out_stream_count(stage);
  std::vector<Tensor<T>> result;
  result.reserve(outs);
  for (size_t r = 1; r <= outs; ++r) {
    std::vector<Tensor<T>> terms;
    terms.reserve(stage);
    for (size_t i = 1; i <= stage; ++i)
      terms.push_back(transform(stage, i, r, streams[i - 1], training));
    result.push_back(relu(sum_tensors(terms)));
  }
  return result;
}

template <class T>
Tensor<T> HRNetBackbone<T>::forward(const Tensor<T>& image, bool training) {
  if (image.ndim() != 4 || image.dim(1) != cfg_.in_channels)
    throw dim_error("hrnet: expected [N," + std::to_string(cfg_.in_channels) +
                    ",H,W], got " + shape_str(image.shape()));
  const size_t H = image.dim(2), W = image.dim(3);
  if (H % 8 != 0 || W % 8 != 0) {
    throw dim_error(
        "hrnet: spatial extents must be multiples of 8 for four resolution "
        "streams; got " +
        shape_str(image.shape()) + " (pad the input)");
  }
  Tensor<T> x = stem2(stem1(image, training), training);
  std::vector<Tensor<T>> streams{x};
  for (size_t stage = 1; stage <= 4; ++stage) {
    if (streams.size() != stage)
      throw contract_error("hrnet: stream count drifted");
    for (size_t r = 1; r <= stage; ++r) {
      // The full-resolution stream must keep its extent through every stage.
      if (streams[r - 1].dim(2) != H >> (r - 1) ||
          streams[r - 1].dim(3) != W >> (r - 1)) {
        throw dim_error("hrnet: stream " + std::to_string(r) +
                        " lost its resolution at stage " +
                        std::to_string(stage));
      }
      for (auto& blk : stages[stage - 1].blocks[r - 1])
        streams[r - 1] = blk(streams[r - 1], training);
    }
    streams = fuse_streams(streams, stage, training);
  }
  // Head: bring every stream to full resolution and stack channels.
  Tensor<T> out = streams[0];
  for (size_t r = 2; r <= 4; ++r) {
    out = concat_channels(
        out, upsample_bilinear(streams[r - 1], size_t{1} << (r - 1)));
  }
  return out;
}

template <class T>
size_t HRNetBackbone<T>::out_channels() const {
  size_t c = 0;
  for (size_t w : cfg_.widths) c += w;
  return c;
}

template <class T>
void HRNetBackbone<T>::register_into(ParamSet<T>& ps,
                                     const std::string& prefix) {
  stem1.register_into(ps, prefix + ".stem1");
  stem2.register_into(ps, prefix + ".stem2");
  for (size_t stage = 1; stage <= 4; ++stage) {
    Stage& st = stages[stage - 1];
    const std::string sp = prefix + ".s" + std::to_string(stage);
    for (size_t r = 1; r <= stage; ++r) {
      for (size_t b = 0; b < st.blocks[r - 1].size(); ++b) {
        const std::string bp =
            sp + ".r" + std::to_string(r) + ".blk" + std::to_string(b);
        st.blocks[r - 1][b].c1.register_into(ps, bp + ".c1");
        st.blocks[r - 1][b].b1.register_into(ps, bp + ".b1");
        st.blocks[r - 1][b].c2.register_into(ps, bp + ".c2");
        st.blocks[r - 1][b].b2.register_into(ps, bp + ".b2");
      }
    }
    for (size_t r = 1; r <= st.fuse.size(); ++r) {
      for (size_t i = 1; i <= stage; ++i) {
        Transform& tr = st.fuse[r - 1][i - 1];
        for (size_t u = 0; u < tr.units.size(); ++u) {
          const std::string tp = sp + ".f" + std::to_string(i) + "to" +
                                 std::to_string(r) + ".u" + std::to_string(u);
          tr.units[u].conv.register_into(ps, tp + ".conv");
          tr.units[u].bn.register_into(ps, tp + ".bn");
        }
      }
    }
  }
}

// ---- lowres baseline ----------------------------------------------------------

template <class T>
LowresBackbone<T>::LowresBackbone(const LowresConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  for (size_t i = 0; i < 4; ++i) {
    const size_t in = i == 0 ? cfg.in_channels : cfg.channels[i - 1];
    blocks[i] = ConvBlock<T>(in, cfg.channels[i], 3, 1, 1, rng);
  }
}

template <class T>
Tensor<T> LowresBackbone<T>::forward(const Tensor<T>& image, bool training) {
  if (image.ndim() != 4 || image.dim(1) != cfg_.in_channels)
    throw dim_error("lowres: expected [N," + std::to_string(cfg_.in_channels) +
                    ",H,W], got " + shape_str(image.shape()));
  if (image.dim(2) % 16 != 0 || image.dim(3) % 4 != 0) {
    throw dim_error("lowres: height must be a multiple of 16 and width of 4; "
                    "got " +
                    shape_str(image.shape()));
  }
  Tensor<T> x = max_pool2x2(blocks[0](image, training));
  x = max_pool2x2(blocks[1](x, training));
  x = max_pool2x1(blocks[2](x, training));
  x = max_pool2x1(blocks[3](x, training));
  return x;
}

template <class T>
void LowresBackbone<T>::register_into(ParamSet<T>& ps,
                                      const std::string& prefix) {
  for (size_t i = 0; i < 4; ++i)
    blocks[i].register_into(ps, prefix + ".blk" + std::to_string(i));
}

template class UNetBackbone<float>;
template class UNetBackbone<double>;
template class HRNetBackbone<float>;
template class HRNetBackbone<double>;
template class LowresBackbone<float>;
template class LowresBackbone<double>;

}  // namespace nuqta
