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

#include "nuqta/model.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace nuqta {

namespace {

std::array<size_t, 4> parse_widths(const std::string& csv,
                                   std::array<size_t, 4> fallback,
                                   const std::string& what) {
  if (csv.empty()) return fallback;
  std::array<size_t, 4> out{};
  std::istringstream in(csv);
  std::string tok;
  size_t i = 0;
  while (std::getline(in, tok, ',')) {
    if (i >= 4) throw data_error(what + ": expected 4 comma-separated sizes");
    try {
      out[i++] = static_cast<size_t>(std::stoull(tok));
    } catch (const std::exception&) {
      throw data_error(what + ": bad size '" + tok + "'");
    }
  }
  if (i != 4) throw data_error(what + ": expected 4 comma-separated sizes");
  return out;
}

std::string widths_csv(const std::array<size_t, 4>& w) {
  std::ostringstream os;
  for (size_t i = 0; i < 4; ++i) os << (i ? "," : "") << w[i];
  return os.str();
}

}  // namespace

ModelConfig ModelConfig::from_config(const Config& cfg) {
  ModelConfig m;
  m.backbone = cfg.get("model", "backbone", m.backbone);
  if (m.backbone != "unet" && m.backbone != "hrnet" &&
      m.backbone != "lowres-baseline") {
    throw data_error("model.backbone must be unet, hrnet or lowres-baseline; "
                     "got '" +
                     m.backbone + "'");
  }
  m.unet_base_channels = static_cast<size_t>(
      cfg.get_int("model", "unet_base_channels",
                  static_cast<long long>(m.unet_base_channels)));
  m.hrnet_widths = parse_widths(cfg.get("model", "hrnet_widths", ""),
                                m.hrnet_widths, "model.hrnet_widths");
  m.hrnet_blocks = static_cast<size_t>(cfg.get_int(
      "model", "hrnet_blocks", static_cast<long long>(m.hrnet_blocks)));
  m.lowres_channels = parse_widths(cfg.get("model", "lowres_channels", ""),
                                   m.lowres_channels, "model.lowres_channels");
  m.hidden = static_cast<size_t>(
      cfg.get_int("model", "hidden", static_cast<long long>(m.hidden)));
  m.dropout_passes = static_cast<size_t>(cfg.get_int(
      "model", "dropout_passes", static_cast<long long>(m.dropout_passes)));
  m.dropout_fraction =
      cfg.get_num("model", "dropout_fraction", m.dropout_fraction);
  m.height = static_cast<size_t>(
      cfg.get_int("model", "height", static_cast<long long>(m.height)));
  if (m.height % 16 != 0)
    throw data_error("model.height must be a multiple of 16");
  return m;
}

void ModelConfig::to_config(Config& cfg) const {
  cfg.set("model", "backbone", backbone);
  cfg.set("model", "unet_base_channels", std::to_string(unet_base_channels));
  cfg.set("model", "hrnet_widths", widths_csv(hrnet_widths));
  cfg.set("model", "hrnet_blocks", std::to_string(hrnet_blocks));
  cfg.set("model", "lowres_channels", widths_csv(lowres_channels));
  cfg.set("model", "hidden", std::to_string(hidden));
  cfg.set("model", "dropout_passes", std::to_string(dropout_passes));
  cfg.set("model", "dropout_fraction", std::to_string(dropout_fraction));
  cfg.set("model", "height", std::to_string(height));
}

template <class T>
std::unique_ptr<Backbone<T>> make_backbone(const ModelConfig& cfg, Rng& rng) {
  if (cfg.backbone == "unet") {
    UNetConfig c;
    c.base_channels = cfg.unet_base_channels;
    return std::make_unique<UNetBackbone<T>>(c, rng);
  }
  if (cfg.backbone == "hrnet") {
    HRNetConfig c;
    c.widths = cfg.hrnet_widths;
    c.blocks_per_stream = cfg.hrnet_blocks;
    return std::make_unique<HRNetBackbone<T>>(c, rng);
  }
  if (cfg.backbone == "lowres-baseline") {
    LowresConfig c;
    c.channels = cfg.lowres_channels;
    return std::make_unique<LowresBackbone<T>>(c, rng);
  }
  throw data_error("unknown backbone '" + cfg.backbone + "'");
}

template <class T>
Recognizer<T>::Recognizer(const ModelConfig& cfg, size_t charset_size,
                          uint64_t init_seed)
    : cfg_(cfg), charset_size_(charset_size) {
  if (charset_size == 0) throw contract_error("recognizer: empty charset");
  Rng rng(init_seed);
  backbone = make_backbone<T>(cfg, rng);
  SeqHeadConfig hc;
  hc.hidden = cfg.hidden;
  hc.dropout_passes = cfg.dropout_passes;
  hc.dropout_fraction = cfg.dropout_fraction;
  head = SeqHead<T>(backbone->out_channels(), hc, charset_size, rng);
  backbone->register_into(params_, "backbone");
  head.register_into(params_, "head");
}

template <class T>
Sequence<T> Recognizer<T>::forward(const Tensor<T>& images, bool training,
                                   Rng& rng) {
  return head.forward(backbone->forward(images, training), training, rng);
}

// ---- checkpoint io -------------------------------------------------------------

namespace {

template <class V>
void put_pod(std::ostream& os, V v) {
  static_assert(std::is_trivially_copyable_v<V>);
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V get_pod(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw data_error("checkpoint truncated");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put_pod<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const uint32_t len = get_pod<uint32_t>(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw data_error("checkpoint truncated");
  return s;
}

void read_header(std::istream& in, CheckpointHeader& hdr) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw data_error("not a checkpoint file (bad magic)");
  const uint32_t version = get_pod<uint32_t>(in);
  if (version != kCheckpointVersion)
    throw data_error("unsupported checkpoint version " +
                     std::to_string(version));
  hdr.dtype = get_pod<uint8_t>(in);
  if (hdr.dtype != 4 && hdr.dtype != 8)
    throw data_error("checkpoint has unknown element size");
  const uint32_t n_chars = get_pod<uint32_t>(in);
  std::vector<uint32_t> chars(n_chars);
  for (auto& c : chars) c = get_pod<uint32_t>(in);
  hdr.charset = CharSet::from_chars(std::move(chars));
  const uint32_t blank = get_pod<uint32_t>(in);
  if (blank != n_chars)
    throw data_error("checkpoint blank index does not match its charset");
  hdr.model = ModelConfig::from_config(Config::parse(get_string(in)));
}

}  // namespace

template <class T>
void save_checkpoint(const std::string& path, Recognizer<T>& model,
                     const CharSet& charset) {
  if (charset.size() != model.charset_size())
    throw contract_error("save_checkpoint: charset size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 4);
  put_pod<uint32_t>(out, kCheckpointVersion);
  put_pod<uint8_t>(out, static_cast<uint8_t>(sizeof(T)));
  put_pod<uint32_t>(out, static_cast<uint32_t>(charset.size()));
  for (uint32_t c : charset.chars) put_pod<uint32_t>(out, c);
  put_pod<uint32_t>(out, static_cast<uint32_t>(charset.blank_index()));
  Config echo;
  model.config().to_config(echo);
  put_string(out, echo.serialize());

  ParamSet<T>& ps = model.params();
  put_pod<uint64_t>(out, static_cast<uint64_t>(ps.params.size()));
  for (auto& [name, t] : ps.params) {
    put_string(out, name);
    put_pod<uint8_t>(out, static_cast<uint8_t>(t.ndim()));
    for (size_t d = 0; d < t.ndim(); ++d)
      put_pod<uint64_t>(out, static_cast<uint64_t>(t.dim(d)));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(T)));
  }
  put_pod<uint64_t>(out, static_cast<uint64_t>(ps.buffers.size()));
  for (auto& [name, buf] : ps.buffers) {
    put_string(out, name);
    put_pod<uint64_t>(out, static_cast<uint64_t>(buf->size()));
    out.write(reinterpret_cast<const char*>(buf->data()),
              static_cast<std::streamsize>(buf->size() * sizeof(T)));
  }
  if (!out) throw io_error("checkpoint write failed: " + path);
}

CheckpointHeader peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open checkpoint: " + path);
  CheckpointHeader hdr;
  read_header(in, hdr);
  return hdr;
}

template <class T>
std::unique_ptr<Recognizer<T>> load_checkpoint(const std::string& path,
                                               CharSet* charset_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open checkpoint: " + path);
  CheckpointHeader hdr;
  read_header(in, hdr);
  if (hdr.dtype != sizeof(T))
    throw data_error("checkpoint element size " + std::to_string(hdr.dtype) +
                     " does not match this precision mode");
  auto model =
      std::make_unique<Recognizer<T>>(hdr.model, hdr.charset.size(), 0);
  ParamSet<T>& ps = model->params();

  const uint64_t n_params = get_pod<uint64_t>(in);
  if (n_params != ps.params.size())
    throw data_error("checkpoint parameter table size mismatch");
  for (auto& [name, t] : ps.params) {
    const std::string got = get_string(in);
    if (got != name)
      throw data_error("checkpoint parameter order mismatch: expected '" +
                       name + "', found '" + got + "'");
    const uint8_t ndim = get_pod<uint8_t>(in);
    if (ndim != t.ndim())
      throw data_error("checkpoint shape mismatch for " + name);
    for (size_t d = 0; d < t.ndim(); ++d) {
      if (get_pod<uint64_t>(in) != t.dim(d))
        throw data_error("checkpoint shape mismatch for " + name);
    }
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(T)));
    if (!in) throw data_error("checkpoint truncated in " + name);
  }
  const uint64_t n_buffers = get_pod<uint64_t>(in);
  if (n_buffers != ps.buffers.size())
    throw data_error("checkpoint buffer table size mismatch");
  for (auto& [name, buf] : ps.buffers) {
    const std::string got = get_string(in);
    if (got != name)
      throw data_error("checkpoint buffer order mismatch: expected '" + name +
                       "', found '" + got + "'");
    const uint64_t len = get_pod<uint64_t>(in);
    if (len != buf->size())
      throw data_error("checkpoint buffer size mismatch for " + name);
    in.read(reinterpret_cast<char*>(buf->data()),
            static_cast<std::streamsize>(buf->size() * sizeof(T)));
    if (!in) throw data_error("checkpoint truncated in " + name);
  }
  if (charset_out) *charset_out = hdr.charset;
  return model;
}

template class Recognizer<float>;
template class Recognizer<double>;
template std::unique_ptr<Backbone<float>> make_backbone(const ModelConfig&,
                                                        Rng&);
template std::unique_ptr<Backbone<double>> make_backbone(const ModelConfig&,
                                                         Rng&);
template void save_checkpoint(const std::string&, Recognizer<float>&,
                              const CharSet&);
template void save_checkpoint(const std::string&, Recognizer<double>&,
                              const CharSet&);
template std::unique_ptr<Recognizer<float>> load_checkpoint(
    const std::string&, CharSet*);
template std::unique_ptr<Recognizer<double>> load_checkpoint(
    const std::string&, CharSet*);

}  // namespace nuqta
