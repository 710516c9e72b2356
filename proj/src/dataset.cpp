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

#include "nuqta/dataset.hpp"

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace nuqta {

CharSet CharSet::from_chars(std::vector<uint32_t> ordered) {
  CharSet cs;
  cs.chars = std::move(ordered);
  for (size_t i = 0; i < cs.chars.size(); ++i) {
    auto [it, inserted] = cs.index_of.try_emplace(
        cs.chars[i], static_cast<int>(i));
    if (!inserted) {
      throw data_error("charset: duplicate character '" +
                       utf8_encode_one(cs.chars[i]) + "'");
    }
  }
  if (cs.chars.empty()) throw data_error("charset: empty");
  return cs;
}

CharSet CharSet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("missing charset file: " + path);
  std::vector<uint32_t> chars;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;  // trailing newline tolerance
    const auto cps = utf8_decode(line);
    if (cps.size() != 1) {
      throw data_error("charset line " + std::to_string(lineno) +
                       ": expected exactly one character, got '" + line + "'");
    }
    chars.push_back(cps[0]);
  }
  return from_chars(std::move(chars));
}

std::vector<int> CharSet::encode(const std::vector<uint32_t>& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (uint32_t ch : text) {
    auto it = index_of.find(ch);
    if (it == index_of.end()) {
      throw data_error("character '" + utf8_encode_one(ch) +
                       "' is not in the charset");
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<uint32_t> CharSet::decode(const std::vector<int>& labels) const {
  std::vector<uint32_t> out;
  out.reserve(labels.size());
  for (int idx : labels) {
    if (idx < 0 || idx >= static_cast<int>(chars.size())) {
      throw contract_error("charset decode: index " + std::to_string(idx) +
                           " out of range");
    }
    out.push_back(chars[static_cast<size_t>(idx)]);
  }
  return out;
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::exists(root / "labels.tsv"))
    throw data_error("missing labels.tsv under " + dir);
  Dataset ds;
  ds.dir = dir;
  ds.charset = CharSet::load((root / "charset.txt").string());

  std::ifstream manifest(root / "labels.tsv", std::ios::binary);
  std::string line;
  size_t lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw data_error("labels.tsv row " + std::to_string(lineno) +
                       ": expected <path>\\t<transcript>");
    }
    Sample s;
    s.rel_path = line.substr(0, tab);
    const std::string text = line.substr(tab + 1);
    s.transcript = utf8_decode(text);
    if (s.transcript.empty()) {
      throw data_error("labels.tsv row " + std::to_string(lineno) +
                       ": empty transcript");
    }
    try {
      s.labels = ds.charset.encode(s.transcript);
    } catch (const data_error& e) {
      throw data_error("labels.tsv row " + std::to_string(lineno) + ": " +
                       e.what());
    }
    const fs::path img_path = root / s.rel_path;
    if (!fs::exists(img_path)) {
      throw data_error("labels.tsv row " + std::to_string(lineno) +
                       ": missing image file " + img_path.string());
    }
    s.image = read_png_gray8(img_path.string());
    if (s.image.h < 8 || s.image.w < 8) {
      throw data_error("labels.tsv row " + std::to_string(lineno) +
                       ": image smaller than 8x8 (" + img_path.string() + ")");
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw data_error("dataset is empty: " + dir);
  return ds;
}

}  // namespace nuqta
