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
// Dataset directory ingestion. The layout matches what generate_dataset
// writes and doubles as the format for externally produced data:
//
//   images/{index:06}.png   8-bit grayscale PNG line images
//   labels.tsv              <relative path> TAB <transcript>, UTF-8
//   charset.txt             one character per line; order defines classes
//   meta.txt                config echo (informational)

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nuqta/common.hpp"
#include "nuqta/image.hpp"

namespace nuqta {

struct CharSet {
  std::vector<uint32_t> chars;        // ordered, unique
  std::map<uint32_t, int> index_of;   // char -> class index

  size_t size() const { return chars.size(); }
  int blank_index() const { return static_cast<int>(chars.size()); }
  bool operator==(const CharSet& o) const { return chars == o.chars; }

  static CharSet from_chars(std::vector<uint32_t> ordered);
  static CharSet load(const std::string& path);  // charset.txt

  // Throws data_error naming the character when it is absent.
  std::vector<int> encode(const std::vector<uint32_t>& text) const;
  std::vector<uint32_t> decode(const std::vector<int>& labels) const;
};

struct Sample {
  std::string rel_path;
  Image image;
  std::vector<uint32_t> transcript;
  std::vector<int> labels;  // charset indices
};

struct Dataset {
  std::string dir;
  CharSet charset;
  std::vector<Sample> samples;
};

// Validates every manifest row; errors name the offending row and character
// or file. Requires labels.tsv and charset.txt; images must decode with
// H >= 8 and W >= 8.
Dataset load_dataset(const std::string& dir);

}  // namespace nuqta
