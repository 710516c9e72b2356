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
// Flat key-value configuration with [section] headers:
//
//   [train]
//   batch_size = 32
//   # comment
//
// Command-line flags override file values, and the effective config is
// echoed into every output directory as an audit trail.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nuqta/common.hpp"

namespace nuqta {

class Config {
 public:
  static Config parse(const std::string& text);
  static Config parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = "") const;
  double get_num(const std::string& section, const std::string& key,
                 double fallback) const;
  long long get_int(const std::string& section, const std::string& key,
                    long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);
  // "section.key=value"
  void apply_override(const std::string& assignment);

  // Round-trippable text form, insertion-ordered.
  std::string serialize() const;

 private:
  using Section = std::vector<std::pair<std::string, std::string>>;
  std::vector<std::pair<std::string, Section>> sections_;

  const std::string* find(const std::string& section,
                          const std::string& key) const;
};

}  // namespace nuqta
