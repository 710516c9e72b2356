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

#include "nuqta/config.hpp"

#include <fstream>
#include <sstream>

namespace nuqta {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw data_error("config line " + std::to_string(lineno) +
                         ": unterminated section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) {
        throw data_error("config line " + std::to_string(lineno) +
                         ": empty section name");
      }
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw data_error("config line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw data_error("config line " + std::to_string(lineno) +
                       ": empty key");
    }
    cfg.set(section, key, value);
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string* Config::find(const std::string& section,
                                const std::string& key) const {
  for (const auto& [name, entries] : sections_) {
    if (name != section) continue;
    for (const auto& [k, v] : entries) {
      if (k == key) return &v;
    }
  }
  return nullptr;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

double Config::get_num(const std::string& section, const std::string& key,
                       double fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    double value = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return value;
  } catch (const std::exception&) {
    throw data_error("config value " + section + "." + key + " = '" + *v +
                     "' is not a number");
  }
}

long long Config::get_int(const std::string& section, const std::string& key,
                          long long fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    long long value = std::stoll(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return value;
  } catch (const std::exception&) {
    throw data_error("config value " + section + "." + key + " = '" + *v +
                     "' is not an integer");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "on" || *v == "1") return true;
  if (*v == "false" || *v == "off" || *v == "0") return false;
  throw data_error("config value " + section + "." + key + " = '" + *v +
                   "' is not a boolean");
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  for (auto& [name, entries] : sections_) {
    if (name != section) continue;
    for (auto& [k, v] : entries) {
      if (k == key) {
        v = value;
        return;
      }
    }
    entries.emplace_back(key, value);
    return;
  }
  sections_.push_back({section, {{key, value}}});
}

void Config::apply_override(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  const size_t dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw data_error("override must look like section.key=value, got '" +
                     assignment + "'");
  }
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  const std::string value = trim(assignment.substr(eq + 1));
  if (section.empty() || key.empty()) {
    throw data_error("override must look like section.key=value, got '" +
                     assignment + "'");
  }
  set(section, key, value);
}

std::string Config::serialize() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [name, entries] : sections_) {
    if (!first) os << "\n";
    first = false;
    os << "[" << name << "]\n";
    for (const auto& [k, v] : entries) os << k << " = " << v << "\n";
  }
  return os.str();
}

}  // namespace nuqta
