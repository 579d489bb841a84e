/* Copyright 2026 The rsdebias Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef RSDEBIAS_KEYED_DOC_HPP_
#define RSDEBIAS_KEYED_DOC_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rsdebias/util.hpp"

namespace rsdebias {

// Plain keyed text document: one "key = value" per line, '#' comments,
// blank lines ignored. Order is preserved; duplicate keys are rejected.
// Used for the prompt template table and for config files.
class KeyedDoc {
 public:
  KeyedDoc() = default;

  static KeyedDoc parse(std::string_view text) {
    KeyedDoc doc;
    std::size_t line_no = 0;
    for (const std::string& raw : split(text, '\n')) {
      ++line_no;
      std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": expected 'key = value', got '" + line + "'");
      }
      doc.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return doc;
  }

  static KeyedDoc load(const std::filesystem::path& path) {
    try {
      return parse(read_text_file(path));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ": " + e.what());
    }
  }

  void set(std::string key, std::string value) {
    if (key.empty()) throw std::runtime_error("empty key");
    auto it = index_.find(key);
    if (it != index_.end()) {
      throw std::runtime_error("duplicate key '" + key + "'");
    }
    index_.emplace(key, entries_.size());
    entries_.emplace_back(std::move(key), std::move(value));
  }

  void overwrite(const std::string& key, std::string value) {
    auto it = index_.find(key);
    if (it == index_.end()) {
      set(key, std::move(value));
    } else {
      entries_[it->second].second = std::move(value);
    }
  }

  bool has(const std::string& key) const { return index_.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) {
      throw std::runtime_error("missing key '" + key + "'");
    }
    return entries_[it->second].second;
  }

  std::string get_or(const std::string& key, std::string fallback) const {
    auto it = index_.find(key);
    return it == index_.end() ? fallback : entries_[it->second].second;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace rsdebias

#endif  // RSDEBIAS_KEYED_DOC_HPP_
