/* Copyright 2026 the cmgan authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cmgan/common.hpp"

namespace cmgan {

/// Plain-text key=value store; `#` starts a comment, blank lines ignored.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in, const std::string& origin = "<config>") {
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        detail::fail_input(origin, ":", std::to_string(lineno), ": expected key=value, got '",
                           trimmed, "'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        detail::fail_input(origin, ":", std::to_string(lineno), ": empty key");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) detail::fail_input("cannot open config ", path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, std::int64_t v) { values_[key] = std::to_string(v); }
  void set(const std::string& key, double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    values_[key] = ss.str();
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) detail::fail_input("missing config key '", key, "'");
    return it->second;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return to_int(key, it->second);
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return to_double(key, it->second);
  }

  /// Comma-separated triple, e.g. "1.2,1.0,0.8".
  std::array<double, 3> get_triple(const std::string& key,
                                   const std::array<double, 3>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::array<double, 3> out{};
    std::istringstream ss(it->second);
    std::string part;
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(ss, part, ','))
        detail::fail_input("config key '", key, "' needs three comma-separated values, got '",
                           it->second, "'");
      out[static_cast<std::size_t>(i)] = to_double(key, trim(part));
    }
    if (std::getline(ss, part))
      detail::fail_input("config key '", key, "' has more than three values: '", it->second, "'");
    return out;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  void write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) detail::fail_input("cannot write ", path);
    out << serialize();
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::int64_t to_int(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const std::int64_t v = std::stoll(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      detail::fail_input("config key '", key, "' is not an integer: '", s, "'");
    }
  }

  static double to_double(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      detail::fail_input("config key '", key, "' is not a number: '", s, "'");
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace cmgan
