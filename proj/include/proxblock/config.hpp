#pragma once

#include "proxblock/io_util.hpp"
#include "proxblock/types.hpp"

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace proxblock {

/// Ordered key=value configuration, read from files or --set overrides.
/// Lines starting with '#' are comments. Later assignments win, so a
/// manifest written by one run can be replayed as the config of the next.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text, const std::string& origin = "<config>") {
    KvConfig cfg;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
      std::size_t eol = text.find('\n', pos);
      std::string_view line(text.data() + pos,
                            (eol == std::string::npos ? text.size() : eol) - pos);
      pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      std::string_view t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      std::size_t eq = t.find('=');
      if (eq == std::string_view::npos)
        throw InputError(origin + ":" + std::to_string(line_no) +
                         ": expected key=value, got '" + std::string(t) + "'");
      std::string key(trim(t.substr(0, eq)));
      std::string value(trim(t.substr(eq + 1)));
      if (key.empty())
        throw InputError(origin + ":" + std::to_string(line_no) + ": empty key");
      cfg.set(key, value);
    }
    return cfg;
  }

  static KvConfig load_file(const std::string& path) { return parse(read_file(path), path); }

  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_)
      if (k == key) {
        v = value;
        return;
      }
    entries_.emplace_back(key, value);
  }

  /// Apply one "key=value" override as passed on the command line.
  void apply_override(const std::string& keyval) {
    std::size_t eq = keyval.find('=');
    if (eq == std::string::npos)
      throw InputError("override '" + keyval + "' is not of the form key=value");
    std::string key(trim(std::string_view(keyval).substr(0, eq)));
    if (key.empty()) throw InputError("override '" + keyval + "' has an empty key");
    set(key, std::string(trim(std::string_view(keyval).substr(eq + 1))));
  }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  std::string get_string(const std::string& key) const {
    const std::string* v = find(key);
    if (v == nullptr) throw InputError("missing config key '" + key + "'");
    return *v;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v == nullptr ? fallback : *v;
  }

  double get_double(const std::string& key) const { return to_double(key, get_string(key)); }

  double get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    return v == nullptr ? fallback : to_double(key, *v);
  }

  Index get_index(const std::string& key) const { return to_index(key, get_string(key)); }

  Index get_index(const std::string& key, Index fallback) const {
    const std::string* v = find(key);
    return v == nullptr ? fallback : to_index(key, *v);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const std::string* v = find(key);
    if (v == nullptr) return fallback;
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size())
      throw InputError("config key '" + key + "': invalid unsigned integer '" + *v + "'");
    return out;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (v == nullptr) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw InputError("config key '" + key + "': invalid boolean '" + *v + "'");
  }

  /// Comma-separated list of indices; absent or empty means an empty list.
  std::vector<Index> get_index_list(const std::string& key) const {
    std::vector<Index> out;
    const std::string* v = find(key);
    if (v == nullptr) return out;
    std::string_view rest(*v);
    while (!rest.empty()) {
      std::size_t comma = rest.find(',');
      std::string_view token = trim(rest.substr(0, comma));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      if (token.empty() && out.empty() && rest.empty()) break;  // wholly empty value
      out.push_back(to_index(key, std::string(token)));
    }
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  /// Reject keys outside the given sets. Keys under "result." and the
  /// "command" key are always tolerated so manifests replay cleanly.
  void check_known(const std::vector<std::string>& exact,
                   const std::vector<std::string>& prefixes = {}) const {
    for (const auto& [k, v] : entries_) {
      if (k == "command" || k.rfind("result.", 0) == 0) continue;
      bool ok = false;
      for (const std::string& e : exact)
        if (k == e) {
          ok = true;
          break;
        }
      for (const std::string& p : prefixes)
        if (!ok && k.rfind(p, 0) == 0) ok = true;
      if (!ok) throw InputError("unknown config key '" + k + "'");
    }
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  }

  static double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
      throw InputError("config key '" + key + "': invalid number '" + v + "'");
    return out;
  }

  static Index to_index(const std::string& key, const std::string& v) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
      throw InputError("config key '" + key + "': invalid integer '" + v + "'");
    return static_cast<Index>(out);
  }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return &v;
    return nullptr;
  }

  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace proxblock
