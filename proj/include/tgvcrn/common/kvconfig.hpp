#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tgvcrn {

// Flat sectioned key=value text:
//
//   # comment
//   [sim]
//   K = 20
//
// Keys are addressed as "section.key". Consumers pull values through the typed
// getters and finish with reject_unused(), which fails on any key nobody read.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  void set(const std::string& key, std::string value);
  void reject_unused() const;

  // Canonical text: sections and keys sorted.
  std::string to_text() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace tgvcrn
