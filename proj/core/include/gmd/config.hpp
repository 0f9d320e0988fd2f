#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gmd {

// Flat `key = value` text with dotted section keys (problem.kind, mirror.beta,
// ...). `#` starts a comment; blank lines are ignored. Keys are unique.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  // "1,2,3" -> {1,2,3}
  std::vector<double> get_list(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace gmd
