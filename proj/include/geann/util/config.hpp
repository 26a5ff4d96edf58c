#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace geann::util {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat `key=value` configuration; `#` starts a comment line. Lists are
/// comma-separated.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load_file(const std::string& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<std::size_t> get_size_list(const std::string& key,
                                         const std::vector<std::size_t>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  /// Throws ConfigError naming every key outside `allowed`.
  void require_known(const std::set<std::string>& allowed) const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace geann::util
