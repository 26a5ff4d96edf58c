#include "geann/util/config.hpp"

#include <fstream>
#include <sstream>

#include "geann/util/text.hpp"

namespace geann::util {

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    cfg.entries_[std::string(key)] = std::string(trim(body.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::size_t v = 0;
  if (!parse_size(it->second, v)) throw ConfigError(key + ": expected a non-negative integer");
  return v;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return get_size(key, fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  double v = 0.0;
  if (!parse_double(it->second, v)) throw ConfigError(key + ": expected a number");
  return v;
}

std::vector<std::size_t> KeyValueConfig::get_size_list(
    const std::string& key, const std::vector<std::size_t>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<std::size_t> out;
  for (auto part : split(it->second, ',')) {
    std::size_t v = 0;
    if (!parse_size(trim(part), v)) throw ConfigError(key + ": expected a list of integers");
    out.push_back(v);
  }
  return out;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key,
                                                    const std::vector<double>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> out;
  for (auto part : split(it->second, ',')) {
    double v = 0.0;
    if (!parse_double(trim(part), v)) throw ConfigError(key + ": expected a list of numbers");
    out.push_back(v);
  }
  return out;
}

void KeyValueConfig::require_known(const std::set<std::string>& allowed) const {
  std::string unknown;
  for (const auto& [key, _] : entries_) {
    if (!allowed.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError("unknown config key(s): " + unknown);
}

}  // namespace geann::util
