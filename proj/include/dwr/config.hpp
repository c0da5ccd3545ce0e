#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace dwr {

/// Sectioned key-value configuration.
/// Grammar: `[section]` headers, `key = value` lines, `#` comments, blank
/// lines ignored. Values are whitespace-separated tokens.
class Config {
public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::vector<std::string> keys(const std::string& section) const;

  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int_or(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
  Eigen::Vector2d get_vec2(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

} // namespace dwr
