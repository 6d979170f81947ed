#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace routerlab {

// Plain-text experiment configuration:
//
//   # comment
//   [section]            sections may nest with dots, e.g. [router.dnn]
//   key = value          lists are comma-separated
//
// Every section and key is checked against a fixed schema before any work
// starts; unknown names and malformed values raise ConfigError.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  double get_real(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& section, const std::string& key,
                                         std::vector<std::int64_t> fallback) const;
  std::vector<double> get_real_list(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const;
  std::vector<std::string> get_string_list(const std::string& section, const std::string& key,
                                           std::vector<std::string> fallback) const;

  // Throws ConfigError when `key` is absent.
  std::string require_string(const std::string& section, const std::string& key) const;

  const std::string& text() const { return text_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry* find(const std::string& section, const std::string& key) const;

  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::string text_;
};

}  // namespace routerlab
