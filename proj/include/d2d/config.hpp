#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace d2d {

// Raised for malformed or missing configuration; field is the "section.key"
// the message refers to.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field_, const std::string& message)
      : std::runtime_error("config error: field '" + field_ + "': " + message),
        field(std::move(field_)) {}
  std::string field;
};

// Flat key/value configuration with INI-style [section] headers. Keys are
// addressed as "section.key". Values win in the order: defaults < file <
// --set overrides.
class Config {
 public:
  Config() = default;

  void load_file(const std::string& path);
  void set(const std::string& dotted_key, const std::string& value);
  // parses "section.key=value"
  void set_pair(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_long(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  // *_required variants throw ConfigError naming the key when absent
  double require_double(const std::string& key) const;
  std::uint64_t require_u64(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace d2d
