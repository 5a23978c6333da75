#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace mosanet::config {

/// Scalar or flat array value of the TOML subset we read.
struct Value {
  using Scalar = std::variant<bool, double, std::string>;
  std::variant<bool, double, std::string, std::vector<Scalar>> data;

  std::string to_toml() const;
};

/// Sectioned key/value tree; keys are addressed as "section.key".
///
/// Supported syntax: `# comments`, `[section]` headers, `key = value` with
/// double-quoted strings, numbers, true/false and single-line arrays of those.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<string>");
  static Config load(const std::filesystem::path& path);

  /// "section.key=value"; the value uses TOML syntax, bare words are strings.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, Value v) { values_[key] = std::move(v); }
  void merge(const Config& other);

  bool contains(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_string_list(const std::string& key, const std::vector<std::string>& fallback) const;
  std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;
  std::optional<std::string> find_string(const std::string& key) const;

  /// Throws UsageError naming the first key not in `declared`.
  void check_known(const std::set<std::string>& declared) const;
  /// Keys under "section.".
  Config section(const std::string& name) const;

  /// Canonical dump: sections in lexical order, keys sorted.
  std::string to_toml() const;
  const std::map<std::string, Value>& values() const { return values_; }

 private:
  std::map<std::string, Value> values_;
};

}  // namespace mosanet::config
