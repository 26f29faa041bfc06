#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wrgsim/kernel.hpp"

namespace wrgsim {

// Flat "key = value" experiment description. Keys are dotted; a "[section]" line prefixes
// the keys below it. '#' starts a comment.
struct Config {
  std::map<std::string, std::string> values;  // canonical values

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;
  // Every "prefix.name" key with name outside `reserved`, parsed as numbers.
  Params params(const std::string& prefix, const std::vector<std::string>& reserved) const;
  void set(const std::string& key, const std::string& value);
};

// Throws ConfigError naming the line or key.
Config parse_config(std::string_view text);
Config load_config(const std::string& path);
// Rejects keys outside the schema.
void validate_schema(const Config& c);

// Sorted "key = value" lines; parse_config(normalized(c)) normalizes to the same text.
std::string normalized(const Config& c);
std::string config_hash(const Config& c);

// Canonical spelling of a value: numbers in shortest round-trip form, list items joined by
// ",", everything else trimmed.
std::string canonical_value(std::string_view raw);

}  // namespace wrgsim
