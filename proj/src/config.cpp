#include "wrgsim/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "wrgsim/errors.hpp"
#include "wrgsim/format.hpp"

namespace wrgsim {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno == 0 && std::isfinite(out);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

const std::set<std::string>& schema_keys() {
  static const std::set<std::string> keys = {
      "command",
      "kernel.name", "kernel.base", "kernel.dilution", "kernel.rho",
      "macro.name", "macro.base",
      "positions.scheme", "positions.law", "positions.dim",
      "model.name",
      "init.law", "init.offset", "init.slope", "init.lo", "init.hi", "init.sd",
      "numerics.T", "numerics.h", "numerics.Q", "numerics.M", "numerics.tol",
      "numerics.max_iter", "numerics.window", "numerics.stride", "numerics.mf_seed",
      "run.n", "run.n_list", "run.seeds", "run.replicas", "run.system",
      "diagnostics.select", "diagnostics.k", "diagnostics.dictionary", "diagnostics.phi",
      "cut.mode", "cut.restarts", "cut.aux", "cut.gauss",
      "concentration.kappa", "concentration.w", "concentration.n", "concentration.trials",
      "concentration.p", "concentration.v",
      "sweep.metric",
      "output.stride"};
  return keys;
}

const std::vector<std::string> kParamPrefixes = {"kernel.", "macro.", "model.", "bounds."};

}  // namespace

std::string canonical_value(std::string_view raw) {
  std::string v = trim(raw);
  if (v.find(',') != std::string::npos) {
    std::string out;
    for (const auto& item : split_list(v)) {
      if (!out.empty()) out += ',';
      out += canonical_value(item);
    }
    return out;
  }
  double d;
  if (parse_double(v, d)) return format_double(d);
  if (v == "True" || v == "TRUE" || v == "yes" || v == "on") return "true";
  if (v == "False" || v == "FALSE" || v == "no" || v == "off") return "false";
  return v;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double Config::number(const std::string& key, double fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  double d;
  if (!parse_double(it->second, d)) throw ConfigError(key, "expected a number, got '" + it->second + "'");
  return d;
}

std::size_t Config::count(const std::string& key, std::size_t fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  double d;
  if (!parse_double(it->second, d) || d < 0 || d != std::floor(d) || d > 1e15)
    throw ConfigError(key, "expected a nonnegative integer, got '" + it->second + "'");
  return static_cast<std::size_t>(d);
}

std::uint64_t Config::seed(const std::string& key, std::uint64_t fallback) const {
  return static_cast<std::uint64_t>(count(key, fallback));
}

bool Config::flag(const std::string& key, bool fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + it->second + "'");
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  auto it = values.find(key);
  if (it == values.end()) return out;
  for (const auto& item : split_list(it->second)) {
    double d;
    if (!parse_double(item, d)) throw ConfigError(key, "expected a number list, got '" + it->second + "'");
    out.push_back(d);
  }
  return out;
}

std::vector<std::size_t> Config::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (double d : numbers(key)) {
    if (d < 0 || d != std::floor(d)) throw ConfigError(key, "expected nonnegative integers");
    out.push_back(static_cast<std::size_t>(d));
  }
  return out;
}

Params Config::params(const std::string& prefix, const std::vector<std::string>& reserved) const {
  Params p;
  const std::string dotted = prefix + ".";
  for (auto it = values.lower_bound(dotted); it != values.end() && it->first.rfind(dotted, 0) == 0; ++it) {
    std::string name = it->first.substr(dotted.size());
    if (std::find(reserved.begin(), reserved.end(), name) != reserved.end()) continue;
    p[name] = number(it->first, 0);
  }
  return p;
}

void Config::set(const std::string& key, const std::string& value) { values[key] = canonical_value(value); }

Config parse_config(std::string_view text) {
  Config c;
  std::string section;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where, "unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError(where, "empty section name");
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value'");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(where, "missing key");
    if (!section.empty()) key = section + "." + key;
    if (c.has(key)) throw ConfigError(key, "duplicate key (" + where + ")");
    c.values[key] = canonical_value(value);
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_schema(const Config& c) {
  for (const auto& [key, value] : c.values) {
    if (schema_keys().count(key)) continue;
    bool family = false;
    for (const auto& p : kParamPrefixes)
      if (key.rfind(p, 0) == 0 && key.size() > p.size()) family = true;
    if (!family) throw ConfigError(key, "unknown key");
  }
}

std::string normalized(const Config& c) {
  std::string out;
  for (const auto& [key, value] : c.values) out += key + " = " + value + "\n";
  return out;
}

std::string config_hash(const Config& c) { return hex64(fnv1a(normalized(c))); }

}  // namespace wrgsim
