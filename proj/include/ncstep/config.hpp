#pragma once

// Flat key/value experiment configs with dotted section paths, e.g.
//
//   problem.name = rosenbrock2
//   oracle.eps_f = 1e-3
//   solver.tau = 0.5
//   seeds = 1, 2, 3
//   sweep.oracle.eps_f = 0, 1e-8, 1e-5, 1e-3, 1e-2
//
// '#' starts a comment. The resolved form is re-serialized next to each run
// as its provenance snapshot.

#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncstep {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class FlatConfig {
 public:
  static FlatConfig parse(std::istream& is, const std::string& origin = "<config>") {
    FlatConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static FlatConfig parse_string(const std::string& text,
                                 const std::string& origin = "<config>") {
    std::istringstream is(text);
    return parse(is, origin);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return to_double(key, it->second);
  }

  long get_long(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return to_long(key, it->second);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const std::string& piece : split_list(it->second))
      out.push_back(to_double(key, piece));
    return out;
  }

  std::vector<std::uint64_t> get_seed_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const std::string& piece : split_list(it->second)) {
      try {
        out.push_back(static_cast<std::uint64_t>(std::stoull(piece)));
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': bad seed '" + piece + "'");
      }
    }
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return {};
    return split_list(it->second);
  }

  /// Keys of the form `sweep.<path>`; each holds a value list for <path>.
  std::vector<std::string> sweep_keys() const {
    std::vector<std::string> keys;
    for (const auto& [k, v] : values_)
      if (k.rfind("sweep.", 0) == 0) keys.push_back(k);
    return keys;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string serialize() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
  }

  static std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string piece;
    std::istringstream is(value);
    while (std::getline(is, piece, ',')) {
      const std::string t = trim(piece);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  static double to_double(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
    }
  }

  static long to_long(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      const long l = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return l;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace ncstep
