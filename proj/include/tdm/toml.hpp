#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tdm/common.hpp"

namespace tdm {

// Minimal TOML subset: comments, [table] headers, dotted keys, strings,
// integers, floats, booleans and flat arrays. Parsed into a flat map keyed by
// full dotted path. Configs are the experimental record, so consumers track
// every key they read and reject the rest.
struct TomlValue {
  enum class Kind { String, Integer, Float, Boolean, Array } kind = Kind::String;
  std::string str;
  std::int64_t integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;

  double as_number() const {
    if (kind == Kind::Integer) return static_cast<double>(integer);
    if (kind == Kind::Float) return real;
    throw TdmError("config value is not a number");
  }
};

class TomlDocument {
 public:
  static TomlDocument parse(const std::string& text);
  static TomlValue parse_value(const std::string& text);

  void set(const std::string& dotted_path, TomlValue v) { values_[dotted_path] = std::move(v); }
  bool contains(const std::string& path) const { return values_.count(path) > 0; }

  const TomlValue& at(const std::string& path) const;

  std::string get_string(const std::string& path, const std::string& fallback) const;
  std::int64_t get_int(const std::string& path, std::int64_t fallback) const;
  double get_double(const std::string& path, double fallback) const;
  bool get_bool(const std::string& path, bool fallback) const;
  std::vector<std::int64_t> get_int_array(const std::string& path,
                                          std::vector<std::int64_t> fallback) const;
  std::vector<std::string> get_string_array(const std::string& path,
                                            std::vector<std::string> fallback) const;

  // Every get_* marks its path as consumed; afterwards this returns any key
  // that was never consumed (the strict-rejection check).
  std::vector<std::string> unconsumed() const;
  const std::map<std::string, TomlValue>& values() const { return values_; }

 private:
  std::map<std::string, TomlValue> values_;
  mutable std::map<std::string, bool> consumed_;
};

}  // namespace tdm
