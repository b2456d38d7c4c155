#include "tdm/toml.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace tdm {

namespace {

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Removes a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      return false;
  return true;
}

TomlValue parse_scalar(const std::string& text) {
  TomlValue v;
  const std::string t = strip(text);
  require(!t.empty(), "config: empty value");
  if (t.front() == '"') {
    require(t.size() >= 2 && t.back() == '"', "config: unterminated string: " + t);
    v.kind = TomlValue::Kind::String;
    std::string out;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
      if (t[i] == '\\' && i + 2 < t.size()) {
        ++i;
        switch (t[i]) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: throw TdmError("config: unsupported escape in string: " + t);
        }
      } else {
        out.push_back(t[i]);
      }
    }
    v.str = out;
    return v;
  }
  if (t == "true" || t == "false") {
    v.kind = TomlValue::Kind::Boolean;
    v.boolean = t == "true";
    return v;
  }
  // integer?
  {
    std::int64_t iv = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), iv);
    if (ec == std::errc() && p == t.data() + t.size()) {
      v.kind = TomlValue::Kind::Integer;
      v.integer = iv;
      return v;
    }
  }
  // float
  try {
    std::size_t used = 0;
    const double dv = std::stod(t, &used);
    if (used == t.size()) {
      v.kind = TomlValue::Kind::Float;
      v.real = dv;
      return v;
    }
  } catch (...) {
  }
  throw TdmError("config: cannot parse value '" + t + "'");
}

std::vector<std::string> split_array_items(const std::string& inner) {
  std::vector<std::string> items;
  std::string cur;
  bool in_string = false;
  for (char c : inner) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      items.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!strip(cur).empty()) items.push_back(cur);
  return items;
}

}  // namespace

TomlValue TomlDocument::parse_value(const std::string& text) {
  const std::string t = strip(text);
  if (!t.empty() && t.front() == '[') {
    require(t.back() == ']', "config: unterminated array: " + t);
    TomlValue v;
    v.kind = TomlValue::Kind::Array;
    for (const auto& item : split_array_items(t.substr(1, t.size() - 2)))
      v.array.push_back(parse_scalar(item));
    return v;
  }
  return parse_scalar(t);
}

TomlDocument TomlDocument::parse(const std::string& text) {
  TomlDocument doc;
  std::istringstream in(text);
  std::string raw;
  std::string prefix;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() >= 3,
              "config line " + std::to_string(line_no) + ": malformed table header");
      prefix = strip(line.substr(1, line.size() - 2));
      require(valid_key(prefix),
              "config line " + std::to_string(line_no) + ": bad table name '" + prefix + "'");
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    require(valid_key(key),
            "config line " + std::to_string(line_no) + ": bad key '" + key + "'");
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    require(doc.values_.count(path) == 0,
            "config line " + std::to_string(line_no) + ": duplicate key '" + path + "'");
    try {
      doc.values_[path] = parse_value(line.substr(eq + 1));
    } catch (const TdmError& e) {
      throw TdmError("config line " + std::to_string(line_no) + " ('" + path +
                     "'): " + e.what());
    }
  }
  return doc;
}

const TomlValue& TomlDocument::at(const std::string& path) const {
  auto it = values_.find(path);
  require(it != values_.end(), "config: missing required key '" + path + "'");
  consumed_[path] = true;
  return it->second;
}

std::string TomlDocument::get_string(const std::string& path, const std::string& fallback) const {
  if (!contains(path)) return fallback;
  const TomlValue& v = at(path);
  require(v.kind == TomlValue::Kind::String, "config: '" + path + "' must be a string");
  return v.str;
}

std::int64_t TomlDocument::get_int(const std::string& path, std::int64_t fallback) const {
  if (!contains(path)) return fallback;
  const TomlValue& v = at(path);
  require(v.kind == TomlValue::Kind::Integer, "config: '" + path + "' must be an integer");
  return v.integer;
}

double TomlDocument::get_double(const std::string& path, double fallback) const {
  if (!contains(path)) return fallback;
  const TomlValue& v = at(path);
  require(v.kind == TomlValue::Kind::Integer || v.kind == TomlValue::Kind::Float,
          "config: '" + path + "' must be a number");
  return v.as_number();
}

bool TomlDocument::get_bool(const std::string& path, bool fallback) const {
  if (!contains(path)) return fallback;
  const TomlValue& v = at(path);
  require(v.kind == TomlValue::Kind::Boolean, "config: '" + path + "' must be a boolean");
  return v.boolean;
}

std::vector<std::int64_t> TomlDocument::get_int_array(
    const std::string& path, std::vector<std::int64_t> fallback) const {
  if (!contains(path)) return fallback;
  const TomlValue& v = at(path);
  require(v.kind == TomlValue::Kind::Array, "config: '" + path + "' must be an array");
  std::vector<std::int64_t> out;
  for (const auto& item : v.array) {
    require(item.kind == TomlValue::Kind::Integer,
            "config: '" + path + "' must contain integers");
    out.push_back(item.integer);
  }
  return out;
}

std::vector<std::string> TomlDocument::get_string_array(
    const std::string& path, std::vector<std::string> fallback) const {
  if (!contains(path)) return fallback;
  const TomlValue& v = at(path);
  require(v.kind == TomlValue::Kind::Array, "config: '" + path + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v.array) {
    require(item.kind == TomlValue::Kind::String,
            "config: '" + path + "' must contain strings");
    out.push_back(item.str);
  }
  return out;
}

std::vector<std::string> TomlDocument::unconsumed() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!consumed_.count(k)) out.push_back(k);
  return out;
}

}  // namespace tdm
