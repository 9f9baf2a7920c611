#include "bilevel/config.hpp"

#include "bilevel/types.hpp"

#include <cctype>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bilevel::io {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0;
  size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_text(text.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    std::ostringstream msg;
    if (eq == std::string::npos) {
      msg << source << ":" << lineno << ": expected 'key = value', got '" << t << "'";
      throw ConfigError(msg.str());
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!valid_key(key)) {
      msg << source << ":" << lineno << ": malformed key '" << key << "'";
      throw ConfigError(msg.str());
    }
    cfg.set(key, value);
    cfg.entries_.back().line = lineno;
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  for (Entry& e : entries_)
    if (e.key == key) {
      e.value = value;
      e.line = 0;
      return;
    }
  entries_.push_back({key, value, 0});
}

bool Config::has(const std::string& key) const {
  for (const Entry& e : entries_)
    if (e.key == key) return true;
  return false;
}

const std::string& Config::get(const std::string& key) const {
  for (const Entry& e : entries_)
    if (e.key == key) return e.value;
  throw ConfigError("config: missing key '" + key + "' in " + source_);
}

std::string Config::render() const {
  std::ostringstream out;
  for (const Entry& e : entries_) out << e.key << " = " << e.value << "\n";
  return out.str();
}

std::uint64_t Config::hash() const { return fnv1a64(render()); }

std::string Config::hash_hex() const { return hex64(hash()); }

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (!t.empty()) {
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() + t.size()) return v;
  }
  throw ConfigError(what + ": '" + text + "' is not a number");
}

int parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (!t.empty()) {
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end == t.c_str() + t.size() && v >= INT_MIN && v <= INT_MAX)
      return static_cast<int>(v);
  }
  throw ConfigError(what + ": '" + text + "' is not an integer");
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace bilevel::io
