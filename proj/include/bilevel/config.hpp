#pragma once

// Flat "key = value" plain-text configuration: the run-manifest format and
// the file half of the flags-override-file resolution.

#include <cstdint>
#include <string>
#include <vector>

namespace bilevel::io {

class Config {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;  // source line; 0 when set programmatically
  };

  // Blank lines and '#' comment lines are skipped; every other line must be
  // "key = value" with key matching [A-Za-z0-9_-]+.  Malformed lines raise
  // ConfigError naming the source and line.
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& source);

  // Overrides in place when the key exists, appends otherwise.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // ConfigError when absent
  const std::vector<Entry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

  std::string render() const;  // "key = value\n" per entry, insertion order
  std::uint64_t hash() const;  // FNV-1a 64 over render()
  std::string hash_hex() const;

 private:
  std::vector<Entry> entries_;
  std::string source_ = "<config>";
};

// Strict numeric parsing (the full token must be consumed); ConfigError
// mentioning `what` otherwise.
double parse_double(const std::string& text, const std::string& what);
int parse_int(const std::string& text, const std::string& what);

std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t v);

}  // namespace bilevel::io
