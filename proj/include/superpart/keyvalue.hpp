#pragma once

#include "superpart/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace superpart {

// Plain-text configuration:
//
//   # comment
//   [section]
//   key = value
//
// Sections may repeat (e.g. one [plane] per primitive). Keys before the first
// section header belong to an unnamed section "".
struct KeyValueSection {
  std::string name;
  std::size_t line = 0;
  std::vector<std::pair<std::string, std::string>> entries;

  std::optional<std::string> find(const std::string& key) const;
  bool has(const std::string& key) const { return find(key).has_value(); }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  Vec3 get_vec3(const std::string& key) const;
};

struct KeyValueDocument {
  std::vector<KeyValueSection> sections;

  // First section with this name, or nullptr.
  const KeyValueSection* section(const std::string& name) const;
};

KeyValueDocument parse_key_value(const std::string& text);
KeyValueDocument read_key_value_file(const std::filesystem::path& path);

// Numeric list parsing shared with the CLI: "5,30,90" or "5 30 90".
std::vector<double> parse_number_list(const std::string& text);

}  // namespace superpart
