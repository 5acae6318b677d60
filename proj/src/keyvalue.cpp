#include "superpart/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace superpart {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
    throw InvalidInputError("expected a number for " + context + ", got '" + text + "'");
  }
  return v;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::string normalized = text;
  for (char& c : normalized) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(normalized);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(tok, "list element"));
  return out;
}

std::optional<std::string> KeyValueSection::find(const std::string& key) const {
  // Last assignment wins.
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  return std::nullopt;
}

std::string KeyValueSection::get_string(const std::string& key) const {
  auto v = find(key);
  if (!v) {
    throw InvalidInputError("section [" + name + "] (line " + std::to_string(line) +
                            ") is missing key '" + key + "'");
  }
  return *v;
}

double KeyValueSection::get_double(const std::string& key) const {
  return to_double(get_string(key), "[" + name + "]." + key);
}

double KeyValueSection::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueSection::get_int(const std::string& key) const {
  const double v = get_double(key);
  if (v != static_cast<double>(static_cast<long long>(v))) {
    throw InvalidInputError("expected an integer for [" + name + "]." + key);
  }
  return static_cast<long long>(v);
}

long long KeyValueSection::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<double> KeyValueSection::get_doubles(const std::string& key) const {
  return parse_number_list(get_string(key));
}

Vec3 KeyValueSection::get_vec3(const std::string& key) const {
  const auto v = get_doubles(key);
  if (v.size() != 3) {
    throw InvalidInputError("expected 3 numbers for [" + name + "]." + key);
  }
  return Vec3(v[0], v[1], v[2]);
}

const KeyValueSection* KeyValueDocument::section(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

KeyValueDocument parse_key_value(const std::string& text) {
  KeyValueDocument doc;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ParseError("malformed section header '" + line + "'", line_no);
      }
      doc.sections.push_back({trim(line.substr(1, line.size() - 2)), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value, got '" + line + "'", line_no);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (doc.sections.empty()) doc.sections.push_back({"", line_no, {}});
    doc.sections.back().entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return doc;
}

KeyValueDocument read_key_value_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_key_value(ss.str());
}

}  // namespace superpart
