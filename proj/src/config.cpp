#include "tart/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace tart::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::int64_t parse_int(const std::string& v, const std::string& where) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(where + ": expected integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& v, const std::string& where) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(where + ": expected unsigned integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& v, const std::string& where) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(where + ": expected real number, got '" + v + "'");
  return out;
}

}  // namespace

Document Document::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

Document Document::parse_text(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  Section* current = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      std::string name = trim(t.substr(1, t.size() - 2));
      if (name.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      for (const Section& s : doc.sections_)
        if (s.name == name)
          throw ConfigError("config line " + std::to_string(lineno) + ": duplicate section [" +
                            name + "]");
      doc.sections_.push_back({name, {}});
      current = &doc.sections_.back();
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    if (current == nullptr)
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    for (const auto& [k, v] : current->entries)
      if (k == key)
        throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                          "'");
    current->entries.emplace_back(std::move(key), std::move(value));
  }
  return doc;
}

const std::string* Document::find(const std::string& section, const std::string& key) const {
  for (const Section& s : sections_) {
    if (s.name != section) continue;
    for (const auto& [k, v] : s.entries)
      if (k == key) return &v;
  }
  return nullptr;
}

bool Document::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

void Document::set(const std::string& section, const std::string& key,
                   const std::string& value) {
  for (Section& s : sections_) {
    if (s.name != section) continue;
    for (auto& [k, v] : s.entries) {
      if (k == key) {
        v = value;
        return;
      }
    }
    s.entries.emplace_back(key, value);
    return;
  }
  sections_.push_back({section, {{key, value}}});
}

std::string Document::get_string(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (v == nullptr) throw ConfigError("missing required config key " + section + "." + key);
  return *v;
}

std::string Document::get_string(const std::string& section, const std::string& key,
                                 const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v != nullptr ? *v : fallback;
}

std::int64_t Document::get_int(const std::string& section, const std::string& key) const {
  return parse_int(get_string(section, key), section + "." + key);
}

std::int64_t Document::get_int(const std::string& section, const std::string& key,
                               std::int64_t fallback) const {
  const std::string* v = find(section, key);
  return v != nullptr ? parse_int(*v, section + "." + key) : fallback;
}

std::uint64_t Document::get_u64(const std::string& section, const std::string& key,
                                std::uint64_t fallback) const {
  const std::string* v = find(section, key);
  return v != nullptr ? parse_u64(*v, section + "." + key) : fallback;
}

double Document::get_double(const std::string& section, const std::string& key) const {
  return parse_double(get_string(section, key), section + "." + key);
}

double Document::get_double(const std::string& section, const std::string& key,
                            double fallback) const {
  const std::string* v = find(section, key);
  return v != nullptr ? parse_double(*v, section + "." + key) : fallback;
}

bool Document::get_bool(const std::string& section, const std::string& key,
                        bool fallback) const {
  const std::string* v = find(section, key);
  if (v == nullptr) return fallback;
  if (*v == "true" || *v == "1" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "off") return false;
  throw ConfigError(section + "." + key + ": expected boolean, got '" + *v + "'");
}

std::vector<Index> Document::get_index_list(const std::string& section, const std::string& key,
                                            const std::vector<Index>& fallback) const {
  const std::string* v = find(section, key);
  if (v == nullptr) return fallback;
  std::vector<Index> out;
  for (const std::string& part : split(*v, ','))
    out.push_back(static_cast<Index>(parse_int(part, section + "." + key)));
  return out;
}

std::vector<std::uint64_t> Document::get_u64_list(const std::string& section,
                                                  const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const std::string& part : split(get_string(section, key), ','))
    out.push_back(parse_u64(part, section + "." + key));
  return out;
}

std::vector<std::pair<int, double>> Document::get_schedule(
    const std::string& section, const std::string& key,
    const std::vector<std::pair<int, double>>& fallback) const {
  const std::string* v = find(section, key);
  if (v == nullptr) return fallback;
  if (trim(*v) == "none") return {};
  std::vector<std::pair<int, double>> out;
  for (const std::string& part : split(*v, ',')) {
    std::vector<std::string> halves = split(part, ':');
    if (halves.size() != 2)
      throw ConfigError(section + "." + key + ": expected epoch:divisor pairs");
    out.emplace_back(static_cast<int>(parse_int(halves[0], section + "." + key)),
                     parse_double(halves[1], section + "." + key));
  }
  return out;
}

void Document::check_known(const std::map<std::string, std::set<std::string>>& allowed) const {
  for (const Section& s : sections_) {
    auto it = allowed.find(s.name);
    if (it == allowed.end()) throw ConfigError("unknown config section [" + s.name + "]");
    for (const auto& [k, v] : s.entries)
      if (!it->second.contains(k))
        throw ConfigError("unknown config key " + s.name + "." + k);
  }
}

void Document::require(const std::string& section, const std::string& key) const {
  if (!has(section, key))
    throw ConfigError("missing required config key " + section + "." + key);
}

std::vector<std::pair<std::string, Document::Entries>> Document::items() const {
  std::vector<std::pair<std::string, Entries>> out;
  for (const Section& s : sections_) out.emplace_back(s.name, s.entries);
  return out;
}

std::string Document::serialize() const {
  std::ostringstream out;
  bool first = true;
  for (const Section& s : sections_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
  }
  return out.str();
}

}  // namespace tart::config
