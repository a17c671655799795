#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tart/types.hpp"

namespace tart::config {

/// Flat key/value document with [section] headers. Parsing is strict:
/// duplicate keys, keys outside a section, and malformed lines are errors,
/// and commands reject any section or key they do not recognize.
class Document {
 public:
  static Document parse_file(const std::string& path);
  static Document parse_text(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;

  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  std::vector<Index> get_index_list(const std::string& section, const std::string& key,
                                    const std::vector<Index>& fallback) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& section,
                                          const std::string& key) const;
  /// "30:10,45:10" → {(30,10),(45,10)}
  std::vector<std::pair<int, double>> get_schedule(const std::string& section,
                                                   const std::string& key,
                                                   const std::vector<std::pair<int, double>>&
                                                       fallback) const;

  /// Rejects sections/keys not present in `allowed` (section → key set).
  void check_known(const std::map<std::string, std::set<std::string>>& allowed) const;
  void require(const std::string& section, const std::string& key) const;

  /// Canonical text form; reparsing reproduces the document.
  std::string serialize() const;

  using Entries = std::vector<std::pair<std::string, std::string>>;
  /// Sections in document order, for echoing into other formats.
  std::vector<std::pair<std::string, Entries>> items() const;

 private:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };
  const std::string* find(const std::string& section, const std::string& key) const;
  std::vector<Section> sections_;
};

}  // namespace tart::config
