#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gazenet {

// Flat `key = value` text. Lines starting with '#' are comments; a line of
// the form `[name]` opens a new section. Keys before the first section land
// in `globals`.
struct KeyValueDocument {
  using Table = std::map<std::string, std::string>;
  struct Section {
    std::string name;
    int line = 0;
    Table values;
  };

  Table globals;
  std::vector<Section> sections;

  static KeyValueDocument parse(std::string_view text, const std::string& origin);
  static KeyValueDocument load(const std::filesystem::path& path);
  std::string serialize() const;
};

// Typed access helpers; all throw ConfigError naming `key` on bad values.
std::optional<std::string> lookup(const KeyValueDocument::Table& table, const std::string& key);
std::string require_string(const KeyValueDocument::Table& table, const std::string& key);
double require_double(const KeyValueDocument::Table& table, const std::string& key);
long long require_int(const KeyValueDocument::Table& table, const std::string& key);
double get_double(const KeyValueDocument::Table& table, const std::string& key, double fallback);
long long get_int(const KeyValueDocument::Table& table, const std::string& key, long long fallback);

double parse_double(const std::string& text, const std::string& context);
long long parse_int(const std::string& text, const std::string& context);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace gazenet
