#include "gazenet/kv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gazenet/array_io.hpp"
#include "gazenet/error.hpp"

namespace gazenet {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueDocument KeyValueDocument::parse(std::string_view text, const std::string& origin) {
  KeyValueDocument doc;
  Table* current = &doc.globals;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
      }
      doc.sections.push_back({std::string(trim(line.substr(1, line.size() - 2))), line_no, {}});
      current = &doc.sections.back().values;
    } else {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
      }
      std::string key(trim(line.substr(0, eq)));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
      if (current->count(key)) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
      }
      (*current)[key] = std::string(trim(line.substr(eq + 1)));
    }
    if (end == text.size()) break;
  }
  return doc;
}

KeyValueDocument KeyValueDocument::load(const std::filesystem::path& path) {
  return parse(read_text_file(path), path.string());
}

std::string KeyValueDocument::serialize() const {
  std::ostringstream os;
  for (const auto& [k, v] : globals) os << k << " = " << v << '\n';
  for (const auto& section : sections) {
    os << "\n[" << section.name << "]\n";
    for (const auto& [k, v] : section.values) os << k << " = " << v << '\n';
  }
  return os.str();
}

std::optional<std::string> lookup(const KeyValueDocument::Table& table, const std::string& key) {
  const auto it = table.find(key);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::string require_string(const KeyValueDocument::Table& table, const std::string& key) {
  auto v = lookup(table, key);
  if (!v) throw ConfigError("missing key '" + key + "'");
  return *v;
}

double parse_double(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(context + ": not a number: '" + text + "'");
  }
}

long long parse_int(const std::string& text, const std::string& context) {
  long long v = 0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(context + ": not an integer: '" + text + "'");
  }
  return v;
}

double require_double(const KeyValueDocument::Table& table, const std::string& key) {
  return parse_double(require_string(table, key), key);
}

long long require_int(const KeyValueDocument::Table& table, const std::string& key) {
  return parse_int(require_string(table, key), key);
}

double get_double(const KeyValueDocument::Table& table, const std::string& key, double fallback) {
  auto v = lookup(table, key);
  return v ? parse_double(*v, key) : fallback;
}

long long get_int(const KeyValueDocument::Table& table, const std::string& key,
                  long long fallback) {
  auto v = lookup(table, key);
  return v ? parse_int(*v, key) : fallback;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw LoadError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  notify_read(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace gazenet
