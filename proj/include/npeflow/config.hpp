#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

// INI-style config files: [section] headers, key = value lines, full-line
// comments (# or ;), comma-separated lists. Parsing preserves order so
// parse -> serialize -> parse is lossless; typed access goes through
// ConfigReader, which rejects unknown keys at the end.

namespace npeflow::config {

struct IniSection {
  std::string name;  // "" for the preamble before any header
  std::vector<std::pair<std::string, std::string>> entries;
};

struct IniData {
  std::vector<IniSection> sections;

  bool has(const std::string& section, const std::string& key) const;
  const std::string* find(const std::string& section,
                          const std::string& key) const;
  void set(const std::string& section, const std::string& key,
           const std::string& value);
};

// Throws std::invalid_argument with line numbers on malformed input or
// duplicate keys.
IniData parse_ini(const std::string& text);
IniData load_ini_file(const std::filesystem::path& path);
std::string serialize_ini(const IniData& data);

// Typed reads that track which keys were consumed. finish() throws listing
// every unconsumed key, so spelling mistakes fail loudly instead of being
// silently ignored.
class ConfigReader {
 public:
  explicit ConfigReader(IniData data) : data_(std::move(data)) {}

  double get_double(const std::string& section, const std::string& key,
                    double fallback);
  long get_long(const std::string& section, const std::string& key,
                long fallback);
  int get_int(const std::string& section, const std::string& key, int fallback);
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback);
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback);
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  std::vector<int> get_int_list(const std::string& section,
                                const std::string& key,
                                const std::vector<int>& fallback);
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key,
                                      const std::vector<double>& fallback);

  // Throws std::invalid_argument naming every key that no reader consumed.
  void finish() const;

  const IniData& data() const { return data_; }

 private:
  const std::string* consume(const std::string& section, const std::string& key);
  IniData data_;
  std::set<std::pair<std::string, std::string>> consumed_;
};

}  // namespace npeflow::config
