#include "npeflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

#include "npeflow/io.hpp"

namespace npeflow::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(value);
  while (std::getline(ss, cur, ',')) parts.push_back(trim(cur));
  return parts;
}

[[noreturn]] void parse_fail(const std::string& section, const std::string& key,
                             const std::string& value, const std::string& type) {
  std::ostringstream msg;
  msg << "config: [" << section << "] " << key << " = \"" << value
      << "\" is not a valid " << type;
  throw std::invalid_argument(msg.str());
}

}  // namespace

bool IniData::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const std::string* IniData::find(const std::string& section,
                                 const std::string& key) const {
  for (const auto& sec : sections) {
    if (sec.name != section) continue;
    for (const auto& [k, v] : sec.entries)
      if (k == key) return &v;
  }
  return nullptr;
}

void IniData::set(const std::string& section, const std::string& key,
                  const std::string& value) {
  for (auto& sec : sections) {
    if (sec.name != section) continue;
    for (auto& [k, v] : sec.entries)
      if (k == key) {
        v = value;
        return;
      }
    sec.entries.emplace_back(key, value);
    return;
  }
  sections.push_back({section, {{key, value}}});
}

IniData parse_ini(const std::string& text) {
  IniData data;
  std::string current;  // section name
  std::istringstream ss(text);
  std::string line;
  int lineno = 0;
  auto section_ptr = [&](const std::string& name) -> IniSection& {
    for (auto& sec : data.sections)
      if (sec.name == name) return sec;
    data.sections.push_back({name, {}});
    return data.sections.back();
  };
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument(
            "config line " + std::to_string(lineno) + ": unterminated section header");
      current = trim(t.substr(1, t.size() - 2));
      if (current.empty())
        throw std::invalid_argument(
            "config line " + std::to_string(lineno) + ": empty section name");
      section_ptr(current);
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value', got \"" + t + "\"");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key");
    IniSection& sec = section_ptr(current);
    for (const auto& [k, _] : sec.entries)
      if (k == key)
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": duplicate key \"" + key + "\" in section [" +
                                    current + "]");
    sec.entries.emplace_back(key, value);
  }
  return data;
}

IniData load_ini_file(const std::filesystem::path& path) {
  return parse_ini(io::read_text_file(path));
}

std::string serialize_ini(const IniData& data) {
  std::ostringstream out;
  bool first = true;
  for (const auto& sec : data.sections) {
    if (!sec.name.empty()) {
      if (!first) out << "\n";
      out << "[" << sec.name << "]\n";
    }
    for (const auto& [k, v] : sec.entries) out << k << " = " << v << "\n";
    first = false;
  }
  return out.str();
}

const std::string* ConfigReader::consume(const std::string& section,
                                         const std::string& key) {
  consumed_.insert({section, key});
  return data_.find(section, key);
}

double ConfigReader::get_double(const std::string& section,
                                const std::string& key, double fallback) {
  const std::string* v = consume(section, key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    const double r = std::stod(*v, &pos);
    if (pos != v->size()) parse_fail(section, key, *v, "number");
    return r;
  } catch (const std::invalid_argument&) {
    parse_fail(section, key, *v, "number");
  } catch (const std::out_of_range&) {
    parse_fail(section, key, *v, "number");
  }
}

long ConfigReader::get_long(const std::string& section, const std::string& key,
                            long fallback) {
  const std::string* v = consume(section, key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    const long r = std::stol(*v, &pos);
    if (pos != v->size()) parse_fail(section, key, *v, "integer");
    return r;
  } catch (const std::invalid_argument&) {
    parse_fail(section, key, *v, "integer");
  } catch (const std::out_of_range&) {
    parse_fail(section, key, *v, "integer");
  }
}

int ConfigReader::get_int(const std::string& section, const std::string& key,
                          int fallback) {
  return static_cast<int>(get_long(section, key, fallback));
}

bool ConfigReader::get_bool(const std::string& section, const std::string& key,
                            bool fallback) {
  const std::string* v = consume(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  parse_fail(section, key, *v, "boolean (true/false)");
}

std::uint64_t ConfigReader::get_u64(const std::string& section,
                                    const std::string& key,
                                    std::uint64_t fallback) {
  const std::string* v = consume(section, key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    const unsigned long long r = std::stoull(*v, &pos);
    if (pos != v->size()) parse_fail(section, key, *v, "unsigned integer");
    return r;
  } catch (const std::invalid_argument&) {
    parse_fail(section, key, *v, "unsigned integer");
  } catch (const std::out_of_range&) {
    parse_fail(section, key, *v, "unsigned integer");
  }
}

std::string ConfigReader::get_string(const std::string& section,
                                     const std::string& key,
                                     const std::string& fallback) {
  const std::string* v = consume(section, key);
  return v ? *v : fallback;
}

std::vector<int> ConfigReader::get_int_list(const std::string& section,
                                            const std::string& key,
                                            const std::vector<int>& fallback) {
  const std::string* v = consume(section, key);
  if (!v) return fallback;
  std::vector<int> out;
  for (const std::string& part : split_list(*v)) {
    try {
      size_t pos = 0;
      out.push_back(std::stoi(part, &pos));
      if (pos != part.size()) parse_fail(section, key, *v, "integer list");
    } catch (const std::invalid_argument&) {
      parse_fail(section, key, *v, "integer list");
    } catch (const std::out_of_range&) {
      parse_fail(section, key, *v, "integer list");
    }
  }
  return out;
}

std::vector<double> ConfigReader::get_double_list(
    const std::string& section, const std::string& key,
    const std::vector<double>& fallback) {
  const std::string* v = consume(section, key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const std::string& part : split_list(*v)) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(part, &pos));
      if (pos != part.size()) parse_fail(section, key, *v, "number list");
    } catch (const std::invalid_argument&) {
      parse_fail(section, key, *v, "number list");
    } catch (const std::out_of_range&) {
      parse_fail(section, key, *v, "number list");
    }
  }
  return out;
}

void ConfigReader::finish() const {
  std::vector<std::string> unknown;
  for (const auto& sec : data_.sections)
    for (const auto& [k, _] : sec.entries)
      if (!consumed_.count({sec.name, k}))
        unknown.push_back(sec.name.empty() ? k : sec.name + "." + k);
  if (unknown.empty()) return;
  std::ostringstream msg;
  msg << "config: unrecognized key" << (unknown.size() > 1 ? "s" : "") << ": ";
  for (size_t i = 0; i < unknown.size(); ++i)
    msg << (i ? ", " : "") << unknown[i];
  msg << " (check spelling against the experiment's documented options)";
  throw std::invalid_argument(msg.str());
}

}  // namespace npeflow::config
