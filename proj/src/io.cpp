#include "npeflow/io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace npeflow::io {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : path_(path) {
  std::ofstream out(path_);
  if (!out) throw std::runtime_error("cannot open " + path_.string() + " for writing");
  out << "metric,value,step,replicate,seed\n";
}

void MetricsWriter::append(const std::string& metric, double value, long step,
                           int replicate, std::uint64_t seed) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path_.string());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  out << metric << "," << buf << "," << step << "," << replicate << "," << seed
      << "\n";
}

void export_trace_csv(const objectives::TrainTrace& trace,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "step,objective";
  if (!trace.rows.empty())
    for (const auto& [name, _] : trace.rows.front().extra) out << "," << name;
  out << "\n";
  char buf[64];
  for (const auto& row : trace.rows) {
    out << row.step;
    std::snprintf(buf, sizeof buf, "%.17g", row.objective);
    out << "," << buf;
    for (const auto& [_, v] : row.extra) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << "," << buf;
    }
    out << "\n";
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace npeflow::io
