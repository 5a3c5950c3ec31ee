#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "npeflow/objectives.hpp"

// File output helpers shared by the experiment drivers: the metrics table,
// training-trace export, and small utilities (timestamps, hashing).

namespace npeflow::io {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Long-format metrics table with the fixed header
//   metric,value,step,replicate,seed
// Values are written with %.17g so reruns are comparable bit-for-bit.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void append(const std::string& metric, double value, long step,
              int replicate, std::uint64_t seed);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Columnar CSV of a training trace: step,objective[,extra columns...].
// Extra column names are taken from the first row's entries.
void export_trace_csv(const objectives::TrainTrace& trace,
                      const std::filesystem::path& path);

// FNV-1a 64-bit over bytes, hex-encoded; used to fingerprint configs.
std::string fnv1a_hex(const std::string& bytes);

// UTC timestamp, e.g. 2026-08-16T12:34:56Z.
std::string utc_timestamp();

}  // namespace npeflow::io
