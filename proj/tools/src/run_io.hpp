#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace grip::cli {

inline constexpr int kArtifactVersion = 1;

void ensure_dir(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

uint64_t file_hash(const std::string& path);
std::string hex64(uint64_t value);

// Buffered JSONL document: a leading header record carrying the format
// version and record kind, then one record per line, written in one shot so
// partial files never masquerade as complete ones.
class JsonlDoc {
 public:
  explicit JsonlDoc(const std::string& kind);
  void add(const nlohmann::json& record);
  void save(const std::string& path) const;
  int records() const { return records_; }

 private:
  std::string buffer_;
  int records_ = 0;
};

// CSV with a leading "format_version,<v>" line before the header row.
class CsvDoc {
 public:
  explicit CsvDoc(std::vector<std::string> header);
  void add(const std::vector<std::string>& row);
  void save(const std::string& path) const;

 private:
  size_t columns_ = 0;
  std::string buffer_;
};

// Fixed-width text table for human eyes; first column left-aligned, the rest
// right-aligned. Rendered to stdout by the commands next to their JSONL twin.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

std::string fmt_double(double v, int precision);

struct ArtifactEntry {
  std::string rel_path;  // relative to the run directory
  uint64_t bytes = 0;
  uint64_t hash = 0;
};

// Hashes every artifact and writes results/manifest_<command>.json. The
// manifest's content_hash covers the config snapshot and the artifact table;
// wall-clock timings never enter the manifest so reruns byte-match.
std::string write_manifest(const std::string& out_dir, const std::string& command,
                           const nlohmann::json& config_snapshot,
                           const std::vector<std::string>& artifact_rel_paths);

// results/timings_<command>.json, the one deliberately non-reproducible
// output; everything else an identical config + seed produces is byte-stable.
std::string write_timings(const std::string& out_dir, const std::string& command,
                          const std::vector<std::pair<std::string, double>>& stages);

double now_seconds();

// Runs fn(i) for i in [0, n) across `threads` workers in contiguous chunks.
// Callers write into per-index slots and reduce afterwards, so results do not
// depend on the thread count. The first captured exception is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace grip::cli
