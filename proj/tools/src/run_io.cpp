#include "run_io.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "grip/common.hpp"
#include "grip/rng.hpp"

namespace grip::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) fail("cannot create directory " + path + ": " + ec.message());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) fail("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof()) fail("read failed: " + path);
  return ss.str();
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return fs::exists(path, ec);
}

uint64_t file_hash(const std::string& path) {
  std::string bytes = read_file(path);
  return fnv1a64(bytes.data(), bytes.size());
}

std::string hex64(uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

JsonlDoc::JsonlDoc(const std::string& kind) {
  json header{{"format_version", kArtifactVersion}, {"kind", kind}};
  buffer_ = header.dump() + "\n";
}

void JsonlDoc::add(const json& record) {
  buffer_ += record.dump();
  buffer_ += '\n';
  ++records_;
}

void JsonlDoc::save(const std::string& path) const { write_file(path, buffer_); }

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

}  // namespace

CsvDoc::CsvDoc(std::vector<std::string> header) : columns_(header.size()) {
  buffer_ = "format_version," + std::to_string(kArtifactVersion) + "\n";
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += csv_escape(header[i]);
  }
  buffer_ += '\n';
}

void CsvDoc::add(const std::vector<std::string>& row) {
  require(row.size() == columns_, "CsvDoc: row width differs from header");
  for (size_t i = 0; i < row.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += csv_escape(row[i]);
  }
  buffer_ += '\n';
}

void CsvDoc::save(const std::string& path) const { write_file(path, buffer_); }

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    require(row.size() == header.size(), "render_table: ragged row");
    for (size_t c = 0; c < row.size(); ++c)
      if (row[c].size() > width[c]) width[c] = row[c].size();
  }
  auto emit = [&](const std::vector<std::string>& row, std::string& out) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += "  ";
      size_t pad = width[c] - row[c].size();
      if (c == 0) {
        out += row[c];
        out.append(pad, ' ');
      } else {
        out.append(pad, ' ');
        out += row[c];
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  };
  std::string out;
  emit(header, out);
  std::string rule;
  for (size_t c = 0; c < width.size(); ++c) {
    if (c) rule += "  ";
    rule.append(width[c], '-');
  }
  out += rule + "\n";
  for (const auto& row : rows) emit(row, out);
  return out;
}

std::string fmt_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string write_manifest(const std::string& out_dir, const std::string& command,
                           const json& config_snapshot,
                           const std::vector<std::string>& artifact_rel_paths) {
  std::vector<ArtifactEntry> entries;
  for (const std::string& rel : artifact_rel_paths) {
    std::string full = (fs::path(out_dir) / rel).string();
    std::string bytes = read_file(full);
    entries.push_back({rel, bytes.size(), fnv1a64(bytes.data(), bytes.size())});
  }

  // content_hash chains the config snapshot with every artifact's own hash;
  // it changes iff the config or any artifact byte changes.
  std::string chain = config_snapshot.dump();
  for (const ArtifactEntry& e : entries) {
    chain += '\n';
    chain += e.rel_path;
    chain += ':';
    chain += hex64(e.hash);
  }

  json artifacts = json::array();
  for (const ArtifactEntry& e : entries)
    artifacts.push_back(
        {{"path", e.rel_path}, {"bytes", e.bytes}, {"fnv1a64", hex64(e.hash)}});
  json manifest{{"format_version", kArtifactVersion},
                {"command", command},
                {"config", config_snapshot},
                {"artifacts", artifacts},
                {"content_hash", hex64(fnv1a64(chain.data(), chain.size()))}};

  ensure_dir((fs::path(out_dir) / "results").string());
  std::string path = (fs::path(out_dir) / "results" / ("manifest_" + command + ".json")).string();
  write_file(path, manifest.dump(2) + "\n");
  return path;
}

std::string write_timings(const std::string& out_dir, const std::string& command,
                          const std::vector<std::pair<std::string, double>>& stages) {
  json list = json::array();
  for (const auto& [name, seconds] : stages)
    list.push_back({{"stage", name}, {"seconds", seconds}});
  json doc{{"format_version", kArtifactVersion}, {"command", command}, {"stages", list}};
  ensure_dir((fs::path(out_dir) / "results").string());
  std::string path = (fs::path(out_dir) / "results" / ("timings_" + command + ".json")).string();
  write_file(path, doc.dump(2) + "\n");
  return path;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  require(n >= 0, "parallel_for: negative range");
  require(threads >= 1, "parallel_for: need at least one thread");
  if (threads == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  int workers = threads < n ? threads : n;
  std::vector<std::thread> pool;
  std::mutex error_mutex;
  std::exception_ptr first_error;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
      int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace grip::cli
