#pragma once

// Output files: CSV tables (17 significant digits, header row always), the
// run manifest, and the per-run diagnostics record.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "zeronoise/dynamics.hpp"
#include "zeronoise/measure.hpp"
#include "zeronoise/sde.hpp"

namespace zeronoise {

/// "%.17g"; non-finite values as nan / inf / -inf.
std::string format_double(double x);

/// Row-oriented CSV writer. Throws std::runtime_error if the file cannot
/// be opened or a row has the wrong width.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  void row(std::span<const double> values);
  void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }
  /// Leading string cell followed by numbers.
  void row(const std::string& label, std::span<const double> values);
  void close();
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t width_;
};

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr);
/// Columns t,<a>,<b>; labels default to u, v (h, k for time-changed paths).
void write_uv_csv(const std::filesystem::path& path, const UVTrajectory& tr, const std::string& a = "u",
                  const std::string& b = "v");
/// dim,x,y,z,weight (3D) or dim,u,v,weight (2D); normalised weights.
void write_measure_csv(const std::filesystem::path& path, const EmpiricalMeasure& m);
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct Diagnostic {
  std::string statistic;
  double value = 0.0;
  std::size_t n = 0;
  double se = 0.0;  // nan when not applicable
};

/// statistic,value,n,se
void write_diagnostics(const std::filesystem::path& path, std::span<const Diagnostic> rows);
std::vector<Diagnostic> read_diagnostics(const std::filesystem::path& path);

struct SeedRecord {
  std::string label;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

struct FileRecord {
  std::string path;  // relative to the output directory
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  nlohmann::json config;
  std::string version;
  std::string started_utc;
  double wall_clock_seconds = 0.0;
  unsigned threads = 1;
  std::vector<SeedRecord> seeds;
  std::vector<FileRecord> files;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

/// Hashes every listed file (paths relative to `dir`), fills m.files and
/// writes dir/manifest.json.
void finalize_manifest(RunManifest& m, const std::filesystem::path& dir, const std::vector<std::string>& outputs);

/// True iff every file listed in the manifest exists and matches its digest.
bool verify_manifest(const std::filesystem::path& dir);

}  // namespace zeronoise
