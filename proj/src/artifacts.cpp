#include "zeronoise/artifacts.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace zeronoise {

namespace fs = std::filesystem;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

struct CsvWriter::Impl {
  std::ofstream out;
  fs::path path;
};

CsvWriter::CsvWriter(const fs::path& path, std::vector<std::string> header)
    : impl_(std::make_unique<Impl>()), width_(header.size()) {
  impl_->path = path;
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) impl_->out << (i ? "," : "") << header[i];
  impl_->out << '\n';
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != width_) throw std::runtime_error("csv row width mismatch in " + impl_->path.string());
  for (std::size_t i = 0; i < values.size(); ++i) impl_->out << (i ? "," : "") << format_double(values[i]);
  impl_->out << '\n';
}

void CsvWriter::row(const std::string& label, std::span<const double> values) {
  if (values.size() + 1 != width_) throw std::runtime_error("csv row width mismatch in " + impl_->path.string());
  impl_->out << label;
  for (double v : values) impl_->out << ',' << format_double(v);
  impl_->out << '\n';
}

void CsvWriter::close() {
  impl_->out.close();
  if (!impl_->out) throw std::runtime_error("write failed: " + impl_->path.string());
}

void write_trajectory_csv(const fs::path& path, const Trajectory& tr) {
  CsvWriter w(path, {"t", "x", "y", "z"});
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const State3& s = tr.states[i];
    w.row({tr.times[i], s.x, s.y, s.z});
  }
  w.close();
}

void write_uv_csv(const fs::path& path, const UVTrajectory& tr, const std::string& a, const std::string& b) {
  CsvWriter w(path, {"t", a, b});
  for (std::size_t i = 0; i < tr.size(); ++i) w.row({tr.times[i], tr.u[i], tr.v[i]});
  w.close();
}

void write_measure_csv(const fs::path& path, const EmpiricalMeasure& m) {
  std::vector<std::string> header{"dim"};
  if (m.dim() == 3) {
    header.insert(header.end(), {"x", "y", "z"});
  } else {
    header.insert(header.end(), {"u", "v"});
  }
  header.push_back("weight");
  CsvWriter w(path, header);
  std::vector<double> row(header.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    row[0] = m.dim();
    const auto p = m.point(i);
    std::copy(p.begin(), p.end(), row.begin() + 1);
    row.back() = m.weight(i);
    w.row(row);
  }
  w.close();
}

void write_histogram_csv(const fs::path& path, const Histogram& h) {
  CsvWriter w(path, {"bin_lo", "bin_hi", "mass"});
  for (std::size_t i = 0; i < h.masses.size(); ++i) w.row({h.edges[i], h.edges[i + 1], h.masses[i]});
  w.close();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 init failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s.push_back(hex[md[i] >> 4]);
    s.push_back(hex[md[i] & 15]);
  }
  return s;
}

void write_diagnostics(const fs::path& path, std::span<const Diagnostic> rows) {
  CsvWriter w(path, {"statistic", "value", "n", "se"});
  for (const Diagnostic& d : rows) {
    const std::array<double, 3> v{d.value, static_cast<double>(d.n), d.se};
    w.row(d.statistic, v);
  }
  w.close();
}

std::vector<Diagnostic> read_diagnostics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "statistic,value,n,se") throw std::runtime_error("unexpected header in " + path.string());
  std::vector<Diagnostic> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, value, n, se;
    std::getline(ss, name, ',');
    std::getline(ss, value, ',');
    std::getline(ss, n, ',');
    std::getline(ss, se, ',');
    out.push_back({name, std::stod(value), static_cast<std::size_t>(std::stod(n)), std::stod(se)});
  }
  return out;
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["config"] = m.config;
  j["version"] = m.version;
  j["started_utc"] = m.started_utc;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["threads"] = m.threads;
  j["seeds"] = nlohmann::json::array();
  for (const auto& s : m.seeds) j["seeds"].push_back({{"label", s.label}, {"seed", s.seed}, {"stream", s.stream}});
  j["files"] = nlohmann::json::array();
  for (const auto& f : m.files) j["files"].push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.config = j.at("config");
  m.version = j.at("version").get<std::string>();
  m.started_utc = j.value("started_utc", "");
  m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  m.threads = j.value("threads", 1u);
  for (const auto& s : j.at("seeds"))
    m.seeds.push_back({s.at("label").get<std::string>(), s.at("seed").get<std::uint64_t>(),
                       s.at("stream").get<std::uint64_t>()});
  for (const auto& f : j.at("files"))
    m.files.push_back({f.at("path").get<std::string>(), f.at("bytes").get<std::uintmax_t>(),
                       f.at("sha256").get<std::string>()});
  return m;
}

void finalize_manifest(RunManifest& m, const fs::path& dir, const std::vector<std::string>& outputs) {
  m.files.clear();
  for (const std::string& rel : outputs) {
    const fs::path p = dir / rel;
    m.files.push_back({rel, fs::file_size(p), sha256_file(p)});
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << to_json(m).dump(2) << '\n';
}

bool verify_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) return false;
  const RunManifest m = manifest_from_json(nlohmann::json::parse(in));
  for (const FileRecord& f : m.files) {
    const fs::path p = dir / f.path;
    if (!fs::exists(p) || fs::file_size(p) != f.bytes || sha256_file(p) != f.sha256) return false;
  }
  return true;
}

}  // namespace zeronoise
