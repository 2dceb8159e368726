#pragma once

// Config-driven experiment runner. A config is a JSON document
//
//   { "experiment": "<name>", "output_dir": "<path>", "params": { ... } }
//
// Every experiment reads its knobs from "params"; noise strengths, eps and
// horizons have no defaults. See configs/ for one example per experiment.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "zeronoise/artifacts.hpp"

namespace zeronoise {

struct Violation {
  std::string field;
  std::string constraint;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<Violation> v);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json params = nlohmann::json::object();
  std::filesystem::path output_dir;
  nlohmann::json source;  // the document as read, echoed into the manifest
};

const std::vector<std::string>& experiment_names();

/// Structural parse. Throws ConfigError for a missing or unknown
/// experiment, missing output_dir or non-object params.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every violated constraint; empty iff run() would accept the config.
std::vector<Violation> validate(const ExperimentConfig& cfg);
/// Reads the file and validates; parse failures are returned as violations.
std::vector<Violation> validate_file(const std::filesystem::path& path);

/// Validates, runs, writes outputs and manifest.json into cfg.output_dir.
/// Throws ConfigError before any compute if validation fails.
RunManifest run(const ExperimentConfig& cfg);

struct ReportRow {
  std::string run;  // directory relative to the report root
  std::string experiment;
  Diagnostic diag;
};

/// Collects diagnostics.csv of every run below `dir` (runs are found by
/// their manifest.json).
std::vector<ReportRow> collect_report(const std::filesystem::path& dir);
/// Aligned plain-text table.
std::string format_report(const std::vector<ReportRow>& rows);
/// run,experiment,statistic,value,n,se
void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

/// JSON error record used by the CLI on failure.
nlohmann::json error_record(const std::string& message, const std::vector<Violation>& violations = {});

}  // namespace zeronoise
