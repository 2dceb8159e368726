// zeronoise: run, validate and summarise experiments.
//
//   zeronoise run <config.json>
//   zeronoise validate <config.json>
//   zeronoise report <output-dir>
//
// ZERONOISE_THREADS overrides the worker count.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "zeronoise/experiments.hpp"

namespace {

int fail(const std::string& msg, const std::vector<zeronoise::Violation>& v = {}) {
  std::cerr << zeronoise::error_record(msg, v).dump(2) << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-noise invariant measure lab"};
  app.set_version_flag("--version", std::string(ZERONOISE_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "config file (JSON)")->required()->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_path, "config file (JSON)")->required();

  std::string report_dir;
  auto* report = app.add_subcommand("report", "summarise diagnostics of all runs below a directory");
  report->add_option("dir", report_dir, "output directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto v = zeronoise::validate_file(config_path);
      if (v.empty()) {
        std::cout << "ok\n";
        return 0;
      }
      for (const auto& x : v) std::cout << x.field << ": " << x.constraint << '\n';
      return 2;
    }
    if (*run) {
      const auto cfg = zeronoise::load_config(config_path);
      const auto m = zeronoise::run(cfg);
      std::cout << "wrote " << m.files.size() << " files to " << cfg.output_dir.string() << " in "
                << m.wall_clock_seconds << " s\n";
      return 0;
    }
    const auto rows = zeronoise::collect_report(report_dir);
    zeronoise::write_report_csv(std::filesystem::path(report_dir) / "report.csv", rows);
    std::cout << zeronoise::format_report(rows);
    return 0;
  } catch (const zeronoise::ConfigError& e) {
    return fail("invalid config", e.violations());
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}
