#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "cwsc/harness.hpp"
#include "cwsc/parallel.hpp"

namespace h = cwsc::harness;

int main(int argc, char** argv) {
  CLI::App app{"Curie-Weiss spectral experiments"};
  app.require_subcommand(1);

  std::string config_file;
  unsigned workers = 1;
  bool resume = false;
  auto* run = app.add_subcommand("run", "run the experiment described by a key=value config file");
  run->add_option("config", config_file, "config file")->required();
  run->add_option("--workers,-w", workers, "worker threads (0 = hardware concurrency)")->default_val(1);
  run->add_flag("--resume", resume, "skip cells completed by an earlier run of the same config");

  std::string suite;
  auto* check = app.add_subcommand("check", "run a deterministic invariant suite");
  check->add_option("suite", suite, "suite name")->required()->check(CLI::IsMember(h::suite_names()));

  std::string csv, svg;
  auto* plot = app.add_subcommand("plot", "render a CSV as an SVG line plot");
  plot->add_option("csv", csv, "CSV written by 'run'")->required();
  plot->add_option("-o,--output", svg, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : h::exit_code(cwsc::ErrorKind::ConfigError);
  }

  try {
    if (*run) {
      const auto config = h::load_config(config_file);
      h::RunOptions options;
      options.workers = workers == 0 ? cwsc::default_workers() : workers;
      options.resume = resume;
      const auto manifest = h::run(config, options);
      std::printf("%s: %zu cells computed, %zu reused, %.2f s, output in %s\n", manifest.experiment.c_str(),
                  manifest.cells_computed, manifest.cells_skipped, manifest.wall_clock_seconds,
                  manifest.output_dir.string().c_str());
      for (const auto& f : manifest.files) std::printf("  %s  %s\n", f.checksum.c_str(), f.name.c_str());
      return 0;
    }
    if (*check) {
      bool ok = true;
      for (const auto& r : h::run_suite(suite)) {
        std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        ok = ok && r.passed;
      }
      return ok ? 0 : h::kExitAssertion;
    }
    if (*plot) {
      h::plot_csv(csv, svg);
      return 0;
    }
  } catch (const cwsc::Error& e) {
    std::fprintf(stderr, "cwsc: %s\n", e.what());
    return h::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "cwsc: %s\n", e.what());
    return h::exit_code(cwsc::ErrorKind::IoError);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cwsc: %s\n", e.what());
    return h::exit_code(cwsc::ErrorKind::NumericalFailure);
  }
  return 0;
}
