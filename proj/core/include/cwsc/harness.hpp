#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cwsc/error.hpp"

namespace cwsc::harness {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

enum class ParamType { real, integer, text, real_list, integer_list };

struct ParamSpec {
  std::string key;
  ParamType type = ParamType::real;
  std::string default_value;
  double min = -1e300;
  double max = 1e300;
  /// Allowed values for text parameters; empty means free text.
  std::vector<std::string> choices;
  std::string help;
};

const std::vector<std::string>& experiment_ids();
/// Parameter table of one experiment; ConfigError for an unknown id.
const std::vector<ParamSpec>& parameters(const std::string& experiment);

/// Validated experiment configuration. Every parameter of the experiment is
/// present, defaults filled in, numbers stored in canonical text form.
class ExperimentConfig {
 public:
  std::string experiment;
  std::uint64_t master_seed = 0;
  std::optional<fs::path> output_dir;

  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::size_t size(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::size_t> sizes(const std::string& key) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  /// Sets one parameter with full validation.
  void set(const std::string& key, const std::string& value);

  /// experiment, master seed and parameters as sorted key=value lines.
  std::string canonical() const;
  /// FNV-1a of canonical(), 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
  friend ExperimentConfig make_config(const std::string&, std::uint64_t, const std::map<std::string, std::string>&);
};

/// key=value text, '#' starts a comment. ConfigError on unknown keys,
/// duplicates, malformed or out-of-range values.
ExperimentConfig parse_config(std::string_view text);
/// IoError when the file cannot be read.
ExperimentConfig load_config(const fs::path& file);
ExperimentConfig make_config(const std::string& experiment, std::uint64_t master_seed,
                             const std::map<std::string, std::string>& overrides = {});

// ---------------------------------------------------------------- output

/// One CSV record: experiment, beta, N, replica, z_real, z_imag, statistic, value, seed.
/// Aggregate rows use replica = -1.
struct Row {
  std::string experiment;
  double beta = 0.0;
  std::size_t n = 0;
  long long replica = 0;
  double z_real = 0.0;
  double z_imag = 0.0;
  std::string statistic;
  double value = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kCsvHeader = "experiment,beta,N,replica,z_real,z_imag,statistic,value,seed";

/// Reals printed with %.17g so that parsing restores them exactly.
std::string format_row(const Row& row);
Row parse_row(std::string_view line);
/// All data rows of a CSV file written by this harness.
std::vector<Row> read_csv(const fs::path& file);
void write_csv(const fs::path& file, const std::vector<Row>& rows);

/// FNV-1a 64 of the file bytes, 16 hex digits.
std::string checksum_file(const fs::path& file);

/// CWSC_OUTPUT_DIR if set, else ./cwsc_output.
fs::path default_output_root();

struct FileRecord {
  std::string name;
  std::uintmax_t bytes = 0;
  std::string checksum;
};

struct CellSeed {
  std::size_t n = 0;
  long long replica = 0;
  std::uint64_t seed = 0;
};

struct ResultManifest {
  std::string experiment;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::string git_describe;
  std::map<std::string, std::string> parameters;
  std::vector<CellSeed> seeds;
  std::vector<FileRecord> files;
  double wall_clock_seconds = 0.0;
  unsigned workers = 1;
  bool resumed = false;
  std::size_t cells_computed = 0;
  std::size_t cells_skipped = 0;
  fs::path output_dir;

  std::string to_json() const;
  /// Recomputes sizes and checksums of the listed files.
  bool validate() const;
};

/// Build identification recorded in manifests.
std::string git_describe();

// ---------------------------------------------------------------- runner

struct RunOptions {
  unsigned workers = 1;
  bool resume = false;
  /// Overrides the config's output_dir.
  std::optional<fs::path> output_dir;
};

/// Runs the experiment: per-cell rows to <experiment>.csv, aggregates to
/// <experiment>_summary.csv, extra files, then manifest.json. With resume,
/// cells listed in the journal are read back instead of recomputed.
ResultManifest run(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------- svg

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
};

/// Polyline plot with axes and legend. With `reference_density` the
/// semicircle density is drawn in red over the x-range.
std::string render_svg(const std::vector<Curve>& curves, bool reference_density, const std::string& title = "");
void emit_svg(const fs::path& file, const std::vector<Curve>& curves, bool reference_density,
              const std::string& title = "");
/// One curve per (statistic, z_imag) group, x = z_real.
std::vector<Curve> curves_from_rows(const std::vector<Row>& rows);
void plot_csv(const fs::path& csv, const fs::path& svg);

// ---------------------------------------------------------------- suites

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

const std::vector<std::string>& suite_names();
/// Deterministic invariant suites; "all" runs every suite. ConfigError for unknown names.
std::vector<CheckResult> run_suite(const std::string& name);

/// 0 success, 1 config or I/O error, 2 numerical failure, 3 failed assertion.
int exit_code(ErrorKind kind);
inline constexpr int kExitAssertion = 3;

}  // namespace cwsc::harness
