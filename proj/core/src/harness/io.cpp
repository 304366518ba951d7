#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cwsc/harness.hpp"
#include "cwsc/rng.hpp"

#ifndef CWSC_GIT_DESCRIBE
#define CWSC_GIT_DESCRIBE "unknown"
#endif

namespace cwsc::harness {

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <class T>
T parse_number(std::string_view field, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    fail(ErrorKind::IoError, std::string("malformed CSV field ") + what + ": '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string format_row(const Row& row) {
  std::string out;
  out.reserve(128);
  out += row.experiment;
  out += ',';
  out += g17(row.beta);
  out += ',';
  out += std::to_string(row.n);
  out += ',';
  out += std::to_string(row.replica);
  out += ',';
  out += g17(row.z_real);
  out += ',';
  out += g17(row.z_imag);
  out += ',';
  out += row.statistic;
  out += ',';
  out += g17(row.value);
  out += ',';
  out += std::to_string(row.seed);
  return out;
}

Row parse_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      f.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  if (f.size() != 9) fail(ErrorKind::IoError, "CSV row needs 9 fields: '" + std::string(line) + "'");
  Row r;
  r.experiment = f[0];
  r.beta = parse_number<double>(f[1], "beta");
  r.n = parse_number<std::size_t>(f[2], "N");
  r.replica = parse_number<long long>(f[3], "replica");
  r.z_real = parse_number<double>(f[4], "z_real");
  r.z_imag = parse_number<double>(f[5], "z_imag");
  r.statistic = f[6];
  r.value = parse_number<double>(f[7], "value");
  r.seed = parse_number<std::uint64_t>(f[8], "seed");
  return r;
}

std::vector<Row> read_csv(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read '" + file.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    fail(ErrorKind::IoError, "'" + file.string() + "' lacks the CSV header");
  }
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_row(line));
  }
  return rows;
}

void write_csv(const fs::path& file, const std::vector<Row>& rows) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + file.string() + "'");
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
  if (!out) fail(ErrorKind::IoError, "write to '" + file.string() + "' failed");
}

std::string checksum_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read '" + file.string() + "'");
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ULL;
    }
  }
  return hex16(h);
}

fs::path default_output_root() {
  if (const char* env = std::getenv("CWSC_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return fs::current_path() / "cwsc_output";
}

std::string git_describe() { return CWSC_GIT_DESCRIBE; }

std::string ResultManifest::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["config_hash"] = config_hash;
  j["master_seed"] = master_seed;
  j["git_describe"] = git_describe;
  j["parameters"] = parameters;
  auto& seed_list = j["seeds"] = nlohmann::ordered_json::array();
  for (const auto& s : seeds) seed_list.push_back({{"N", s.n}, {"replica", s.replica}, {"seed", s.seed}});
  auto& file_list = j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) file_list.push_back({{"name", f.name}, {"bytes", f.bytes}, {"checksum", f.checksum}});
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["workers"] = workers;
  j["resumed"] = resumed;
  j["cells_computed"] = cells_computed;
  j["cells_skipped"] = cells_skipped;
  return j.dump(2) + "\n";
}

bool ResultManifest::validate() const {
  for (const auto& f : files) {
    const fs::path p = output_dir / f.name;
    std::error_code ec;
    const auto bytes = fs::file_size(p, ec);
    if (ec || bytes != f.bytes) return false;
    if (checksum_file(p) != f.checksum) return false;
  }
  return true;
}

}  // namespace cwsc::harness
