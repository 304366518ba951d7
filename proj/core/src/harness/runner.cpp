#include <chrono>
#include <fstream>
#include <sstream>

#include "cwsc/parallel.hpp"
#include "experiment.hpp"

namespace cwsc::harness {

namespace {

struct JournalEntry {
  std::size_t n;
  long long replica;
  std::uintmax_t csv_bytes;
};

// Entries of a journal written for `hash`; stops at the first incomplete line.
std::vector<JournalEntry> read_journal(const fs::path& file, const std::string& hash) {
  std::ifstream in(file, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<JournalEntry> out;
  std::istringstream lines(content);
  std::string line;
  if (!std::getline(lines, line) || line != "config " + hash) return out;
  std::size_t consumed = line.size() + 1;
  while (std::getline(lines, line)) {
    consumed += line.size() + 1;
    if (consumed > content.size()) break;
    std::istringstream fields(line);
    std::string tag;
    JournalEntry e{};
    if (!(fields >> tag >> e.n >> e.replica >> e.csv_bytes) || tag != "cell") break;
    out.push_back(e);
  }
  return out;
}

void write_file(const fs::path& file, const std::string& contents) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + file.string() + "'");
  out << contents;
  if (!out) fail(ErrorKind::IoError, "write to '" + file.string() + "' failed");
}

FileRecord record(const fs::path& dir, const std::string& name) {
  return {name, fs::file_size(dir / name), checksum_file(dir / name)};
}

}  // namespace

ResultManifest run(const ExperimentConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto experiment = detail::make_experiment(config);
  const std::vector<detail::Cell> cells = experiment->cells();
  const std::string hash = config.hash();
  const unsigned workers = std::max(1u, options.workers);

  fs::path dir = options.output_dir ? *options.output_dir
                 : config.output_dir ? *config.output_dir
                                     : default_output_root() / config.experiment;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::IoError, "cannot create output directory '" + dir.string() + "'");

  const std::string csv_name = config.experiment + ".csv";
  const fs::path csv_path = dir / csv_name;
  const fs::path journal_path = dir / (config.experiment + ".journal");

  // Completed prefix of the cell list according to the journal.
  std::size_t done = 0;
  std::uintmax_t csv_bytes = 0;
  if (options.resume && fs::exists(journal_path) && fs::exists(csv_path)) {
    const auto entries = read_journal(journal_path, hash);
    const auto size = fs::file_size(csv_path);
    for (const auto& e : entries) {
      if (done >= cells.size() || e.n != cells[done].n || e.replica != cells[done].replica || e.csv_bytes > size) break;
      csv_bytes = e.csv_bytes;
      ++done;
    }
  }

  std::vector<Row> rows;
  if (done > 0) {
    fs::resize_file(csv_path, csv_bytes, ec);
    if (ec) fail(ErrorKind::IoError, "cannot truncate '" + csv_path.string() + "'");
    rows = read_csv(csv_path);
    std::ostringstream journal;
    journal << "config " << hash << '\n';
    std::uintmax_t offset = std::string(kCsvHeader).size() + 1;
    std::size_t r = 0;
    for (std::size_t c = 0; c < done; ++c) {
      // Rewrite the journal without any trailing partial entry.
      while (r < rows.size() && rows[r].n == cells[c].n && rows[r].replica == cells[c].replica) {
        offset += format_row(rows[r]).size() + 1;
        ++r;
      }
      journal << "cell " << cells[c].n << ' ' << cells[c].replica << ' ' << offset << '\n';
    }
    write_file(journal_path, journal.str());
  } else {
    write_file(csv_path, std::string(kCsvHeader) + "\n");
    write_file(journal_path, "config " + hash + "\n");
  }

  std::ofstream csv(csv_path, std::ios::binary | std::ios::app);
  std::ofstream journal(journal_path, std::ios::binary | std::ios::app);
  if (!csv || !journal) fail(ErrorKind::IoError, "cannot append to outputs in '" + dir.string() + "'");
  std::uintmax_t offset = fs::file_size(csv_path);

  const std::size_t chunk = std::max<std::size_t>(1, 4 * static_cast<std::size_t>(workers));
  for (std::size_t begin = done; begin < cells.size(); begin += chunk) {
    const std::size_t count = std::min(chunk, cells.size() - begin);
    std::vector<std::vector<Row>> computed(count);
    parallel_for(count, workers, [&](std::size_t k) { computed[k] = experiment->compute(cells[begin + k]); });
    for (std::size_t k = 0; k < count; ++k) {
      for (auto& row : computed[k]) {
        const std::string line = format_row(row);
        csv << line << '\n';
        offset += line.size() + 1;
        rows.push_back(std::move(row));
      }
      csv.flush();
      if (!csv) fail(ErrorKind::IoError, "write to '" + csv_path.string() + "' failed");
      journal << "cell " << cells[begin + k].n << ' ' << cells[begin + k].replica << ' ' << offset << '\n';
      journal.flush();
    }
  }
  csv.close();
  journal.close();

  const detail::Summary summary = experiment->summarize(rows, workers);
  const std::string summary_name = config.experiment + "_summary.csv";
  write_csv(dir / summary_name, summary.rows);
  for (const auto& [name, contents] : summary.files) write_file(dir / name, contents);

  ResultManifest manifest;
  manifest.experiment = config.experiment;
  manifest.config_hash = hash;
  manifest.master_seed = config.master_seed;
  manifest.git_describe = git_describe();
  manifest.parameters = config.values();
  for (const auto& c : cells) manifest.seeds.push_back({c.n, c.replica, c.seed});
  manifest.files.push_back(record(dir, csv_name));
  manifest.files.push_back(record(dir, summary_name));
  for (const auto& f : summary.files) manifest.files.push_back(record(dir, f.first));
  manifest.workers = workers;
  manifest.resumed = done > 0;
  manifest.cells_computed = cells.size() - done;
  manifest.cells_skipped = done;
  manifest.output_dir = dir;
  manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(dir / "manifest.json", manifest.to_json());
  return manifest;
}

}  // namespace cwsc::harness
