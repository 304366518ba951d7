#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "cwsc/harness.hpp"

using namespace cwsc;
using namespace cwsc::harness;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("CWSC_TEST_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "cwsc_unit";
  const fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no cwsc::Error thrown");
  return ErrorKind::NumericalFailure;
}

ExperimentConfig small_decay() {
  return make_config("decay_correlations", 5, {{"betas", "0.5,1.5"}, {"n_grid", "100,1000"}, {"ells", "1,2"}});
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "# comment\n"
      "experiment = domination\n"
      "master_seed = 0x10   # trailing comment\n"
      "\n"
      "epsilons = 0.1, 0.4\n"
      "N_grid=32,64\n");
  CHECK(c.experiment == "domination");
  CHECK(c.master_seed == 16);
  CHECK(c.reals("epsilons") == std::vector<double>{0.1, 0.4});
  CHECK(c.sizes("N_grid") == std::vector<std::size_t>{32, 64});
  CHECK(c.size("replicas") == 400);
  CHECK(c.text("variant") == "curie_weiss");

  CHECK(kind_of([] { parse_config("experiment = domination\nbogus = 1\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_config("experiment = domination\nreplicas = 1\nreplicas = 2\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_config("experiment = domination\nreplicas = many\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_config("experiment = domination\ntau = 7\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_config("experiment = nothing\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_config("replicas = 3\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_config("experiment = domination\nvariant = gaussian\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_config("experiment domination\n"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { load_config("/nonexistent/dir/file.cfg"); }) == ErrorKind::IoError);

  for (const auto& id : experiment_ids()) CHECK_NOTHROW(make_config(id, 0));
}

TEST_CASE("canonical form and hash") {
  const auto a = parse_config("experiment = kernel\nreplicas = 7\nN_grid = 100, 200\n");
  const auto b = parse_config("N_grid=100,200\n\nreplicas=7\nexperiment=kernel\noutput_dir=/tmp/elsewhere\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  auto c = a;
  c.set("replicas", "8");
  CHECK(c.hash() != a.hash());
  auto d = a;
  d.master_seed = 1;
  CHECK(d.hash() != a.hash());
  CHECK(kind_of([&] { c.set("replicas", "-1"); }) == ErrorKind::ConfigError);
}

TEST_CASE("CSV rows round trip exactly") {
  Row r;
  r.experiment = "kernel";
  r.beta = 1.0 / 3.0;
  r.n = 800;
  r.replica = -1;
  r.z_real = -0.1;
  r.z_imag = 1e-300;
  r.statistic = "median_kernel_distance";
  r.value = 0.1 + 0.2;
  r.seed = 0xFFFFFFFFFFFFFFFFULL;
  const auto line = format_row(r);
  const auto back = parse_row(line);
  CHECK(back.experiment == r.experiment);
  CHECK(back.beta == r.beta);
  CHECK(back.n == r.n);
  CHECK(back.replica == r.replica);
  CHECK(back.z_real == r.z_real);
  CHECK(back.z_imag == r.z_imag);
  CHECK(back.statistic == r.statistic);
  CHECK(back.value == r.value);
  CHECK(back.seed == r.seed);
  CHECK(format_row(back) == line);
  CHECK_THROWS_AS(parse_row("a,b,c"), Error);

  const auto dir = scratch("csv");
  write_csv(dir / "x.csv", {r, r});
  const auto text = slurp(dir / "x.csv");
  CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(read_csv(dir / "x.csv").size() == 2);
  std::ofstream(dir / "bad.csv") << "no,header\n";
  CHECK_THROWS_AS(read_csv(dir / "bad.csv"), Error);
}

TEST_CASE("vacuous domination run") {
  const auto dir = scratch("empty");
  auto cfg = make_config("domination", 1, {{"replicas", "0"}, {"N_grid", "32,64"}});
  RunOptions opt;
  opt.output_dir = dir;
  const auto m = run(cfg, opt);
  CHECK(m.cells_computed == 0);
  CHECK(m.seeds.empty());
  CHECK(m.validate());
  CHECK(slurp(dir / "domination.csv") == std::string(kCsvHeader) + "\n");
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(slurp(dir / "manifest.json").find("\"config_hash\"") != std::string::npos);
}

TEST_CASE("runs are deterministic across repeats and worker counts") {
  const auto cfg = make_config("domination", 11, {{"replicas", "6"}, {"N_grid", "16,32"}, {"e_points", "4"}});
  std::vector<std::string> sums;
  for (unsigned workers : {1u, 3u, 1u}) {
    const auto dir = scratch("det" + std::to_string(sums.size()));
    RunOptions opt;
    opt.output_dir = dir;
    opt.workers = workers;
    const auto m = run(cfg, opt);
    CHECK(m.workers == workers);
    sums.push_back(checksum_file(dir / "domination.csv") + checksum_file(dir / "domination_summary.csv"));
  }
  CHECK(sums[0] == sums[1]);
  CHECK(sums[0] == sums[2]);

  const auto other = make_config("domination", 12, {{"replicas", "6"}, {"N_grid", "16,32"}, {"e_points", "4"}});
  RunOptions opt;
  opt.output_dir = scratch("det_other");
  run(other, opt);
  CHECK(checksum_file(*opt.output_dir / "domination.csv") + checksum_file(*opt.output_dir / "domination_summary.csv") != sums[0]);
}

TEST_CASE("resume reproduces an uninterrupted run") {
  const auto cfg = small_decay();
  const auto full_dir = scratch("resume_full");
  RunOptions opt;
  opt.output_dir = full_dir;
  run(cfg, opt);

  const auto dir = scratch("resume_cut");
  opt.output_dir = dir;
  run(cfg, opt);
  // Keep the header and two cells of the journal, and leave a torn CSV row behind.
  std::istringstream journal(slurp(dir / "decay_correlations.journal"));
  std::string line, kept;
  for (int k = 0; k < 3 && std::getline(journal, line); ++k) kept += line + "\n";
  std::ofstream(dir / "decay_correlations.journal", std::ios::trunc) << kept;
  std::ofstream(dir / "decay_correlations.csv", std::ios::app) << "decay_correlations,0.5,10";

  opt.resume = true;
  opt.workers = 2;
  const auto m = run(cfg, opt);
  CHECK(m.resumed);
  CHECK(m.cells_skipped == 2);
  CHECK(m.cells_computed == 2);
  CHECK(slurp(dir / "decay_correlations.csv") == slurp(full_dir / "decay_correlations.csv"));
  CHECK(slurp(dir / "decay_correlations_summary.csv") == slurp(full_dir / "decay_correlations_summary.csv"));

  // A different config ignores the old journal.
  auto changed = cfg;
  changed.set("ells", "2");
  const auto m2 = run(changed, opt);
  CHECK(m2.cells_skipped == 0);
}

TEST_CASE("manifest validation") {
  const auto dir = scratch("manifest");
  RunOptions opt;
  opt.output_dir = dir;
  const auto m = run(small_decay(), opt);
  CHECK(m.validate());
  std::set<std::string> names;
  for (const auto& f : m.files) names.insert(f.name);
  CHECK(names.count("decay_correlations.csv") == 1);
  CHECK(names.count("decay_correlations_summary.csv") == 1);
  CHECK(m.git_describe == git_describe());
  CHECK(m.parameters.at("ells") == "1,2");
  std::ofstream(dir / "decay_correlations_summary.csv", std::ios::app) << "tampered\n";
  CHECK_FALSE(m.validate());
}

TEST_CASE("unwritable output directory") {
  const auto dir = scratch("blocked");
  std::ofstream(dir / "file") << "x";
  RunOptions opt;
  opt.output_dir = dir / "file" / "sub";
  CHECK(kind_of([&] { run(small_decay(), opt); }) == ErrorKind::IoError);
  CHECK(kind_of([&] { emit_svg(dir / "file" / "x.svg", {}, false); }) == ErrorKind::IoError);
}

TEST_CASE("SVG output") {
  const auto empty = render_svg({}, false);
  CHECK(empty.find("<svg") != std::string::npos);
  CHECK(empty.find("<line") != std::string::npos);
  CHECK(empty.find("<polyline") == std::string::npos);

  Curve flat{"flat", {0, 1, 2, 3}, {0.5, 0.5, 0.5, 0.5}, ""};
  const auto svg = render_svg({flat}, false);
  const std::regex poly("<polyline[^>]*points=\"([^\"]*)\"");
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, poly));
  std::istringstream pts(m[1].str());
  std::string pt;
  std::set<std::string> ys;
  int count = 0;
  while (pts >> pt) {
    ys.insert(pt.substr(pt.find(',') + 1));
    ++count;
  }
  CHECK(count == 4);
  CHECK(ys.size() == 1);

  const auto ref = render_svg({}, true, "a < b");
  CHECK(ref.find("#d62728") != std::string::npos);
  CHECK(ref.find("a &lt; b") != std::string::npos);

  std::vector<Row> rows;
  for (int k = 0; k < 3; ++k) rows.push_back({"x", 0, 10, 0, k * 1.0, 0.1, "a", k * 2.0, 0});
  rows.push_back({"x", 0, 10, 0, 0.0, 0.2, "a", 1.0, 0});
  const auto curves = curves_from_rows(rows);
  REQUIRE(curves.size() == 2);
  CHECK(curves[0].x.size() == 3);
}

TEST_CASE("figure1 with defaults") {
  const auto dir = scratch("figure1");
  RunOptions opt;
  opt.output_dir = dir;
  const auto m = run(make_config("figure1", 0), opt);
  for (const char* name : {"figure1_eta0.1.csv", "figure1_eta0.01.csv", "figure1_eta0.1.svg", "figure1_eta0.01.svg"}) {
    CHECK(fs::exists(dir / name));
  }
  const auto svg = slurp(dir / "figure1_eta0.01.svg");
  CHECK(svg.find("#d62728") != std::string::npos);
  CHECK(svg.find("semicircle density") != std::string::npos);
  const auto curve = read_csv(dir / "figure1_eta0.1.csv");
  std::set<std::string> stats;
  for (const auto& r : curve) stats.insert(r.statistic);
  CHECK(stats == std::set<std::string>{"semicircle_density", "smoothed_density"});
  CHECK(m.validate());
  plot_csv(dir / "figure1_eta0.1.csv", dir / "replot.svg");
  CHECK(slurp(dir / "replot.svg").find("<polyline") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorKind::ConfigError) == 1);
  CHECK(exit_code(ErrorKind::IoError) == 1);
  CHECK(exit_code(ErrorKind::NumericalFailure) == 2);
  CHECK(kExitAssertion == 3);
  CHECK(kind_of([] { run_suite("nosuch"); }) == ErrorKind::ConfigError);
}

TEST_CASE("output root") {
  ::setenv("CWSC_OUTPUT_DIR", "/tmp/cwsc_root_probe", 1);
  CHECK(default_output_root() == fs::path("/tmp/cwsc_root_probe"));
  ::unsetenv("CWSC_OUTPUT_DIR");
  CHECK(default_output_root() == fs::current_path() / "cwsc_output");
}
