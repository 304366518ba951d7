// Acceptance run: one PASS/FAIL line per criterion, details indented below it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cwsc/harness.hpp"
#include "cwsc/locallaw.hpp"
#include "cwsc/mixing.hpp"
#include "cwsc/parallel.hpp"

namespace h = cwsc::harness;
namespace ll = cwsc::locallaw;
namespace fs = std::filesystem;
using cwsc::ensembles::EnsembleSpec;
using cwsc::ensembles::Variant;

namespace {

struct Outcome {
  bool passed = false;
  std::vector<std::string> details;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Context {
  fs::path workdir;
  unsigned workers = 1;
  std::uint64_t master_seed = 20240601;
  // Spectra keyed by (beta, N); 400 replicas each, shared by criteria 6 to 8.
  std::map<std::pair<double, std::size_t>, std::vector<ll::Spectrum>> spectra;

  const std::vector<ll::Spectrum>& cw_spectra(double beta, std::size_t n) {
    auto key = std::make_pair(beta, n);
    auto it = spectra.find(key);
    if (it == spectra.end()) {
      EnsembleSpec tmpl;
      tmpl.variant = beta == 0.0 ? Variant::rademacher : Variant::curie_weiss;
      tmpl.beta = beta;
      it = spectra.emplace(key, ll::sample_spectra(tmpl, n, kReplicas, master_seed, fmt("acceptance/cw%g", beta), workers))
               .first;
    }
    return it->second;
  }

  static constexpr std::size_t kReplicas = 400;
};

// ---------------------------------------------------------------- 1, 3, 4

Outcome from_suite(const std::string& suite) {
  Outcome o{true, {}};
  for (const auto& r : h::run_suite(suite)) {
    o.passed = o.passed && r.passed;
    o.details.push_back(fmt("%s %s: %s", r.passed ? "ok  " : "FAIL", r.name.c_str(), r.detail.c_str()));
  }
  return o;
}

// ---------------------------------------------------------------- 2

Outcome correlation_decay(Context&) {
  using cwsc::mixing::InverseTemperature;
  Outcome o{true, {}};
  const std::vector<double> ns{1e3, 1e4, 1e5};
  const std::vector<std::pair<double, double>> expected{{0.5, -1.0}, {1.0, -0.5}};
  for (auto [beta, slope] : expected) {
    std::vector<double> v;
    for (double n : ns) v.push_back(cwsc::mixing::correlation_exact(InverseTemperature(beta), static_cast<std::uint64_t>(n), 2));
    const auto fit = ll::loglog_fit(ns, v);
    const bool ok = std::abs(fit.slope - slope) <= 0.1;
    o.passed = o.passed && ok;
    o.details.push_back(fmt("beta=%g: fitted exponent %.4f (target %g +- 0.1)", beta, fit.slope, slope));
  }
  const double c = cwsc::mixing::solve_spontaneous_magnetization(InverseTemperature(1.5));
  const double corr = cwsc::mixing::correlation_exact(InverseTemperature(1.5), 100000, 2);
  const double rel = std::abs(corr / (c * c) - 1.0);
  o.passed = o.passed && rel < 0.05;
  o.details.push_back(fmt("beta=1.5, n=1e5: E[Y1Y2]=%.6f, c^2=%.6f, relative error %.2e", corr, c * c, rel));
  double odd = 0.0;
  for (double beta : {0.5, 1.0, 1.5})
    for (double n : ns)
      for (int ell : {1, 3, 5}) {
        odd = std::max(odd, std::abs(cwsc::mixing::correlation_exact(InverseTemperature(beta), static_cast<std::uint64_t>(n), ell)));
      }
  o.passed = o.passed && odd < 1e-12;
  o.details.push_back(fmt("max |odd-ell correlation| = %.2e", odd));
  return o;
}

// ---------------------------------------------------------------- 5

std::vector<h::Row> summary_rows(const h::ResultManifest& m) {
  return h::read_csv(m.output_dir / (m.experiment + "_summary.csv"));
}

double summary_value(const std::vector<h::Row>& rows, const std::string& stat, std::size_t n = 0) {
  for (const auto& r : rows)
    if (r.statistic == stat && r.n == n) return r.value;
  return std::nan("");
}

Outcome rank_perturbation(Context& ctx) {
  auto cfg = h::make_config("perturbation", ctx.master_seed);
  h::RunOptions opt;
  opt.output_dir = ctx.workdir / "perturbation";
  opt.workers = ctx.workers;
  const auto m = h::run(cfg, opt);
  const auto rows = summary_rows(m);
  const double trials = summary_value(rows, "trials");
  const double violations = summary_value(rows, "total_violations");
  const double pair = summary_value(rows, "total_pair_violations");
  double worst = 0.0;
  for (const auto& r : rows)
    if (r.statistic == "max_gap_over_bound") worst = std::max(worst, r.value);
  Outcome o;
  o.passed = trials >= 1000 && violations == 0.0 && pair == 0.0;
  o.details.push_back(fmt("%g randomized trials, %g violations of gap <= 2k/eta, max gap/bound %.3f", trials, violations, worst));
  o.details.push_back(fmt("supercritical rank-one pairs: %g violations", pair));
  return o;
}

// ---------------------------------------------------------------- 6, 7

const std::vector<std::size_t> kLocalLawN{64, 128, 256, 512, 1024};

ll::DominationConfig local_law_config(const Context& ctx) {
  ll::DominationConfig cfg;
  cfg.epsilons = {0.2};
  cfg.n_grid = kLocalLawN;
  cfg.replicas = Context::kReplicas;
  cfg.tau = 0.5;
  cfg.domain = ll::DomainKind::bulk;
  cfg.grid = {24, 1};
  cfg.statistic = ll::Statistic::s_minus_m;
  cfg.error_term = ll::ErrorTermKind::psi1;
  cfg.master_seed = ctx.master_seed;
  cfg.workers = ctx.workers;
  return cfg;
}

bool local_law_suite(const ll::DominationReport& report, const std::string& label, Outcome& o) {
  std::string freqs, meds;
  for (const auto& c : report.cells) {
    freqs += fmt(" %zu:%.4f", c.n, c.max_tail_frequency[0]);
    meds += fmt(" %zu:%.4f", c.n, c.median_scaled);
  }
  const bool tail = report.tail_non_increasing(0);
  const bool zero = report.cells.back().max_tail_frequency[0] == 0.0;
  const bool med = report.median_non_increasing();
  o.details.push_back(fmt("%s max tail frequency (eps=0.2):%s", label.c_str(), freqs.c_str()));
  o.details.push_back(fmt("%s median |s-m| sqrt(N eta):%s", label.c_str(), meds.c_str()));
  o.details.push_back(fmt("%s non-increasing=%s, zero at N=1024=%s, median non-increasing=%s", label.c_str(),
                          tail ? "yes" : "no", zero ? "yes" : "no", med ? "yes" : "no"));
  return tail && zero && med;
}

Outcome weak_local_law(Context& ctx) {
  Outcome o{true, {}};
  for (double beta : {0.0, 1.0}) {
    auto cfg = local_law_config(ctx);
    const auto report = ll::domination_experiment(cfg, [&](std::size_t n) { return ctx.cw_spectra(beta, n); });
    o.passed = local_law_suite(report, fmt("beta=%g", beta), o) && o.passed;
  }
  return o;
}

Outcome supercritical(Context& ctx) {
  Outcome o{true, {}};
  const double c = cwsc::mixing::solve_spontaneous_magnetization(cwsc::mixing::InverseTemperature(1.5));
  const double factor = 1.0 / std::sqrt(1.0 - c * c);

  auto positive = local_law_config(ctx);
  const auto rescaled = ll::domination_experiment(positive, [&](std::size_t n) {
    std::vector<ll::Spectrum> out;
    for (const auto& s : ctx.cw_spectra(1.5, n)) out.push_back(s.scaled(factor));
    return out;
  });
  const bool pos = local_law_suite(rescaled, "rescaled beta=1.5", o);

  auto negative = local_law_config(ctx);
  negative.points = {{0.0, 1.0}};
  const auto raw = ll::domination_experiment(negative, [&](std::size_t n) { return ctx.cw_spectra(1.5, n); });
  bool neg = true;
  std::string freqs;
  for (const auto& cell : raw.cells) {
    neg = neg && cell.tail_frequency[0][0] >= 0.9;
    freqs += fmt(" %zu:%.4f", cell.n, cell.tail_frequency[0][0]);
  }
  o.details.push_back(fmt("unrescaled beta=1.5 at z=i, tail frequency:%s (control needs >= 0.9 everywhere)", freqs.c_str()));
  o.passed = pos && neg;
  o.details.push_back(fmt("positive control %s, negative control %s", pos ? "passes" : "FAILS", neg ? "fails as required" : "does NOT fail"));
  return o;
}

// ---------------------------------------------------------------- 8

Outcome interval_laws(Context& ctx) {
  Outcome o{true, {}};
  const std::vector<std::size_t> ns{128, 256, 512, 1024};
  const double tau = 0.5;
  for (double beta : {0.0, 1.0}) {
    std::vector<double> x, bulk, global;
    for (std::size_t n : ns) {
      std::vector<double> b, g;
      for (const auto& s : ctx.cw_spectra(beta, n)) {
        b.push_back(ll::interval_sup_bulk(s, tau).sup_deviation);
        g.push_back(ll::interval_sup(s).sup_deviation);
      }
      x.push_back(static_cast<double>(n));
      bulk.push_back(ll::median(b));
      global.push_back(ll::median(g));
    }
    const double sb = ll::decay_slope(x, bulk).slope;
    const double sg = ll::decay_slope(x, global).slope;
    const bool ok_b = sb >= -0.65 && sb <= -0.35;
    const bool ok_g = sg >= -0.55 && sg <= -0.15;
    o.passed = o.passed && ok_b && ok_g;
    o.details.push_back(fmt("beta=%g, %zu replicas: bulk slope %.3f (band [-0.65,-0.35] %s), global slope %.3f (band [-0.55,-0.15] %s)",
                            beta, Context::kReplicas, sb, ok_b ? "in" : "OUT", sg, ok_g ? "in" : "OUT"));
    std::string med;
    for (std::size_t k = 0; k < ns.size(); ++k) med += fmt(" %zu:%.5f/%.5f", ns[k], bulk[k], global[k]);
    o.details.push_back(fmt("beta=%g medians bulk/global:%s", beta, med.c_str()));
  }
  return o;
}

// ---------------------------------------------------------------- 9

Outcome figure1(Context& ctx) {
  h::RunOptions opt;
  opt.output_dir = ctx.workdir / "figure1";
  opt.workers = ctx.workers;
  const auto m = h::run(h::make_config("figure1", ctx.master_seed), opt);
  const auto rows = summary_rows(m);
  double worse = std::nan(""), total = 0.0;
  for (const auto& r : rows)
    if (r.statistic == "smallest_eta_worse_count") worse = r.value;
  std::set<double> reps;
  for (const auto& r : h::read_csv(m.output_dir / "figure1.csv")) reps.insert(static_cast<double>(r.replica));
  total = static_cast<double>(reps.size());
  const bool svgs = fs::exists(*opt.output_dir / "figure1_eta0.1.svg") && fs::exists(*opt.output_dir / "figure1_eta0.01.svg");
  Outcome o;
  o.passed = worse >= 90.0 && total == 100.0 && svgs;
  o.details.push_back(fmt("kernel distance at eta=0.01 exceeds eta=0.1 in %g of %g replicas (need >= 90)", worse, total));
  o.details.push_back(fmt("SVGs %s in %s (visual comparison is manual)", svgs ? "written" : "MISSING",
                          opt.output_dir->string().c_str()));
  return o;
}

// ---------------------------------------------------------------- 10

const std::map<std::string, std::map<std::string, std::string>> kSmallRuns{
    {"figure1", {{"replicas", "6"}, {"N", "40"}}},
    {"decay_correlations", {{"n_grid", "100,1000"}}},
    {"domination", {{"replicas", "8"}, {"N_grid", "16,32"}, {"e_points", "5"}}},
    {"simultaneous", {{"replicas", "4"}, {"N_grid", "16,24"}, {"lattice_exponent", "2"}, {"e_points", "4"}, {"eta_points", "3"}}},
    {"intervals", {{"replicas", "8"}, {"N_grid", "16,32,48,64"}}},
    {"kernel", {{"replicas", "5"}, {"N_grid", "16,32,48,64"}}},
    {"ldp", {{"replicas", "5"}, {"N_grid", "16,24"}, {"bilinear_replicas", "5"}}},
    {"perturbation", {{"trials", "10"}, {"N_grid", "8,16"}}},
    {"cwtype_check", {{"n_grid", "100,1000"}}},
};

Outcome determinism(Context& ctx) {
  Outcome o{true, {}};
  for (const auto& id : h::experiment_ids()) {
    const auto it = kSmallRuns.find(id);
    const auto cfg = h::make_config(id, ctx.master_seed, it == kSmallRuns.end() ? std::map<std::string, std::string>{} : it->second);
    std::vector<std::map<std::string, std::string>> sums;
    for (unsigned workers : {1u, 3u, 1u}) {
      h::RunOptions opt;
      opt.output_dir = ctx.workdir / "determinism" / fmt("%s_%zu", id.c_str(), sums.size());
      fs::remove_all(*opt.output_dir);
      opt.workers = workers;
      const auto m = h::run(cfg, opt);
      std::map<std::string, std::string> s;
      for (const auto& f : m.files)
        if (f.name.ends_with(".csv")) s[f.name] = f.checksum;
      sums.push_back(s);
    }
    const bool same = !sums[0].empty() && sums[0] == sums[1] && sums[0] == sums[2];
    o.passed = o.passed && same;
    o.details.push_back(fmt("%-20s %zu CSVs, workers 1/3/1 checksums %s", id.c_str(), sums[0].size(), same ? "identical" : "DIFFER"));
  }
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome(Context&)> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string workdir = "cwsc_acceptance";
  std::vector<int> known, only;
  Context ctx;
  ctx.workers = cwsc::default_workers();
  app.add_option("--workdir", workdir, "scratch directory for experiment output");
  app.add_option("--known-failure", known, "criteria whose failure is recorded and does not set the exit code");
  app.add_option("--only", only, "run only these criteria");
  app.add_option("--workers", ctx.workers, "worker threads");
  CLI11_PARSE(app, argc, argv);
  ctx.workdir = workdir;
  fs::create_directories(ctx.workdir);

  const std::vector<Criterion> criteria{
      {1, "de Finetti oracle equivalence", 10, [](Context&) { return from_suite("mixing"); }},
      {2, "correlation decay rates", 30, correlation_decay},
      {3, "deterministic inequality suites", 30, [](Context&) { return from_suite("inequalities"); }},
      {4, "Schur identity", 60, [](Context&) { return from_suite("schur"); }},
      {5, "rank-k perturbation", 60, rank_perturbation},
      {6, "weak local law decay", 900, weak_local_law},
      {7, "supercritical extension", 900, supercritical},
      {8, "interval laws", 900, interval_laws},
      {9, "smoothed density figure", 120, figure1},
      {10, "determinism across worker counts", 0, determinism},
  };

  std::ofstream report(ctx.workdir / "report.txt");
  auto emit = [&](const char* fmt, auto... args) {
    char buf[1024];
    std::snprintf(buf, sizeof buf, fmt, args...);
    std::fputs(buf, stdout);
    report << buf << std::flush;
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check(ctx);
    } catch (const std::exception& e) {
      o.passed = false;
      o.details.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_seconds == 0 || secs <= c.budget_seconds;
    const bool passed = o.passed && in_time;
    const bool is_known = std::find(known.begin(), known.end(), c.id) != known.end();
    std::string note;
    if (!passed && is_known) note = " (recorded known failure)";
    if (passed && is_known) note = " (listed as known failure but passed)";
    if (c.budget_seconds > 0)
      emit("%s %2d %s [%.1f s, budget %.0f s]%s\n", passed ? "PASS" : "FAIL", c.id, c.title, secs, c.budget_seconds,
                  note.c_str());
    else
      emit("%s %2d %s [%.1f s]%s\n", passed ? "PASS" : "FAIL", c.id, c.title, secs, note.c_str());
    for (const auto& d : o.details) emit("       %s\n", d.c_str());
    if (!in_time) emit("%s\n", "       runtime above budget");
    std::fflush(stdout);
    if (!passed && !is_known) ++unexpected;
  }
  return unexpected == 0 ? 0 : h::kExitAssertion;
}
