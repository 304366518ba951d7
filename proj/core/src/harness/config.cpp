#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cwsc/harness.hpp"
#include "cwsc/rng.hpp"

namespace cwsc::harness {

namespace {

using P = ParamType;

ParamSpec real(std::string key, std::string def, double lo, double hi, std::string help) {
  return {std::move(key), P::real, std::move(def), lo, hi, {}, std::move(help)};
}
ParamSpec integer(std::string key, std::string def, double lo, double hi, std::string help) {
  return {std::move(key), P::integer, std::move(def), lo, hi, {}, std::move(help)};
}
ParamSpec reals(std::string key, std::string def, double lo, double hi, std::string help) {
  return {std::move(key), P::real_list, std::move(def), lo, hi, {}, std::move(help)};
}
ParamSpec integers(std::string key, std::string def, double lo, double hi, std::string help) {
  return {std::move(key), P::integer_list, std::move(def), lo, hi, {}, std::move(help)};
}
ParamSpec choice(std::string key, std::string def, std::vector<std::string> choices, std::string help) {
  return {std::move(key), P::text, std::move(def), 0, 0, std::move(choices), std::move(help)};
}

constexpr double kMaxN = 4096;
constexpr double kMaxReplicas = 1e6;

ParamSpec variant(std::string def) {
  return choice("variant", std::move(def), {"curie_weiss", "rademacher", "perturbed_supercritical"}, "ensemble");
}
ParamSpec beta(std::string def) { return real("beta", std::move(def), 0, 1e3, "inverse temperature"); }
ParamSpec rescale() {
  return choice("rescale", "none", {"none", "supercritical"}, "multiply entries by (1 - c^2)^{-1/2}");
}

const std::map<std::string, std::vector<ParamSpec>>& table() {
  static const std::map<std::string, std::vector<ParamSpec>> t = {
      {"figure1",
       {variant("rademacher"), beta("0"), integer("N", "100", 2, kMaxN, "dimension"),
        integer("replicas", "100", 0, kMaxReplicas, "replicas"),
        reals("etas", "0.1,0.01", 1e-6, 1e3, "kernel bandwidths"),
        real("tau", "0.25", 1e-3, 0.999, "E-range [-1/tau, 1/tau] of the distance grid"),
        integer("curve_points", "5001", 2, 1e6, "E points of the plotted curves"),
        real("curve_range", "2.5", 1e-3, 1e3, "plotted E-range [-r, r]")}},
      {"decay_correlations",
       {reals("betas", "0.5,1,1.5", 0, 1e3, "inverse temperatures"),
        integers("n_grid", "1000,10000,100000", 1, 1e12, "numbers of spins"),
        integers("ells", "1,2,3,4", 1, 64, "correlation orders")}},
      {"domination",
       {variant("curie_weiss"), beta("0"), rescale(), reals("epsilons", "0.1,0.2,0.4", 0, 10, "exponents"),
        integers("N_grid", "64,128,256,512,1024", 2, kMaxN, "dimensions"),
        integer("replicas", "400", 0, kMaxReplicas, "replicas per N"),
        real("tau", "0.5", 1e-3, 0.999, "domain parameter"),
        choice("domain", "bulk", {"full", "bulk", "encompassing"}, "spectral domain"),
        integer("e_points", "24", 1, 1e5, "E grid size"), integer("eta_points", "1", 1, 1e5, "eta grid size"),
        choice("points", "grid", {}, "'grid' or E:eta pairs separated by ';'"),
        choice("statistic", "s_minus_m", {"s_minus_m", "lambda", "max"}, "deviation statistic"),
        choice("error_term", "psi1", {"psi1", "psi2"}, "error term")}},
      {"simultaneous",
       {variant("rademacher"), beta("0"), rescale(), integers("N_grid", "64,128,256", 2, kMaxN, "dimensions"),
        integer("replicas", "100", 0, kMaxReplicas, "replicas per N"),
        real("tau", "0.5", 1e-3, 0.999, "domain parameter"),
        choice("domain", "bulk", {"full", "bulk", "encompassing"}, "spectral domain"),
        integer("lattice_exponent", "4", 0, 16, "lattice N^{-L}(Z + iZ)"),
        integer("lattice_cap", "100000", 1, 1e7, "maximum net size"),
        choice("error_term", "psi2", {"psi1", "psi2"}, "error term"),
        integer("e_points", "24", 1, 1e5, "pointwise grid E size"),
        integer("eta_points", "16", 1, 1e5, "pointwise grid eta size")}},
      {"intervals",
       {variant("rademacher"), beta("0"), rescale(), integers("N_grid", "128,256,512,1024", 2, kMaxN, "dimensions"),
        integer("replicas", "200", 0, kMaxReplicas, "replicas per N"),
        real("tau_bulk", "0.5", 1e-3, 1.999, "bulk [-2 + tau, 2 - tau]"),
        real("tau_relative", "0.2", 1e-3, 0.499, "relative statistic parameter")}},
      {"kernel",
       {variant("rademacher"), beta("0"), rescale(), integers("N_grid", "100,200,400,800", 2, kMaxN, "dimensions"),
        integer("replicas", "100", 0, kMaxReplicas, "replicas per N"),
        real("tau", "0.5", 1e-3, 0.999, "bandwidth N^{tau - 1}, E-range [-1/tau, 1/tau]")}},
      {"ldp",
       {variant("rademacher"), beta("0"), integers("N_grid", "64,128,256", 2, 256, "dimensions"),
        integer("replicas", "400", 0, kMaxReplicas, "replicas per N"),
        reals("epsilons", "0.25", 0, 10, "exponents"), real("z_real", "0.5", -1e3, 1e3, "Re z"),
        real("z_imag", "0.5", 1e-9, 1e3, "Im z"), integer("p", "2", 2, 64, "even moment order"),
        choice("form", "offdiag", {"linear", "bilinear", "offdiag", "full"}, "bilinear experiment form"),
        choice("coefficients", "synthetic", {"synthetic", "resolvent"}, "coefficient source"),
        real("a_p", "0", 0, 1e6, "A_p; 0 selects sqrt(p)"), real("mu_p", "2", 0, 1e6, "mu_p"),
        integer("bilinear_replicas", "200", 0, kMaxReplicas, "replicas of the bilinear experiment"),
        real("fixed_t", "2", -1, 2, "fixed mixing value in (-1, 1); values >= 1 sample t")}},
      {"perturbation",
       {beta("1"), integers("N_grid", "16,32,64,128,256", 2, kMaxN, "dimensions"),
        integer("trials", "200", 0, kMaxReplicas, "trials per N"),
        integers("ks", "1,2,3", 0, 64, "perturbation ranks, cycled over trials"),
        real("eta_min", "0.1", 1e-9, 1e6, "smallest eta"), real("eta_max", "10", 1e-9, 1e6, "largest eta"),
        real("e_range", "3", 0, 1e3, "E uniform in [-e_range, e_range]"),
        real("scale", "1", 0, 1e6, "size of the low-rank coefficients"),
        real("supercritical_beta", "1.5", 0, 1e3, "beta of the perturbed pair check; <= 1 disables it")}},
      {"cwtype_check",
       {choice("kernel", "plain", {"plain", "perturbed"}, "spin kernel"), beta("1"),
        integers("n_grid", "100,1000,10000", 1, 1e7, "matrix dimensions N (mixing over N^2 spins)"),
        integers("ps", "2,4", 1, 64, "moment orders"),
        integer("t_grid_points", "2001", 3, 1e6, "t grid of the central suprema")}},
  };
  return t;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(ErrorKind::ConfigError, "parameter '" + key + "': '" + s + "' is not a real number");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    fail(ErrorKind::ConfigError, "parameter '" + key + "': '" + s + "' is not an integer");
  }
  return v;
}

void check_range(const ParamSpec& spec, double v, const std::string& shown) {
  if (v < spec.min || v > spec.max) {
    fail(ErrorKind::ConfigError, "parameter '" + spec.key + "' = " + shown + " outside [" + format_real(spec.min) +
                                     ", " + format_real(spec.max) + "]");
  }
}

// Validates and returns the canonical text of a value.
std::string canonical_value(const ParamSpec& spec, const std::string& raw) {
  const std::string value = trim(raw);
  switch (spec.type) {
    case P::real: {
      const double v = parse_real(spec.key, value);
      check_range(spec, v, value);
      return format_real(v);
    }
    case P::integer: {
      const long long v = parse_integer(spec.key, value);
      check_range(spec, static_cast<double>(v), value);
      return std::to_string(v);
    }
    case P::text: {
      if (!spec.choices.empty() &&
          std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
        std::string allowed;
        for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        fail(ErrorKind::ConfigError, "parameter '" + spec.key + "' = '" + value + "' not one of: " + allowed);
      }
      return value;
    }
    case P::real_list:
    case P::integer_list: {
      const auto items = split(value, ',');
      if (items.empty()) fail(ErrorKind::ConfigError, "parameter '" + spec.key + "' needs at least one value");
      std::string out;
      for (const auto& item : items) {
        ParamSpec scalar = spec;
        scalar.type = spec.type == P::real_list ? P::real : P::integer;
        out += (out.empty() ? "" : ",") + canonical_value(scalar, item);
      }
      return out;
    }
  }
  return value;
}

const ParamSpec& find_spec(const std::string& experiment, const std::string& key) {
  for (const auto& spec : parameters(experiment)) {
    if (spec.key == key) return spec;
  }
  fail(ErrorKind::ConfigError, "experiment '" + experiment + "' has no parameter '" + key + "'");
}

std::uint64_t parse_seed(const std::string& raw) {
  const std::string s = trim(raw);
  std::uint64_t v = 0;
  const bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
  const char* begin = s.data() + (hex ? 2 : 0);
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v, hex ? 16 : 10);
  if (begin == end || ec != std::errc() || ptr != end) {
    fail(ErrorKind::ConfigError, "master_seed '" + s + "' is not a 64-bit unsigned integer");
  }
  return v;
}

}  // namespace

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {"figure1", "decay_correlations", "domination",
                                               "simultaneous", "intervals", "kernel",
                                               "ldp", "perturbation", "cwtype_check"};
  return ids;
}

const std::vector<ParamSpec>& parameters(const std::string& experiment) {
  const auto& t = table();
  const auto it = t.find(experiment);
  if (it == t.end()) fail(ErrorKind::ConfigError, "unknown experiment '" + experiment + "'");
  return it->second;
}

double ExperimentConfig::real(const std::string& key) const { return parse_real(key, values_.at(key)); }

long long ExperimentConfig::integer(const std::string& key) const { return parse_integer(key, values_.at(key)); }

std::size_t ExperimentConfig::size(const std::string& key) const { return static_cast<std::size_t>(integer(key)); }

const std::string& ExperimentConfig::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::ConfigError, "missing parameter '" + key + "'");
  return it->second;
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(text(key), ',')) out.push_back(parse_real(key, item));
  return out;
}

std::vector<std::size_t> ExperimentConfig::sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : split(text(key), ',')) out.push_back(static_cast<std::size_t>(parse_integer(key, item)));
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  values_[key] = canonical_value(find_spec(experiment, key), value);
}

std::string ExperimentConfig::canonical() const {
  std::string out = "experiment=" + experiment + "\nmaster_seed=" + std::to_string(master_seed) + "\n";
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

ExperimentConfig make_config(const std::string& experiment, std::uint64_t master_seed,
                             const std::map<std::string, std::string>& overrides) {
  ExperimentConfig config;
  config.experiment = experiment;
  config.master_seed = master_seed;
  for (const auto& spec : parameters(experiment)) config.values_[spec.key] = canonical_value(spec, spec.default_value);
  for (const auto& [k, v] : overrides) config.set(k, v);
  return config;
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) fail(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": empty key");
    if (!entries.emplace(key, value).second) fail(ErrorKind::ConfigError, "duplicate key '" + key + "'");
  }
  const auto exp = entries.find("experiment");
  if (exp == entries.end()) fail(ErrorKind::ConfigError, "config has no 'experiment' key");
  std::uint64_t seed = 0;
  if (const auto it = entries.find("master_seed"); it != entries.end()) seed = parse_seed(it->second);
  std::map<std::string, std::string> overrides;
  std::optional<fs::path> out_dir;
  for (const auto& [k, v] : entries) {
    if (k == "experiment" || k == "master_seed") continue;
    if (k == "output_dir") {
      if (v.empty()) fail(ErrorKind::ConfigError, "output_dir is empty");
      out_dir = v;
      continue;
    }
    overrides.emplace(k, v);
  }
  ExperimentConfig config = make_config(exp->second, seed, overrides);
  config.output_dir = out_dir;
  return config;
}

ExperimentConfig load_config(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read config '" + file.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace cwsc::harness
