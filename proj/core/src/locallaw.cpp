#include "cwsc/locallaw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cwsc/parallel.hpp"

namespace cwsc::locallaw {

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::full: return "full";
    case DomainKind::bulk: return "bulk";
    case DomainKind::encompassing: return "encompassing";
  }
  return "unknown";
}

DomainKind parse_domain(const std::string& name) {
  if (name == "full") return DomainKind::full;
  if (name == "bulk") return DomainKind::bulk;
  if (name == "encompassing") return DomainKind::encompassing;
  fail(ErrorKind::ConfigError, "unknown domain '" + name + "'");
}

Domain::Domain(double tau, std::size_t n, DomainKind kind, std::optional<int> lattice_exponent)
    : tau_(tau), n_(n), kind_(kind), lattice_(lattice_exponent) {
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorKind::DomainError, "tau must lie in (0, 1)");
  if (n == 0) fail(ErrorKind::DomainError, "domain needs N >= 1");
  if (lattice_ && *lattice_ < 0) fail(ErrorKind::DomainError, "lattice exponent must be >= 0");
  if (kind == DomainKind::bulk && tau >= 2.0) fail(ErrorKind::DomainError, "bulk needs tau < 2");
  const double nd = static_cast<double>(n);
  const double e_max = kind == DomainKind::bulk ? 2.0 - tau : 1.0 / tau;
  e_ = {-e_max, e_max};
  const double eta_min = kind == DomainKind::encompassing ? 1.0 / nd : std::pow(nd, tau - 1.0);
  eta_ = {eta_min, 1.0 / tau};
}

bool Domain::contains(Complex z) const noexcept {
  const bool inside = z.real() >= e_.lo && z.real() <= e_.hi && z.imag() >= eta_.lo && z.imag() <= eta_.hi;
  if (!inside || !lattice_) return inside;
  const double h = std::pow(static_cast<double>(n_), -*lattice_);
  auto on_lattice = [h](double x) { return std::abs(x / h - std::round(x / h)) < 1e-9; };
  return on_lattice(z.real()) && on_lattice(z.imag());
}

std::vector<SpectralPoint> Domain::grid(GridSpec spec) const {
  std::vector<SpectralPoint> points;
  if (spec.e_points == 0 || spec.eta_points == 0) return points;
  points.reserve(spec.e_points * spec.eta_points);
  for (std::size_t j = 0; j < spec.eta_points; ++j) {
    double eta = eta_.lo;
    if (spec.eta_points > 1) {
      const double f = static_cast<double>(j) / static_cast<double>(spec.eta_points - 1);
      eta = eta_.lo * std::pow(eta_.hi / eta_.lo, f);
    }
    for (std::size_t i = 0; i < spec.e_points; ++i) {
      double e = 0.5 * (e_.lo + e_.hi);
      if (spec.e_points > 1) {
        e = e_.lo + (e_.hi - e_.lo) * static_cast<double>(i) / static_cast<double>(spec.e_points - 1);
      }
      points.emplace_back(e, eta);
    }
  }
  return points;
}

double Domain::lattice_spacing() const {
  if (!lattice_) fail(ErrorKind::ConfigError, "domain has no lattice exponent");
  return std::pow(static_cast<double>(n_), -*lattice_);
}

namespace {

struct LatticeAxis {
  std::int64_t first = 0;
  double count = 0.0;
};

// Lattice indices k with lo <= k h <= hi.
LatticeAxis lattice_axis(Range r, double h) {
  const double first = std::ceil(r.lo / h - 1e-9);
  const double last = std::floor(r.hi / h + 1e-9);
  return {static_cast<std::int64_t>(first), std::max(0.0, last - first + 1.0)};
}

}  // namespace

double Domain::lattice_count() const {
  const double h = lattice_spacing();
  return lattice_axis(e_, h).count * lattice_axis(eta_, h).count;
}

LatticeNet lattice_net(const Domain& domain, std::size_t cap) {
  if (cap == 0) fail(ErrorKind::ConfigError, "lattice cap must be positive");
  LatticeNet net;
  net.spacing = domain.lattice_spacing();
  const double h = net.spacing;
  const LatticeAxis ex = lattice_axis(domain.e_range(), h);
  const LatticeAxis ey = lattice_axis(domain.eta_range(), h);
  if (ex.count == 0.0 || ey.count == 0.0) return net;

  double stride = 1.0;
  auto fits = [&](double s) { return std::ceil(ex.count / s) * std::ceil(ey.count / s) <= static_cast<double>(cap); };
  if (!fits(1.0)) {
    stride = std::ceil(std::sqrt(ex.count * ey.count / static_cast<double>(cap)));
    while (!fits(stride)) stride += 1.0;
  }
  net.stride = static_cast<std::size_t>(stride);
  const auto nx = static_cast<std::size_t>(std::ceil(ex.count / stride));
  const auto ny = static_cast<std::size_t>(std::ceil(ey.count / stride));
  net.points.reserve(nx * ny);
  const double step = stride * h;
  for (std::size_t j = 0; j < ny; ++j) {
    const double eta = (static_cast<double>(ey.first) + static_cast<double>(j) * stride) * h;
    for (std::size_t i = 0; i < nx; ++i) {
      const double e = (static_cast<double>(ex.first) + static_cast<double>(i) * stride) * h;
      net.points.emplace_back(e, eta);
    }
  }
  // Per axis: half the line gap inside, the full overhang at the two ends.
  auto axis_radius = [&](Range r, const LatticeAxis& a, std::size_t count) {
    const double first = static_cast<double>(a.first) * h;
    const double last = first + static_cast<double>(count - 1) * step;
    return std::max({first - r.lo, r.hi - last, count > 1 ? 0.5 * step : 0.0});
  };
  const double rx = axis_radius(domain.e_range(), ex, nx);
  const double ry = axis_radius(domain.eta_range(), ey, ny);
  net.covering_radius = std::hypot(rx, ry);
  return net;
}

std::string to_string(ErrorTermKind kind) { return kind == ErrorTermKind::psi1 ? "psi1" : "psi2"; }

ErrorTermKind parse_error_term(const std::string& name) {
  if (name == "psi1") return ErrorTermKind::psi1;
  if (name == "psi2") return ErrorTermKind::psi2;
  fail(ErrorKind::ConfigError, "unknown error term '" + name + "'");
}

double error_term(ErrorTermKind kind, const SpectralPoint& z, std::size_t n) {
  const double a = 1.0 / std::sqrt(static_cast<double>(n) * z.eta());
  if (kind == ErrorTermKind::psi2) return a;
  return a / std::sqrt(z.kappa() + z.eta() + a);
}

double s_minus_m(std::span<const double> eigenvalues, Complex z) {
  return std::abs(spectral::empirical_stieltjes(eigenvalues, z) - spectral::semicircle_stieltjes(z));
}

double s_minus_m(const Spectrum& spectrum, const SpectralPoint& z) { return s_minus_m(spectrum.eigenvalues(), z.z()); }

double LambdaStat::require_lambda() const {
  if (!lambda) fail(ErrorKind::ScaleExceeded, "Lambda needs the full resolvent, above the dimension cap");
  return *lambda;
}

LambdaStat lambda_stat(const spectral::ComplexMatrix& g, const SpectralPoint& z) {
  const std::size_t n = g.dimension();
  const Complex m = spectral::semicircle_stieltjes(z);
  double off = 0.0;
  double diag = 0.0;
  Complex trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        diag = std::max(diag, std::abs(g(i, i) - m));
        trace += g(i, i);
      } else {
        off = std::max(off, std::abs(g(i, j)));
      }
    }
  }
  LambdaStat out;
  out.lambda = std::max(off, diag);
  out.lambda_star = off;
  out.max_diagonal = diag;
  out.s_minus_m = std::abs(trace / static_cast<double>(n) - m);
  return out;
}

LambdaStat lambda_stat(const SymmetricMatrix& matrix, const SpectralPoint& z) {
  if (matrix.dimension() > spectral::kResolventMaxDimension) {
    LambdaStat out;
    out.s_minus_m = s_minus_m(spectral::eigenvalues(matrix), z);
    return out;
  }
  return lambda_stat(spectral::resolvent(matrix, z.z()), z);
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::lambda: return "lambda";
    case Statistic::s_minus_m: return "s_minus_m";
    case Statistic::max: return "max";
  }
  return "unknown";
}

Statistic parse_statistic(const std::string& name) {
  if (name == "lambda") return Statistic::lambda;
  if (name == "s_minus_m") return Statistic::s_minus_m;
  if (name == "max") return Statistic::max;
  fail(ErrorKind::ConfigError, "unknown statistic '" + name + "'");
}

std::uint64_t replica_seed(std::uint64_t master_seed, const std::string& experiment, std::size_t n,
                           std::size_t replica) {
  return derive_seed(master_seed, experiment, n, replica);
}

SymmetricMatrix build_replica(const ensembles::EnsembleSpec& tmpl, std::size_t n, std::uint64_t seed) {
  ensembles::EnsembleSpec spec = tmpl;
  spec.dimension = n;
  spec.seed = seed;
  if (spec.variant == ensembles::Variant::perturbed_supercritical) return ensembles::build_perturbed(spec);
  return ensembles::build(spec);
}

std::vector<Spectrum> sample_spectra(const ensembles::EnsembleSpec& tmpl, std::size_t n, std::size_t replicas,
                                     std::uint64_t master_seed, const std::string& experiment, unsigned workers) {
  std::vector<Spectrum> out(replicas);
  parallel_for(replicas, workers, [&](std::size_t r) {
    out[r] = spectral::eigenvalues(build_replica(tmpl, n, replica_seed(master_seed, experiment, n, r)));
  });
  return out;
}

bool DominationReport::tail_non_increasing(std::size_t k) const {
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (cells[i].max_tail_frequency.at(k) > cells[i - 1].max_tail_frequency.at(k)) return false;
  }
  return true;
}

bool DominationReport::median_non_increasing() const {
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (cells[i].median_scaled > cells[i - 1].median_scaled) return false;
  }
  return true;
}

std::vector<SpectralPoint> domination_points(const DominationConfig& config, std::size_t n) {
  if (!config.points.empty()) {
    std::vector<SpectralPoint> points;
    for (Complex z : config.points) points.emplace_back(z.real(), z.imag());
    return points;
  }
  return Domain(config.tau, n, config.domain).grid(config.grid);
}

std::vector<double> domination_values(const DominationConfig& config, std::size_t n,
                                      std::span<const SpectralPoint> points, std::uint64_t seed,
                                      const Spectrum* spectrum) {
  std::vector<double> values(points.size());
  if (config.statistic == Statistic::s_minus_m) {
    const Spectrum own = spectrum ? Spectrum{} : spectral::eigenvalues(build_replica(config.ensemble, n, seed));
    const Spectrum& sp = spectrum ? *spectrum : own;
    for (std::size_t p = 0; p < points.size(); ++p) values[p] = s_minus_m(sp, points[p]);
    return values;
  }
  if (n > spectral::kResolventMaxDimension) fail(ErrorKind::ScaleExceeded, "Lambda statistics need N <= 512");
  const SymmetricMatrix h = build_replica(config.ensemble, n, seed);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const LambdaStat st = lambda_stat(h, points[p]);
    const double lam = st.require_lambda();
    values[p] = config.statistic == Statistic::lambda ? lam : std::max(lam, st.s_minus_m);
  }
  return values;
}

DominationCell summarize_domination(const DominationConfig& config, std::size_t n, std::vector<SpectralPoint> points,
                                    std::vector<double> values, std::vector<std::uint64_t> seeds) {
  DominationCell cell;
  cell.n = n;
  cell.points = std::move(points);
  cell.values = std::move(values);
  cell.seeds = std::move(seeds);
  const std::size_t np = cell.points.size();
  const std::size_t reps = np == 0 ? cell.seeds.size() : cell.values.size() / np;
  for (const auto& z : cell.points) cell.psi.push_back(error_term(config.error_term, z, n));
  const double nd = static_cast<double>(n);
  for (double eps : config.epsilons) {
    const double scale = std::pow(nd, eps);
    std::vector<double> freq(np, 0.0);
    for (std::size_t p = 0; p < np; ++p) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < reps; ++r) hits += cell.values[r * np + p] > scale * cell.psi[p] ? 1 : 0;
      freq[p] = reps == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(reps);
    }
    cell.max_tail_frequency.push_back(freq.empty() ? 0.0 : *std::max_element(freq.begin(), freq.end()));
    cell.tail_frequency.push_back(std::move(freq));
  }
  std::vector<double> scaled(reps, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t p = 0; p < np; ++p) {
      scaled[r] = std::max(scaled[r], cell.values[r * np + p] * std::sqrt(nd * cell.points[p].eta()));
    }
  }
  cell.median_scaled = reps == 0 ? 0.0 : median(std::move(scaled));
  return cell;
}

DominationReport domination_experiment(const DominationConfig& config, const SpectrumProvider& provider) {
  DominationReport report;
  report.epsilons = config.epsilons;
  for (std::size_t n : config.n_grid) {
    std::vector<SpectralPoint> points = domination_points(config, n);
    const std::size_t np = points.size();
    const std::size_t reps = config.replicas;
    std::vector<std::uint64_t> seeds;
    for (std::size_t r = 0; r < reps; ++r) seeds.push_back(replica_seed(config.master_seed, config.experiment, n, r));
    std::vector<Spectrum> spectra;
    if (provider && config.statistic == Statistic::s_minus_m) {
      spectra = provider(n);
      if (spectra.size() < reps) fail(ErrorKind::ConfigError, "spectrum provider returned too few replicas");
    }
    std::vector<double> values(reps * np);
    parallel_for(reps, config.workers, [&](std::size_t r) {
      const auto v = domination_values(config, n, points, seeds[r], spectra.empty() ? nullptr : &spectra[r]);
      std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(r * np));
    });
    report.cells.push_back(summarize_domination(config, n, std::move(points), std::move(values), std::move(seeds)));
  }
  return report;
}

double simultaneous_sup_stat(const Spectrum& spectrum, const LatticeNet& net, ErrorTermKind kind) {
  double sup = 0.0;
  for (const auto& z : net.points) sup = std::max(sup, s_minus_m(spectrum, z) / error_term(kind, z, spectrum.size()));
  return sup;
}

double simultaneous_sup_stat(const SymmetricMatrix& matrix, std::span<const SpectralPoint> points, ErrorTermKind kind) {
  double sup = 0.0;
  for (const auto& z : points) {
    const LambdaStat st = lambda_stat(matrix, z);
    sup = std::max(sup, std::max(st.require_lambda(), st.s_minus_m) / error_term(kind, z, matrix.dimension()));
  }
  return sup;
}

namespace {

// A candidate value of D = F_N - F_sigma: at x itself or at its left limit.
struct Candidate {
  double value;
  double x;
  bool left_limit;
};

IntervalStat interval_from(const Candidate& lo, const Candidate& hi) {
  IntervalStat out;
  out.sup_deviation = std::max(0.0, hi.value - lo.value);
  // sigma((a, b]) = F(b) - F(a), sigma([a, b]) = F(b) - F(a-), sigma(.., b)) uses F(b-).
  const Candidate& left = lo.x < hi.x || (lo.x == hi.x && lo.left_limit) ? lo : hi;
  const Candidate& right = &left == &lo ? hi : lo;
  out.a = left.x;
  out.b = right.x;
  out.a_closed = left.left_limit && std::isfinite(left.x);
  out.b_closed = !right.left_limit && std::isfinite(right.x);
  return out;
}

IntervalStat extremes(const std::vector<Candidate>& cands) {
  const auto [mn, mx] = std::minmax_element(cands.begin(), cands.end(),
                                            [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  return interval_from(*mn, *mx);
}

// D at every distinct eigenvalue in [lo, hi], right value and left limit.
void eigen_candidates(const Spectrum& spectrum, double lo, double hi, std::vector<Candidate>& out) {
  const auto v = spectrum.eigenvalues();
  const double n = static_cast<double>(v.size());
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double x = v[i];
    if (x >= lo && x <= hi) {
      const double f = spectral::semicircle_cdf(x);
      out.push_back({static_cast<double>(i) / n - f, x, true});
      out.push_back({static_cast<double>(j) / n - f, x, false});
    }
    i = j;
  }
}

}  // namespace

IntervalStat interval_sup(const Spectrum& spectrum) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Candidate> cands{{0.0, -inf, false}};
  eigen_candidates(spectrum, -inf, inf, cands);
  return extremes(cands);
}

IntervalStat interval_sup_bulk(const Spectrum& spectrum, double tau) {
  if (!(tau > 0.0 && tau < 2.0)) fail(ErrorKind::DomainError, "bulk interval needs tau in (0, 2)");
  const double l = -2.0 + tau;
  const double r = 2.0 - tau;
  std::vector<Candidate> cands;
  cands.push_back({spectrum.cdf_left(l) - spectral::semicircle_cdf(l), l, true});
  cands.push_back({spectrum.cdf(r) - spectral::semicircle_cdf(r), r, false});
  eigen_candidates(spectrum, l, r, cands);
  return extremes(cands);
}

double relative_deviation(const Spectrum& spectrum, double a, double b) {
  const double sigma = spectral::semicircle_interval(a, b);
  const double count = spectrum.cdf(b) - spectrum.cdf_left(a);
  return std::abs(count / sigma - 1.0);
}

double relative_interval_stat(const Spectrum& spectrum, double tau) {
  if (!(tau > 0.0 && tau < 0.5)) fail(ErrorKind::DomainError, "relative interval statistic needs tau in (0, 1/2)");
  const double n = static_cast<double>(spectrum.size());
  const double min_len = std::pow(n, tau - 0.5);
  const double h = min_len / 10.0;
  const double l = -2.0 + tau;
  const double r = 2.0 - tau;
  const auto k = static_cast<std::size_t>(std::floor((r - l) / h + 1e-9));
  std::vector<double> x(k + 1), le(k + 1), lt(k + 1), f(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    x[i] = l + static_cast<double>(i) * h;
    le[i] = spectrum.cdf(x[i]);
    lt[i] = spectrum.cdf_left(x[i]);
    f[i] = spectral::semicircle_cdf(x[i]);
  }
  double sup = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    for (std::size_t j = i + 10; j <= k; ++j) {
      const double sigma = f[j] - f[i];
      sup = std::max(sup, std::abs((le[j] - lt[i]) / sigma - 1.0));
    }
  }
  return sup;
}

std::vector<double> kernel_grid(double eta, double tau) {
  if (!(eta > 0.0)) fail(ErrorKind::DomainError, "kernel grid needs eta > 0");
  if (!(tau > 0.0 && tau < 1.0)) fail(ErrorKind::DomainError, "kernel grid needs tau in (0, 1)");
  const double half = 1.0 / tau;
  const double step = std::min(eta / 10.0, kKernelGridMaxStep);
  const auto cells = static_cast<std::size_t>(std::ceil(2.0 * half / step));
  std::vector<double> grid(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) grid[i] = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(cells);
  return grid;
}

double kernel_distance(const Spectrum& spectrum, double eta, double tau) {
  double sup = 0.0;
  for (double e : kernel_grid(eta, tau)) {
    sup = std::max(sup, std::abs(spectral::cauchy_smoothed(spectrum, eta, e) - spectral::semicircle_density(e)));
  }
  return sup;
}

double kernel_distance_semicircle(double eta, std::span<const double> grid) {
  double sup = 0.0;
  for (double e : grid) {
    const double smooth = spectral::semicircle_stieltjes(Complex{e, eta}).imag() / std::numbers::pi;
    sup = std::max(sup, std::abs(smooth - spectral::semicircle_density(e)));
  }
  return sup;
}

SlopeFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::ConfigError, "fit needs matching x and y");
  if (x.size() < 2) fail(ErrorKind::ConfigError, "fit needs at least 2 points");
  const std::size_t k = x.size();
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) fail(ErrorKind::DomainError, "log-log fit needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) fail(ErrorKind::DomainError, "fit needs distinct x values");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double res = ly[i] - (fit.intercept + fit.slope * lx[i]);
    fit.max_residual = std::max(fit.max_residual, std::abs(res));
    ss_res += res * res;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

SlopeFit decay_slope(std::span<const double> n, std::span<const double> values) {
  if (n.size() < 4) fail(ErrorKind::ConfigError, "decay slope needs at least 4 N points");
  return loglog_fit(n, values);
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::DomainError, "median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace cwsc::locallaw
