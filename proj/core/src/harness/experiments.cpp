#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "cwsc/ensembles.hpp"
#include "cwsc/ldp.hpp"
#include "cwsc/locallaw.hpp"
#include "cwsc/mixing.hpp"
#include "cwsc/spectral.hpp"
#include "experiment.hpp"

namespace cwsc::harness::detail {

namespace {

using ensembles::EnsembleSpec;
using locallaw::Complex;
using locallaw::SpectralPoint;
using locallaw::Spectrum;

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double magnetization(double beta) { return mixing::solve_spontaneous_magnetization(mixing::InverseTemperature(beta)); }

/// Ensemble template from variant, beta and (if present) rescale.
EnsembleSpec ensemble_template(const ExperimentConfig& c) {
  EnsembleSpec spec;
  spec.variant = ensembles::parse_variant(c.text("variant"));
  spec.beta = spec.variant == ensembles::Variant::rademacher ? 0.0 : c.real("beta");
  if (c.values().count("rescale") && c.text("rescale") == "supercritical") {
    const double m = magnetization(spec.beta);
    spec.rescale = 1.0 / std::sqrt(1.0 - m * m);
  }
  spec.validate();
  return spec;
}

/// Rows of the CSV grouped by (N, statistic), in CSV order.
class RowIndex {
 public:
  explicit RowIndex(const std::vector<Row>& rows) {
    for (const auto& r : rows) groups_[{r.n, r.statistic}].push_back(&r);
  }
  const std::vector<const Row*>& get(std::size_t n, const std::string& stat) const {
    static const std::vector<const Row*> empty;
    const auto it = groups_.find({n, stat});
    return it == groups_.end() ? empty : it->second;
  }
  std::vector<double> values(std::size_t n, const std::string& stat) const {
    std::vector<double> out;
    for (const Row* r : get(n, stat)) out.push_back(r->value);
    return out;
  }

 private:
  std::map<std::pair<std::size_t, std::string>, std::vector<const Row*>> groups_;
};

class Base : public Experiment {
 public:
  explicit Base(const ExperimentConfig& c) : c_(c) {}

 protected:
  Row row(double beta, std::size_t n, long long replica, Complex z, std::string stat, double value,
          std::uint64_t seed = 0) const {
    return {c_.experiment, beta, n, replica, z.real(), z.imag(), std::move(stat), value, seed};
  }
  Row aggregate(double beta, std::size_t n, Complex z, std::string stat, double value) const {
    return row(beta, n, -1, z, std::move(stat), value);
  }
  std::vector<Cell> replica_cells(const std::vector<std::size_t>& n_grid, std::size_t replicas,
                                  const std::string& stream) const {
    std::vector<Cell> out;
    for (std::size_t n : n_grid) {
      for (std::size_t r = 0; r < replicas; ++r) {
        out.push_back({n, static_cast<long long>(r), locallaw::replica_seed(c_.master_seed, stream, n, r)});
      }
    }
    return out;
  }
  /// Median per N of `stat`, then a log-log slope over N when there are two or more positive medians.
  void medians_and_slope(const RowIndex& idx, const std::vector<std::size_t>& n_grid, double beta,
                         const std::string& stat, std::vector<Row>& out) const {
    std::vector<double> ns, meds;
    for (std::size_t n : n_grid) {
      const auto v = idx.values(n, stat);
      if (v.empty()) continue;
      const double m = locallaw::median(v);
      out.push_back(aggregate(beta, n, {}, "median_" + stat, m));
      if (m > 0.0) {
        ns.push_back(static_cast<double>(n));
        meds.push_back(m);
      }
    }
    if (ns.size() >= 2 && ns.size() == n_grid.size()) {
      const auto fit = locallaw::loglog_fit(ns, meds);
      out.push_back(aggregate(beta, 0, {}, "slope_" + stat, fit.slope));
      out.push_back(aggregate(beta, 0, {}, "slope_r_squared_" + stat, fit.r_squared));
    }
  }

  ExperimentConfig c_;
};

// ---------------------------------------------------------------- figure1

class Figure1 : public Base {
 public:
  explicit Figure1(const ExperimentConfig& c)
      : Base(c), tmpl_(ensemble_template(c)), n_(c.size("N")), etas_(c.reals("etas")), tau_(c.real("tau")) {}

  std::vector<Cell> cells() const override { return replica_cells({n_}, c_.size("replicas"), c_.experiment); }

  std::vector<Row> compute(const Cell& cell) const override {
    const Spectrum s = spectral::eigenvalues(locallaw::build_replica(tmpl_, cell.n, cell.seed));
    std::vector<Row> out;
    for (double eta : etas_) {
      out.push_back(row(tmpl_.beta, cell.n, cell.replica, {0.0, eta}, "kernel_distance",
                        locallaw::kernel_distance(s, eta, tau_), cell.seed));
    }
    return out;
  }

  Summary summarize(const std::vector<Row>& rows, unsigned) const override {
    Summary out;
    const double beta = tmpl_.beta;
    const std::size_t reps = c_.size("replicas");
    // distance[r][k] for etas_[k]
    std::vector<std::vector<double>> dist(reps, std::vector<double>(etas_.size(), 0.0));
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < etas_.size(); ++k) {
        if (r.z_imag == etas_[k]) dist[static_cast<std::size_t>(r.replica)][k] = r.value;
      }
    }
    for (std::size_t k = 0; k < etas_.size(); ++k) {
      std::vector<double> v;
      for (const auto& d : dist) v.push_back(d[k]);
      if (!v.empty()) out.rows.push_back(aggregate(beta, n_, {0.0, etas_[k]}, "median_kernel_distance", locallaw::median(v)));
      out.rows.push_back(aggregate(beta, n_, {0.0, etas_[k]}, "semicircle_kernel_distance",
                                   locallaw::kernel_distance_semicircle(etas_[k], locallaw::kernel_grid(etas_[k], tau_))));
    }
    const auto lo = std::min_element(etas_.begin(), etas_.end()) - etas_.begin();
    const auto hi = std::max_element(etas_.begin(), etas_.end()) - etas_.begin();
    if (lo != hi) {
      std::size_t worse = 0;
      for (const auto& d : dist) worse += d[lo] > d[hi] ? 1 : 0;
      out.rows.push_back(aggregate(beta, n_, {0.0, etas_[lo]}, "smallest_eta_worse_count", static_cast<double>(worse)));
      out.rows.push_back(aggregate(beta, n_, {0.0, etas_[lo]}, "smallest_eta_worse_fraction",
                                   reps == 0 ? 0.0 : static_cast<double>(worse) / static_cast<double>(reps)));
    }
    if (reps == 0) return out;

    // Density curves of replica 0.
    const std::uint64_t seed = locallaw::replica_seed(c_.master_seed, c_.experiment, n_, 0);
    const Spectrum s = spectral::eigenvalues(locallaw::build_replica(tmpl_, n_, seed));
    const std::size_t np = c_.size("curve_points");
    const double range = c_.real("curve_range");
    for (double eta : etas_) {
      Curve smooth{"eta = " + g(eta), {}, {}, "#1f4fbf"};
      std::vector<Row> curve_rows;
      for (std::size_t i = 0; i < np; ++i) {
        const double e = -range + 2.0 * range * static_cast<double>(i) / static_cast<double>(np - 1);
        const double f = spectral::cauchy_smoothed(s, eta, e);
        smooth.x.push_back(e);
        smooth.y.push_back(f);
        curve_rows.push_back(row(beta, n_, 0, {e, eta}, "smoothed_density", f, seed));
      }
      for (std::size_t i = 0; i < np; ++i) {
        curve_rows.push_back(row(beta, n_, 0, {smooth.x[i], eta}, "semicircle_density",
                                 spectral::semicircle_density(smooth.x[i]), seed));
      }
      std::ostringstream csv;
      csv << kCsvHeader << '\n';
      for (const auto& r : curve_rows) csv << format_row(r) << '\n';
      const std::string stem = "figure1_eta" + g(eta);
      out.files.emplace_back(stem + ".csv", csv.str());
      out.files.emplace_back(stem + ".svg",
                             render_svg({smooth}, true, "N = " + std::to_string(n_) + ", eta = " + g(eta)));
    }
    return out;
  }

 private:
  EnsembleSpec tmpl_;
  std::size_t n_;
  std::vector<double> etas_;
  double tau_;
};

// ---------------------------------------------------------------- decay_correlations

class DecayCorrelations : public Base {
 public:
  explicit DecayCorrelations(const ExperimentConfig& c)
      : Base(c), betas_(c.reals("betas")), n_grid_(c.sizes("n_grid")), ells_(c.sizes("ells")) {
    for (double b : betas_) mixing::InverseTemperature check(b);
  }

  std::vector<Cell> cells() const override {
    std::vector<Cell> out;
    for (std::size_t n : n_grid_) {
      for (std::size_t b = 0; b < betas_.size(); ++b) out.push_back({n, static_cast<long long>(b), 0});
    }
    return out;
  }

  std::vector<Row> compute(const Cell& cell) const override {
    const double beta = betas_[static_cast<std::size_t>(cell.replica)];
    std::vector<Row> out;
    for (std::size_t ell : ells_) {
      const double v = mixing::correlation_exact(mixing::InverseTemperature(beta), cell.n, static_cast<int>(ell));
      out.push_back(row(beta, cell.n, cell.replica, {}, "correlation_l" + std::to_string(ell), v));
    }
    return out;
  }

  Summary summarize(const std::vector<Row>& rows, unsigned) const override {
    Summary out;
    for (std::size_t b = 0; b < betas_.size(); ++b) {
      const double beta = betas_[b];
      double max_odd = 0.0;
      bool any_odd = false;
      for (std::size_t ell : ells_) {
        const std::string stat = "correlation_l" + std::to_string(ell);
        std::vector<double> ns, vs;
        for (const auto& r : rows) {
          if (r.replica != static_cast<long long>(b) || r.statistic != stat) continue;
          if (ell % 2 == 1) {
            max_odd = std::max(max_odd, std::abs(r.value));
            any_odd = true;
            continue;
          }
          ns.push_back(static_cast<double>(r.n));
          vs.push_back(r.value);
          if (beta > 1.0) {
            out.rows.push_back(aggregate(beta, r.n, {}, "ratio_to_c_power_l" + std::to_string(ell),
                                         r.value / std::pow(magnetization(beta), static_cast<double>(ell))));
          }
        }
        const bool positive = std::all_of(vs.begin(), vs.end(), [](double v) { return v > 0.0; });
        if (ell % 2 == 0 && vs.size() >= 2 && positive) {
          out.rows.push_back(aggregate(beta, 0, {}, "slope_l" + std::to_string(ell), locallaw::loglog_fit(ns, vs).slope));
        }
      }
      if (any_odd) out.rows.push_back(aggregate(beta, 0, {}, "max_abs_odd", max_odd));
    }
    return out;
  }

 private:
  std::vector<double> betas_;
  std::vector<std::size_t> n_grid_;
  std::vector<std::size_t> ells_;
};

// ---------------------------------------------------------------- domination

std::vector<Complex> parse_points(const std::string& text) {
  std::vector<Complex> out;
  if (text == "grid") return out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    const auto colon = item.find(':');
    double e = 0.0, eta = 0.0;
    try {
      if (colon == std::string::npos) throw std::invalid_argument("no colon");
      std::size_t used = 0;
      e = std::stod(item.substr(0, colon), &used);
      eta = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      fail(ErrorKind::ConfigError, "points: '" + item + "' is not E:eta");
    }
    if (!(eta > 0.0) || !std::isfinite(e) || !std::isfinite(eta)) {
      fail(ErrorKind::ConfigError, "points: '" + item + "' needs finite E and eta > 0");
    }
    out.emplace_back(e, eta);
  }
  if (out.empty()) fail(ErrorKind::ConfigError, "points: empty list");
  return out;
}

class Domination : public Base {
 public:
  explicit Domination(const ExperimentConfig& c) : Base(c) {
    dc_.ensemble = ensemble_template(c);
    dc_.epsilons = c.reals("epsilons");
    dc_.n_grid = c.sizes("N_grid");
    dc_.replicas = c.size("replicas");
    dc_.tau = c.real("tau");
    dc_.domain = locallaw::parse_domain(c.text("domain"));
    dc_.grid = {c.size("e_points"), c.size("eta_points")};
    dc_.points = parse_points(c.text("points"));
    dc_.statistic = locallaw::parse_statistic(c.text("statistic"));
    dc_.error_term = locallaw::parse_error_term(c.text("error_term"));
    dc_.master_seed = c.master_seed;
    dc_.experiment = c.experiment;
    for (std::size_t n : dc_.n_grid) points_[n] = locallaw::domination_points(dc_, n);
  }

  std::vector<Cell> cells() const override { return replica_cells(dc_.n_grid, dc_.replicas, c_.experiment); }

  std::vector<Row> compute(const Cell& cell) const override {
    const auto& pts = points_.at(cell.n);
    const auto values = locallaw::domination_values(dc_, cell.n, pts, cell.seed);
    std::vector<Row> out;
    const std::string stat = locallaw::to_string(dc_.statistic);
    for (std::size_t p = 0; p < pts.size(); ++p) {
      out.push_back(row(dc_.ensemble.beta, cell.n, cell.replica, pts[p].z(), stat, values[p], cell.seed));
    }
    return out;
  }

  Summary summarize(const std::vector<Row>& rows, unsigned) const override {
    Summary out;
    const RowIndex idx(rows);
    const double beta = dc_.ensemble.beta;
    const std::string stat = locallaw::to_string(dc_.statistic);
    locallaw::DominationReport report;
    report.epsilons = dc_.epsilons;
    for (std::size_t n : dc_.n_grid) {
      std::vector<std::uint64_t> seeds;
      const auto& group = idx.get(n, stat);
      for (std::size_t i = 0; i < group.size(); i += std::max<std::size_t>(1, points_.at(n).size())) {
        seeds.push_back(group[i]->seed);
      }
      auto cell = locallaw::summarize_domination(dc_, n, points_.at(n), idx.values(n, stat), seeds);
      for (std::size_t k = 0; k < dc_.epsilons.size(); ++k) {
        const std::string eps = g(dc_.epsilons[k]);
        out.rows.push_back(aggregate(beta, n, {}, "max_tail_frequency_eps" + eps, cell.max_tail_frequency[k]));
        for (std::size_t p = 0; p < cell.points.size(); ++p) {
          out.rows.push_back(aggregate(beta, n, cell.points[p].z(), "tail_frequency_eps" + eps, cell.tail_frequency[k][p]));
        }
      }
      out.rows.push_back(aggregate(beta, n, {}, "median_scaled", cell.median_scaled));
      report.cells.push_back(std::move(cell));
    }
    for (std::size_t k = 0; k < dc_.epsilons.size(); ++k) {
      const std::string eps = g(dc_.epsilons[k]);
      out.rows.push_back(aggregate(beta, 0, {}, "tail_non_increasing_eps" + eps, report.tail_non_increasing(k) ? 1 : 0));
      const bool zero_last = !report.cells.empty() && report.cells.back().max_tail_frequency[k] == 0.0;
      out.rows.push_back(aggregate(beta, 0, {}, "tail_zero_at_largest_eps" + eps, zero_last ? 1 : 0));
    }
    out.rows.push_back(aggregate(beta, 0, {}, "median_non_increasing", report.median_non_increasing() ? 1 : 0));
    return out;
  }

 private:
  locallaw::DominationConfig dc_;
  std::map<std::size_t, std::vector<SpectralPoint>> points_;
};

// ---------------------------------------------------------------- simultaneous

class Simultaneous : public Base {
 public:
  explicit Simultaneous(const ExperimentConfig& c)
      : Base(c), tmpl_(ensemble_template(c)), n_grid_(c.sizes("N_grid")),
        kind_(locallaw::parse_error_term(c.text("error_term"))) {
    const auto domain = locallaw::parse_domain(c.text("domain"));
    const double tau = c.real("tau");
    const int exponent = static_cast<int>(c.integer("lattice_exponent"));
    for (std::size_t n : n_grid_) {
      nets_[n] = locallaw::lattice_net(locallaw::Domain(tau, n, domain, exponent), c.size("lattice_cap"));
      grids_[n] = locallaw::Domain(tau, n, domain).grid({c.size("e_points"), c.size("eta_points")});
    }
  }

  std::vector<Cell> cells() const override { return replica_cells(n_grid_, c_.size("replicas"), c_.experiment); }

  std::vector<Row> compute(const Cell& cell) const override {
    const Spectrum s = spectral::eigenvalues(locallaw::build_replica(tmpl_, cell.n, cell.seed));
    std::vector<Row> out;
    out.push_back(row(tmpl_.beta, cell.n, cell.replica, {}, "sup_net",
                      locallaw::simultaneous_sup_stat(s, nets_.at(cell.n), kind_), cell.seed));
    for (const auto& z : grids_.at(cell.n)) {
      out.push_back(row(tmpl_.beta, cell.n, cell.replica, z.z(), "pointwise_ratio",
                        locallaw::s_minus_m(s, z) / locallaw::error_term(kind_, z, cell.n), cell.seed));
    }
    return out;
  }

  Summary summarize(const std::vector<Row>& rows, unsigned) const override {
    Summary out;
    const RowIndex idx(rows);
    const double beta = tmpl_.beta;
    for (std::size_t n : n_grid_) {
      const auto& net = nets_.at(n);
      out.rows.push_back(aggregate(beta, n, {}, "net_points", static_cast<double>(net.points.size())));
      out.rows.push_back(aggregate(beta, n, {}, "net_stride", static_cast<double>(net.stride)));
      out.rows.push_back(aggregate(beta, n, {}, "covering_radius", net.covering_radius));
      const auto sups = idx.values(n, "sup_net");
      if (sups.empty()) continue;
      const double med_sup = locallaw::median(sups);
      const auto& pts = grids_.at(n);
      const auto ratios = idx.values(n, "pointwise_ratio");
      double worst = 0.0;
      for (std::size_t p = 0; p < pts.size(); ++p) {
        std::vector<double> v;
        for (std::size_t i = p; i < ratios.size(); i += pts.size()) v.push_back(ratios[i]);
        worst = std::max(worst, locallaw::median(v));
      }
      out.rows.push_back(aggregate(beta, n, {}, "median_sup_net", med_sup));
      out.rows.push_back(aggregate(beta, n, {}, "worst_point_median", worst));
      out.rows.push_back(aggregate(beta, n, {}, "sup_over_worst_point", worst > 0.0 ? med_sup / worst : 0.0));
    }
    return out;
  }

 private:
  EnsembleSpec tmpl_;
  std::vector<std::size_t> n_grid_;
  locallaw::ErrorTermKind kind_;
  std::map<std::size_t, locallaw::LatticeNet> nets_;
  std::map<std::size_t, std::vector<SpectralPoint>> grids_;
};

// ---------------------------------------------------------------- intervals

class Intervals : public Base {
 public:
  explicit Intervals(const ExperimentConfig& c)
      : Base(c), tmpl_(ensemble_template(c)), n_grid_(c.sizes("N_grid")), tau_bulk_(c.real("tau_bulk")),
        tau_rel_(c.real("tau_relative")) {}

  std::vector<Cell> cells() const override { return replica_cells(n_grid_, c_.size("replicas"), c_.experiment); }

  std::vector<Row> compute(const Cell& cell) const override {
    const Spectrum s = spectral::eigenvalues(locallaw::build_replica(tmpl_, cell.n, cell.seed));
    const double b = tmpl_.beta;
    return {
        row(b, cell.n, cell.replica, {}, "interval_sup_global", locallaw::interval_sup(s).sup_deviation, cell.seed),
        row(b, cell.n, cell.replica, {}, "interval_sup_bulk", locallaw::interval_sup_bulk(s, tau_bulk_).sup_deviation,
            cell.seed),
        row(b, cell.n, cell.replica, {}, "relative_interval", locallaw::relative_interval_stat(s, tau_rel_), cell.seed),
    };
  }

  Summary summarize(const std::vector<Row>& rows, unsigned) const override {
    Summary out;
    const RowIndex idx(rows);
    for (const char* stat : {"interval_sup_global", "interval_sup_bulk", "relative_interval"}) {
      medians_and_slope(idx, n_grid_, tmpl_.beta, stat, out.rows);
    }
    return out;
  }

 private:
  EnsembleSpec tmpl_;
  std::vector<std::size_t> n_grid_;
  double tau_bulk_;
  double tau_rel_;
};

// ---------------------------------------------------------------- kernel

class Kernel : public Base {
 public:
  explicit Kernel(const ExperimentConfig& c)
      : Base(c), tmpl_(ensemble_template(c)), n_grid_(c.sizes("N_grid")), tau_(c.real("tau")) {}

  double eta(std::size_t n) const { return std::pow(static_cast<double>(n), tau_ - 1.0); }

  std::vector<Cell> cells() const override { return replica_cells(n_grid_, c_.size("replicas"), c_.experiment); }

  std::vector<Row> compute(const Cell& cell) const override {
    const Spectrum s = spectral::eigenvalues(locallaw::build_replica(tmpl_, cell.n, cell.seed));
    const double h = eta(cell.n);
    return {row(tmpl_.beta, cell.n, cell.replica, {0.0, h}, "kernel_distance", locallaw::kernel_distance(s, h, tau_),
                cell.seed)};
  }

  Summary summarize(const std::vector<Row>& rows, unsigned) const override {
    Summary out;
    const RowIndex idx(rows);
    medians_and_slope(idx, n_grid_, tmpl_.beta, "kernel_distance", out.rows);
    for (std::size_t n : n_grid_) {
      const double h = eta(n);
      out.rows.push_back(aggregate(tmpl_.beta, n, {0.0, h}, "semicircle_distance",
                                   locallaw::kernel_distance_semicircle(h, locallaw::kernel_grid(h, tau_))));
    }
    return out;
  }

 private:
  EnsembleSpec tmpl_;
  std::vector<std::size_t> n_grid_;
  double tau_;
};

// ---------------------------------------------------------------- ldp

class Ldp : public Base {
 public:
  explicit Ldp(const ExperimentConfig& c)
      : Base(c), tmpl_(ensemble_template(c)), n_grid_(c.sizes("N_grid")), eps_(c.reals("epsilons")),
        z_(c.real("z_real"), c.real("z_imag")) {
    bc_.form = ldp::parse_form(c.text("form"));
    bc_.source = ldp::parse_coefficients(c.text("coefficients"));
    bc_.kernel = tmpl_.variant == ensembles::Variant::perturbed_supercritical ? ldp::KernelFamily::perturbed
                                                                              : ldp::KernelFamily::plain;
    bc_.beta = tmpl_.beta;
    const double t = c.real("fixed_t");
    if (t > -1.0 && t < 1.0) bc_.fixed_t = t;
    bc_.p = static_cast<int>(c.integer("p"));
    if (bc_.p % 2 != 0) fail(ErrorKind::ConfigError, "p must be even");
    bc_.n_grid = n_grid_;
    bc_.replicas = c.size("bilinear_replicas");
    if (c.real("a_p") > 0.0) bc_.a_p = c.real("a_p");
    bc_.mu_p = c.real("mu_p");
    bc_.z = z_;
    bc_.master_seed = c.master_seed;
    bc_.experiment = c.experiment + "/bilinear";
  }

  std::vector<Cell> cells() const override { return replica_cells(n_grid_, c_.size("replicas"), c_.experiment); }

  std::vector<Row> compute(const Cell& cell) const override {
    const auto h = locallaw::build_replica(tmpl_, cell.n, cell.seed);
    const auto ratios = ldp::quadratic_ratios(h, z_);
    const auto schur = ldp::schur_decompose(h, z_, 0);
    const double b = tmpl_.beta;
    std::vector<Row> out;
    out.push_back(row(b, cell.n, cell.replica, z_, "max_ratio_z1",
                      *std::max_element(ratios.z1.begin(), ratios.z1.end()), cell.seed));
    out.push_back(row(b, cell.n, cell.replica, z_, "max_ratio_z2",
                      *std::max_element(ratios.z2.begin(), ratios.z2.end()), cell.seed));
    for (double eps : eps_) {
      const double bound = std::pow(static_cast<double>(cell.n), eps);
      const auto count = [bound](const std::vector<double>& v) {
        return static_cast<double>(std::count_if(v.begin(), v.end(), [bound](double x) { return x > bound; }));
      };
      out.push_back(row(b, cell.n, cell.replica, z_, "exceed_z1_eps" + g(eps), count(ratios.z1), cell.seed));
      out.push_back(row(b, cell.n, cell.replica, z_, "exceed_z2_eps" + g(eps), count(ratios.z2), cell.seed));
    }
    out.push_back(row(b, cell.n, cell.replica, z_, "schur_residual_raw", schur.residual_raw, cell.seed));
    out.push_back(row(b, cell.n, cell.replica, z_, "schur_residual_y", schur.residual_y, cell.seed));
    return out;
  }

  Summary summarize(const std::vector<Row>& rows, unsigned workers) const override {
    Summary out;
    const RowIndex idx(rows);
    const double b = tmpl_.beta;
    for (std::size_t n : n_grid_) {
      const auto z1 = idx.values(n, "max_ratio_z1");
      if (z1.empty()) continue;
      const double trials = static_cast<double>(z1.size() * n);
      for (double eps : eps_) {
        for (const char* which : {"z1", "z2"}) {
          double hits = 0.0;
          for (double v : idx.values(n, std::string("exceed_") + which + "_eps" + g(eps))) hits += v;
          out.rows.push_back(aggregate(b, n, z_, std::string("tail_") + which + "_eps" + g(eps), hits / trials));
        }
      }
      double worst = 0.0;
      for (const char* stat : {"schur_residual_raw", "schur_residual_y"}) {
        for (double v : idx.values(n, stat)) worst = std::max(worst, v);
      }
      out.rows.push_back(aggregate(b, n, z_, "max_schur_residual", worst));
    }

    ldp::BilinearConfig bc = bc_;
    bc.workers = workers;
    const auto checks = ldp::bilinear_pnorm_experiment(bc);
    std::vector<double> ns, norms;
    for (const auto& chk : checks) {
      out.rows.push_back(aggregate(b, chk.n, z_, "bilinear_empirical_pnorm", chk.empirical_pnorm));
      out.rows.push_back(aggregate(b, chk.n, z_, "bilinear_normalized_pnorm", chk.normalized_pnorm));
      out.rows.push_back(aggregate(b, chk.n, z_, "bilinear_m1_pnorm", chk.m1_pnorm));
      out.rows.push_back(aggregate(b, chk.n, z_, "bilinear_bound_factor", chk.bound_factor));
      out.rows.push_back(aggregate(b, chk.n, z_, "bilinear_within_bound", chk.within_bound() ? 1 : 0));
      if (chk.normalized_pnorm > 0.0) {
        ns.push_back(static_cast<double>(chk.n));
        norms.push_back(chk.normalized_pnorm);
      }
    }
    if (ns.size() >= 2 && ns.size() == checks.size()) {
      out.rows.push_back(aggregate(b, 0, z_, "bilinear_normalized_slope", locallaw::loglog_fit(ns, norms).slope));
    }
    return out;
  }

 private:
  EnsembleSpec tmpl_;
  std::vector<std::size_t> n_grid_;
  std::vector<double> eps_;
  Complex z_;
  ldp::BilinearConfig bc_;
};

// ---------------------------------------------------------------- perturbation

class Perturbation : public Base {
 public:
  explicit Perturbation(const ExperimentConfig& c)
      : Base(c), beta_(c.real("beta")), n_grid_(c.sizes("N_grid")), ks_(c.sizes("ks")),
        eta_min_(c.real("eta_min")), eta_max_(c.real("eta_max")), e_range_(c.real("e_range")),
        scale_(c.real("scale")), beta_s_(c.real("supercritical_beta")) {
    if (eta_min_ > eta_max_) fail(ErrorKind::ConfigError, "eta_min exceeds eta_max");
    tmpl_.variant = beta_ == 0.0 ? ensembles::Variant::rademacher : ensembles::Variant::curie_weiss;
    tmpl_.beta = beta_;
    tmpl_.validate();
    if (beta_s_ > 1.0) {
      const double m = magnetization(beta_s_);
      pair_.variant = ensembles::Variant::curie_weiss;
      pair_.beta = beta_s_;
      pair_.rescale = 1.0 / std::sqrt(1.0 - m * m);
    }
  }

  std::vector<Cell> cells() const override { return replica_cells(n_grid_, c_.size("trials"), c_.experiment); }

  std::vector<Row> compute(const Cell& cell) const override {
    CounterRng rng(cell.seed);
    const auto y = locallaw::build_replica(tmpl_, cell.n, rng());
    const std::size_t k = ks_[static_cast<std::size_t>(cell.replica) % ks_.size()];
    const auto e = ldp::random_low_rank(cell.n, k, scale_, rng);
    const double re = (2.0 * rng.uniform() - 1.0) * e_range_;
    const double eta = eta_min_ * std::pow(eta_max_ / eta_min_, rng.uniform());
    const Complex z{re, eta};
    const auto gap = ldp::rank_perturbation_gap(y, e, z);
    std::vector<Row> out{
        row(beta_, cell.n, cell.replica, z, "gap", gap.gap, cell.seed),
        row(beta_, cell.n, cell.replica, z, "bound", gap.bound, cell.seed),
        row(beta_, cell.n, cell.replica, z, "rank", static_cast<double>(gap.rank), cell.seed),
    };
    if (beta_s_ > 1.0) {
      // Rescaled Curie-Weiss matrix against its perturbed-back version: a rank-one difference.
      ensembles::EnsembleSpec spec = pair_;
      spec.dimension = cell.n;
      spec.seed = rng();
      const auto rescaled = ensembles::build(spec);
      ensembles::EnsembleSpec unscaled = spec;
      unscaled.rescale.reset();
      const auto perturbed = ensembles::build_perturbed(unscaled);
      const auto pair = ldp::rank_perturbation_gap(perturbed, rescaled - perturbed, z);
      out.push_back(row(beta_s_, cell.n, cell.replica, z, "pair_gap", pair.gap, cell.seed));
      out.push_back(row(beta_s_, cell.n, cell.replica, z, "pair_bound", 2.0 / eta, cell.seed));
      out.push_back(row(beta_s_, cell.n, cell.replica, z, "pair_rank", static_cast<double>(pair.rank), cell.seed));
    }
    return out;
  }

  Summary summarize(const std::vector<Row>& rows, unsigned) const override {
    Summary out;
    const RowIndex idx(rows);
    double total = 0.0, total_pair = 0.0, trials = 0.0;
    for (std::size_t n : n_grid_) {
      const auto gaps = idx.values(n, "gap");
      const auto bounds = idx.values(n, "bound");
      const auto pgaps = idx.values(n, "pair_gap");
      const auto pbounds = idx.values(n, "pair_bound");
      const auto prank = idx.values(n, "pair_rank");
      double violations = 0.0, worst = 0.0, pair_violations = 0.0, pair_worst = 0.0, max_pair_rank = 0.0;
      for (std::size_t i = 0; i < gaps.size(); ++i) {
        violations += gaps[i] > bounds[i] ? 1 : 0;
        if (bounds[i] > 0.0) worst = std::max(worst, gaps[i] / bounds[i]);
      }
      for (std::size_t i = 0; i < pgaps.size(); ++i) {
        pair_violations += pgaps[i] > pbounds[i] ? 1 : 0;
        pair_worst = std::max(pair_worst, pgaps[i] / pbounds[i]);
        max_pair_rank = std::max(max_pair_rank, prank[i]);
      }
      out.rows.push_back(aggregate(beta_, n, {}, "violations", violations));
      out.rows.push_back(aggregate(beta_, n, {}, "max_gap_over_bound", worst));
      if (!pgaps.empty()) {
        out.rows.push_back(aggregate(beta_s_, n, {}, "pair_violations", pair_violations));
        out.rows.push_back(aggregate(beta_s_, n, {}, "pair_max_gap_over_bound", pair_worst));
        out.rows.push_back(aggregate(beta_s_, n, {}, "pair_max_rank", max_pair_rank));
      }
      total += violations;
      total_pair += pair_violations;
      trials += static_cast<double>(gaps.size());
    }
    out.rows.push_back(aggregate(beta_, 0, {}, "trials", trials));
    out.rows.push_back(aggregate(beta_, 0, {}, "total_violations", total));
    if (beta_s_ > 1.0) out.rows.push_back(aggregate(beta_s_, 0, {}, "total_pair_violations", total_pair));
    return out;
  }

 private:
  double beta_;
  std::vector<std::size_t> n_grid_;
  std::vector<std::size_t> ks_;
  double eta_min_, eta_max_, e_range_, scale_, beta_s_;
  EnsembleSpec tmpl_;
  EnsembleSpec pair_;
};

// ---------------------------------------------------------------- cwtype_check

class CwTypeCheck : public Base {
 public:
  explicit CwTypeCheck(const ExperimentConfig& c)
      : Base(c), beta_(c.real("beta")), n_grid_(c.sizes("n_grid")), ps_(c.sizes("ps")),
        perturbed_(c.text("kernel") == "perturbed") {
    const mixing::InverseTemperature b(beta_);
    if (perturbed_ && !b.supercritical()) fail(ErrorKind::SupercriticalRequired, "perturbed kernel needs beta > 1");
  }

  std::vector<Cell> cells() const override {
    std::vector<Cell> out;
    for (std::size_t n : n_grid_) {
      for (std::size_t p = 0; p < ps_.size(); ++p) out.push_back({n, static_cast<long long>(p), 0});
    }
    return out;
  }

  std::vector<Row> compute(const Cell& cell) const override {
    const mixing::InverseTemperature b(beta_);
    const auto mix = perturbed_ ? ensembles::perturbed_cw_mixing(b) : ensembles::plain_cw_mixing(b);
    const std::size_t n_list[] = {cell.n};
    const int p_list[] = {static_cast<int>(ps_[static_cast<std::size_t>(cell.replica)])};
    const auto report = ensembles::check_cw_type_conditions(mix, n_list, p_list, c_.size("t_grid_points"));
    const auto& r = report.rows.at(0);
    const std::string suffix = "_p" + std::to_string(p_list[0]);
    return {
        row(beta_, cell.n, cell.replica, {}, "first_moment" + suffix, r.first_moment),
        row(beta_, cell.n, cell.replica, {}, "second_moment" + suffix, r.second_moment),
        row(beta_, cell.n, cell.replica, {}, "central_first" + suffix, r.central_first),
        row(beta_, cell.n, cell.replica, {}, "central_second" + suffix, r.central_second),
    };
  }

  Summary summarize(const std::vector<Row>& rows, unsigned) const override {
    Summary out;
    bool all = true;
    for (std::size_t p : ps_) {
      const std::string suffix = "_p" + std::to_string(p);
      for (const char* stat : {"first_moment", "second_moment", "central_first", "central_second"}) {
        std::vector<double> v;
        for (const auto& r : rows) {
          if (r.statistic == stat + suffix) v.push_back(r.value);
        }
        if (v.empty()) continue;
        const bool bounded = std::all_of(v.begin(), v.end(), [&](double x) {
          return x <= ensembles::kGrowthFactor * v.front() + 1e-300;
        });
        all = all && bounded;
        out.rows.push_back(aggregate(beta_, 0, {}, std::string(stat) + "_bounded" + suffix, bounded ? 1 : 0));
      }
    }
    out.rows.push_back(aggregate(beta_, 0, {}, "all_bounded", all ? 1 : 0));
    return out;
  }

 private:
  double beta_;
  std::vector<std::size_t> n_grid_;
  std::vector<std::size_t> ps_;
  bool perturbed_;
};

}  // namespace

std::unique_ptr<Experiment> make_experiment(const ExperimentConfig& config) {
  const std::string& id = config.experiment;
  if (id == "figure1") return std::make_unique<Figure1>(config);
  if (id == "decay_correlations") return std::make_unique<DecayCorrelations>(config);
  if (id == "domination") return std::make_unique<Domination>(config);
  if (id == "simultaneous") return std::make_unique<Simultaneous>(config);
  if (id == "intervals") return std::make_unique<Intervals>(config);
  if (id == "kernel") return std::make_unique<Kernel>(config);
  if (id == "ldp") return std::make_unique<Ldp>(config);
  if (id == "perturbation") return std::make_unique<Perturbation>(config);
  if (id == "cwtype_check") return std::make_unique<CwTypeCheck>(config);
  fail(ErrorKind::ConfigError, "unknown experiment '" + id + "'");
}

}  // namespace cwsc::harness::detail
