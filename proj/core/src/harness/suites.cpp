#include <cmath>
#include <cstdio>
#include <functional>

#include "cwsc/harness.hpp"
#include "cwsc/ldp.hpp"
#include "cwsc/locallaw.hpp"
#include "cwsc/mixing.hpp"
#include "cwsc/spectral.hpp"

namespace cwsc::harness {

namespace {

using spectral::Complex;

std::string fmt(const char* format, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

std::vector<CheckResult> mixing_suite() {
  std::vector<CheckResult> out;
  double worst = 0.0;
  for (double beta : {0.3, 0.7, 1.0}) {
    for (std::size_t n : {4u, 8u, 12u}) {
      const mixing::InverseTemperature b(beta);
      const auto mm = mixing::shared_measure(b, n);
      for (std::size_t k = 0; k <= n; ++k) {
        std::vector<int> config(n, -1);
        for (std::size_t i = 0; i < k; ++i) config[i] = 1;
        worst = std::max(worst, std::abs(mixing::definetti_pmf_oracle(*mm, config) - mixing::exact_cw_pmf(b, n, config)));
      }
    }
  }
  out.push_back({"definetti_pmf_matches_exact", worst < 1e-8, fmt("max |mixture - exact| = %.3g (< 1e-8)", worst)});

  double odd = 0.0, mass = 0.0;
  for (double beta : {0.5, 1.0, 1.5, 3.0}) {
    for (std::uint64_t n : {10u, 1000u, 100000u}) {
      const auto mm = mixing::shared_measure(mixing::InverseTemperature(beta), n);
      odd = std::max({odd, std::abs(mm->moment(1)), std::abs(mm->moment(3))});
      mass = std::max(mass, std::abs(mm->mass(-1.0, 1.0) - 1.0));
    }
  }
  out.push_back({"odd_moments_vanish", odd < 1e-12, fmt("max |E t|, |E t^3| = %.3g (< 1e-12)", odd)});
  out.push_back({"unit_mass", mass < 1e-10, fmt("max |mu(-1, 1) - 1| = %.3g (< 1e-10)", mass)});

  double fixed = 0.0;
  for (double beta : {1.2, 1.5, 2.0, 5.0}) {
    const double c = mixing::solve_spontaneous_magnetization(mixing::InverseTemperature(beta));
    fixed = std::max(fixed, std::abs(std::tanh(beta * c) - c));
  }
  out.push_back({"magnetization_fixed_point", fixed < 1e-14, fmt("max |tanh(beta c) - c| = %.3g (< 1e-14)", fixed)});
  return out;
}

std::vector<CheckResult> spectral_suite() {
  std::vector<CheckResult> out;
  double residual = 0.0, trace = 0.0;
  for (std::size_t n : {2u, 17u, 64u, 200u}) {
    for (double beta : {0.0, 1.0}) {
      ensembles::EnsembleSpec spec;
      spec.variant = beta == 0.0 ? ensembles::Variant::rademacher : ensembles::Variant::curie_weiss;
      spec.beta = beta;
      spec.dimension = n;
      spec.seed = 11 * n + static_cast<std::uint64_t>(beta);
      const auto h = ensembles::build(spec);
      const auto sys = spectral::symmetric_eigen(h.data(), n, true);
      residual = std::max(residual, spectral::max_eigen_residual(h, sys));
      double sum = 0.0;
      for (double v : sys.values) sum += v;
      trace = std::max(trace, std::abs(sum - h.trace()) / std::max(1.0, std::abs(h.trace())));
    }
  }
  out.push_back({"eigen_residual", residual < 1e-10, fmt("max ||Hv - lambda v|| = %.3g (< 1e-10)", residual)});
  out.push_back({"trace_equals_eigenvalue_sum", trace < 1e-12, fmt("max relative gap = %.3g (< 1e-12)", trace)});

  double stieltjes = 0.0;
  const std::vector<double> zero(8, 0.0);
  for (Complex z : {Complex{0.3, 0.1}, Complex{-2.5, 1.0}, Complex{0.0, 1e-3}}) {
    stieltjes = std::max(stieltjes, std::abs(spectral::empirical_stieltjes(zero, z) + 1.0 / z));
  }
  out.push_back({"zero_matrix_stieltjes", stieltjes < 1e-12, fmt("max |s + 1/z| = %.3g (< 1e-12)", stieltjes)});

  double cdf = 0.0;
  for (double p : {0.01, 0.25, 0.5, 0.75, 0.99}) {
    cdf = std::max(cdf, std::abs(spectral::semicircle_cdf(spectral::semicircle_quantile(p)) - p));
  }
  out.push_back({"semicircle_quantile_inverts_cdf", cdf < 1e-12, fmt("max |F(Q(p)) - p| = %.3g (< 1e-12)", cdf)});
  return out;
}

std::vector<CheckResult> inequalities_suite() {
  std::vector<CheckResult> out;
  // psi1 against (N eta)^{-1/4} and (N eta kappa)^{-1/2} on a 100 x 100 grid over the full domain, tau = 0.1.
  std::size_t violations = 0, points = 0;
  for (std::size_t n : {100u, 10000u}) {
    const locallaw::Domain d(0.1, n, locallaw::DomainKind::full);
    for (const auto& z : d.grid({100, 100})) {
      const double psi = locallaw::error_term(locallaw::ErrorTermKind::psi1, z, n);
      const double ne = static_cast<double>(n) * z.eta();
      const double tol = 1e-15 * psi;
      if (psi > std::pow(ne, -0.25) + tol) ++violations;
      if (z.kappa() > 0.0 && psi > 1.0 / std::sqrt(ne * z.kappa()) + tol) ++violations;
      ++points;
    }
  }
  out.push_back({"error_term_inequalities", violations == 0,
                 fmt("%.0f violations over %.0f grid points", static_cast<double>(violations), static_cast<double>(points))});

  // Cauchy smoothing of the semicircle density, 100001 points over [-2.5, 2.5].
  violations = 0;
  double worst_ratio = 0.0;
  std::vector<double> grid(100001);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = -2.5 + 5.0 * static_cast<double>(i) / 100000.0;
  for (double eta : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double dist = locallaw::kernel_distance_semicircle(eta, grid);
    worst_ratio = std::max(worst_ratio, dist / std::sqrt(eta));
    for (double c : {2.0, 3.0}) violations += dist > std::sqrt(c * eta) ? 1 : 0;
  }
  out.push_back({"smoothed_semicircle_bound", violations == 0,
                 fmt("max distance / sqrt(eta) = %.4f (bound sqrt(2) = 1.4142)", worst_ratio)});

  // Self-consistent equation of m on 10^4 random points of the upper half-plane.
  CounterRng rng(0x5eed);
  double residual = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double e = -6.0 + 12.0 * rng.uniform();
    const double eta = std::pow(10.0, -8.0 + 10.0 * rng.uniform());
    const Complex z{e, eta};
    const Complex m = spectral::semicircle_stieltjes(z);
    residual = std::max(residual, std::abs(m * m + z * m + 1.0));
    if (!(m.imag() > 0.0)) residual = std::max(residual, 1.0);
  }
  out.push_back({"semicircle_self_consistency", residual < 1e-12, fmt("max |m^2 + z m + 1| = %.3g (< 1e-12)", residual)});
  return out;
}

std::vector<CheckResult> schur_suite() {
  std::vector<CheckResult> out;
  CounterRng rng(0x5c4u);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    ensembles::EnsembleSpec spec;
    const double beta = trial % 2 == 0 ? 0.0 : 1.0;
    spec.variant = beta == 0.0 ? ensembles::Variant::rademacher : ensembles::Variant::curie_weiss;
    spec.beta = beta;
    spec.dimension = 64;
    spec.seed = rng();
    const Complex z{-3.0 + 6.0 * rng.uniform(), std::pow(10.0, -2.0 + 2.5 * rng.uniform())};
    for (const auto& d : ldp::schur_decompose_all(ensembles::build(spec), z)) {
      worst = std::max({worst, d.residual_raw, d.residual_y});
    }
  }
  out.push_back({"schur_identity", worst < 1e-10, fmt("max residual over 50 draws x 64 rows = %.3g (< 1e-10)", worst)});
  return out;
}

std::vector<CheckResult> perturbation_suite() {
  std::vector<CheckResult> out;
  CounterRng rng(0x9e7u);
  std::size_t violations = 0, rank_mismatch = 0;
  double worst = 0.0;
  const std::size_t sizes[] = {8, 16, 32, 64, 128};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = sizes[trial % 5];
    const std::size_t k = 1 + static_cast<std::size_t>(trial / 5) % 4;
    ensembles::EnsembleSpec spec;
    const double beta = (trial / 20) % 3 * 0.5;
    spec.variant = beta == 0.0 ? ensembles::Variant::rademacher : ensembles::Variant::curie_weiss;
    spec.beta = beta;
    spec.dimension = n;
    spec.seed = rng();
    const auto y = ensembles::build(spec);
    const auto e = ldp::random_low_rank(n, k, std::pow(10.0, -1.0 + 3.0 * rng.uniform()), rng);
    const Complex z{-4.0 + 8.0 * rng.uniform(), std::pow(10.0, -3.0 + 4.0 * rng.uniform())};
    const auto gap = ldp::rank_perturbation_gap(y, e, z);
    violations += gap.holds() ? 0 : 1;
    rank_mismatch += gap.rank == k ? 0 : 1;
    worst = std::max(worst, gap.gap / gap.bound);
  }
  out.push_back({"rank_k_trace_gap", violations == 0,
                 fmt("%.0f violations in 1000 trials, max gap / bound = %.4f", static_cast<double>(violations), worst)});
  out.push_back({"low_rank_generator_rank", rank_mismatch == 0,
                 fmt("%.0f draws with numerical rank != k", static_cast<double>(rank_mismatch))});

  // Rescaled supercritical matrix against its perturbed-back version.
  std::size_t pair_violations = 0;
  double pair_worst = 0.0;
  const double c = mixing::solve_spontaneous_magnetization(mixing::InverseTemperature(1.5));
  for (int trial = 0; trial < 100; ++trial) {
    ensembles::EnsembleSpec spec;
    spec.variant = ensembles::Variant::curie_weiss;
    spec.beta = 1.5;
    spec.dimension = sizes[trial % 5];
    spec.seed = rng();
    const auto perturbed = ensembles::build_perturbed(spec);
    spec.rescale = 1.0 / std::sqrt(1.0 - c * c);
    const auto rescaled = ensembles::build(spec);
    const Complex z{-4.0 + 8.0 * rng.uniform(), std::pow(10.0, -3.0 + 4.0 * rng.uniform())};
    const auto gap = ldp::rank_perturbation_gap(perturbed, rescaled - perturbed, z);
    const double bound = 2.0 / z.imag();
    pair_violations += gap.gap <= bound && gap.rank == 1 ? 0 : 1;
    pair_worst = std::max(pair_worst, gap.gap / bound);
  }
  out.push_back({"supercritical_rank_one_pair", pair_violations == 0,
                 fmt("%.0f failures in 100 draws, max gap / (2/eta) = %.4f", static_cast<double>(pair_violations),
                     pair_worst)});
  return out;
}

const std::vector<std::pair<std::string, std::function<std::vector<CheckResult>()>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<std::vector<CheckResult>()>>> r = {
      {"mixing", mixing_suite},
      {"spectral", spectral_suite},
      {"inequalities", inequalities_suite},
      {"schur", schur_suite},
      {"perturbation", perturbation_suite},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : registry()) v.push_back(name);
    v.push_back("all");
    return v;
  }();
  return names;
}

std::vector<CheckResult> run_suite(const std::string& name) {
  std::vector<CheckResult> out;
  for (const auto& [suite, fn] : registry()) {
    if (name != "all" && name != suite) continue;
    for (auto& r : fn()) {
      r.name = suite + "/" + r.name;
      out.push_back(std::move(r));
    }
  }
  if (out.empty()) fail(ErrorKind::ConfigError, "unknown suite '" + name + "'");
  return out;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::IoError:
    case ErrorKind::SupercriticalRequired:
    case ErrorKind::DomainError:
    case ErrorKind::ScaleExceeded:
      return 1;
    case ErrorKind::DiracMeasure:
    case ErrorKind::OracleScaleExceeded:
    case ErrorKind::NumericalFailure:
      return 2;
  }
  return 2;
}

}  // namespace cwsc::harness
