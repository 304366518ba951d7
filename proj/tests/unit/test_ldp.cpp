#include <doctest.h>

#include <cmath>
#include <vector>

#include "cwsc/ldp.hpp"
#include "cwsc/locallaw.hpp"

using namespace cwsc;
using namespace cwsc::ldp;
using ensembles::EnsembleSpec;
using ensembles::Variant;

namespace {

SymmetricMatrix cw_draw(double beta, std::size_t n, std::uint64_t seed) {
  EnsembleSpec s;
  s.variant = Variant::curie_weiss;
  s.beta = beta;
  s.dimension = n;
  s.seed = seed;
  return ensembles::build(s);
}

}  // namespace

TEST_CASE("Schur decomposition of the zero matrix") {
  const SymmetricMatrix zero(8);
  const Complex z(0.3, 0.9);
  for (const auto& d : schur_decompose_all(zero, z)) {
    CHECK(std::abs(d.g_ii + 1.0 / z) < 1e-14);
    CHECK(std::abs(d.s + 1.0 / z) < 1e-14);
    CHECK(std::abs(d.z1) == 0.0);
    // The centring -1/N in Z2 leaves -(1/N) tr G^(i) = (N - 1) / (N z).
    CHECK(std::abs(d.z2 - 7.0 / (8.0 * z)) < 1e-14);
    CHECK(std::abs(d.a_i + 1.0 / (8.0 * z)) < 1e-14);
    CHECK(d.residual_y < 1e-12);
    CHECK(d.residual_raw < 1e-12);
  }
}

TEST_CASE("Schur residuals on Curie-Weiss draws") {
  for (double beta : {0.0, 1.0}) {
    const auto h = cw_draw(beta, 64, 31);
    const Complex z(0.5, 0.5);
    const auto all = schur_decompose_all(h, z);
    REQUIRE(all.size() == 64);
    for (const auto& d : all) {
      CHECK(d.residual_raw < 1e-10);
      CHECK(d.residual_y < 1e-10);
      // |H_ik|^2 = 1/N for spins, so Z2 vanishes.
      CHECK(std::abs(d.z2) < 1e-12);
    }
    const auto single = schur_decompose(h, z, 5);
    CHECK(std::abs(single.g_ii - all[5].g_ii) < 1e-12);
  }
  CHECK_THROWS_AS(schur_decompose(cw_draw(0.0, 257, 1), Complex(0, 1), 0), Error);
}

TEST_CASE("minor from the resolvent matches a direct minor solve") {
  const auto h = cw_draw(0.5, 30, 4);
  const Complex z(-0.4, 0.2);
  const auto g = spectral::resolvent(h, z);
  const std::vector<std::size_t> ex{11};
  const auto direct = spectral::minor_resolvent(h, ex, z);
  const auto via = minor_from_resolvent(g, 11);
  for (std::size_t a = 0; a < 29; ++a)
    for (std::size_t b = 0; b < 29; ++b) CHECK(std::abs(direct(a, b) - via(a, b)) < 1e-9);
}

TEST_CASE("quadratic ratios") {
  const auto h = cw_draw(0.0, 48, 8);
  const auto r = quadratic_ratios(h, Complex(0.5, 0.5));
  CHECK(r.z1.size() == 48);
  for (double v : r.z2) CHECK(v < 1e-10);
  for (double v : r.z1) CHECK(v >= 0.0);
}

TEST_CASE("form evaluation") {
  const std::size_t n = 5;
  CounterRng rng(9);
  std::vector<double> y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;
    z[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;
  }
  const std::vector<Complex> zeros(n * n);
  for (auto f : {FormKind::bilinear, FormKind::offdiag, FormKind::full}) CHECK(std::abs(evaluate_form(f, zeros, y, z)) == 0.0);
  CHECK(std::abs(evaluate_form(FormKind::linear, std::vector<Complex>(n), y, z)) == 0.0);

  std::vector<Complex> a(n * n);
  for (auto& v : a) v = Complex(rng.normal(), rng.normal());
  Complex diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag += a[i * n + i] * y[i] * y[i];
  const Complex full = evaluate_form(FormKind::full, a, y, z);
  const Complex off = evaluate_form(FormKind::offdiag, a, y, z);
  CHECK(std::abs(full - off - diag) < 1e-12);

  Complex bil = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) bil += a[i * n + j] * y[i] * z[j];
  CHECK(std::abs(evaluate_form(FormKind::bilinear, a, y, z) - bil) < 1e-12);
  CHECK(parse_form("offdiag") == FormKind::offdiag);
  CHECK_THROWS_AS(parse_form("cubic"), Error);
  CHECK(parse_coefficients("resolvent") == CoefficientSource::resolvent);
}

TEST_CASE("centered bilinear p-norm bound") {
  BilinearConfig cfg;
  cfg.form = FormKind::offdiag;
  cfg.fixed_t = 0.0;
  cfg.p = 2;
  cfg.n_grid = {32, 64, 128, 256};
  cfg.replicas = 100;
  const auto checks = bilinear_pnorm_experiment(cfg);
  REQUIRE(checks.size() == 4);
  for (const auto& c : checks) {
    CHECK(c.m1_pnorm == 0.0);
    CHECK(c.a_p == doctest::Approx(std::sqrt(2.0)));
    CHECK(c.within_bound());
    // E|sum_{i != j} a_ij y_i y_j|^2 = sum_{i < j} |a_ij + a_ji|^2 <= 2 sum |a|^2 for Rademacher y.
    CHECK(c.normalized_pnorm <= std::sqrt(2.0) * 1.2);
  }
  cfg.p = 3;
  CHECK_THROWS_AS(bilinear_pnorm_experiment(cfg), Error);
  cfg.p = 2;
  cfg.kernel = KernelFamily::perturbed;
  cfg.beta = 0.5;
  CHECK_THROWS_AS(bilinear_pnorm_experiment(cfg), Error);
}

TEST_CASE("quadratic domination experiment") {
  QuadraticConfig cfg;
  cfg.ensemble.variant = Variant::rademacher;
  cfg.n_grid = {32, 64};
  cfg.replicas = 20;
  cfg.epsilons = {0.0, 0.25};
  const auto cells = quadratic_domination_experiment(cfg);
  REQUIRE(cells.size() == 2);
  for (const auto& c : cells) {
    CHECK(c.tail_z1[1] <= c.tail_z1[0]);
    for (double v : c.tail_z2) CHECK(v == 0.0);
    CHECK(c.max_ratio_z1.size() == 20);
  }
}

TEST_CASE("rank perturbation gap") {
  const auto y = cw_draw(1.0, 128, 2);
  const SymmetricMatrix none(128);
  const auto zero = rank_perturbation_gap(y, none, Complex(0, 1));
  CHECK(zero.rank == 0);
  CHECK(zero.gap == 0.0);
  CHECK(zero.bound == 0.0);
  CHECK(zero.holds());

  const double c = mixing::solve_spontaneous_magnetization(mixing::InverseTemperature(1.5));
  SymmetricMatrix ones(128);
  const double v = c / std::sqrt(128 * (1 - c * c));
  for (std::size_t i = 0; i < 128; ++i)
    for (std::size_t j = i; j < 128; ++j) ones.set(i, j, v);
  const auto one = rank_perturbation_gap(y, ones, Complex(0, 1));
  CHECK(one.rank == 1);
  CHECK(one.gap <= 2.0);

  // Oracle: the gap from eigenvalues of both matrices computed here.
  const auto e1 = spectral::eigenvalues(y), e2 = spectral::eigenvalues(y + ones);
  const Complex z(0, 1);
  Complex t1 = 0, t2 = 0;
  for (double l : e1.eigenvalues()) t1 += 1.0 / (l - z);
  for (double l : e2.eigenvalues()) t2 += 1.0 / (l - z);
  CHECK(one.gap == doctest::Approx(std::abs(t1 - t2)).epsilon(1e-10));

  CounterRng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto e = random_low_rank(64, 3, 5.0, rng);
    CHECK(numerical_rank(e) == 3);
    const auto g = rank_perturbation_gap(cw_draw(0.5, 64, 100 + trial), e, Complex(rng.uniform() * 4 - 2, 0.5));
    CHECK(g.bound == doctest::Approx(12.0));
    CHECK(g.gap <= 12.0);
  }
  CHECK_THROWS_AS(rank_perturbation_gap(y, ones, Complex(0, 0)), Error);
}
