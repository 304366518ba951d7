#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "cwsc/ensembles.hpp"
#include "cwsc/spectral.hpp"

using namespace cwsc;
using namespace cwsc::ensembles;

namespace {

EnsembleSpec spec_of(Variant v, double beta, std::size_t n, std::uint64_t seed) {
  EnsembleSpec s;
  s.variant = v;
  s.beta = beta;
  s.dimension = n;
  s.seed = seed;
  return s;
}

double magnetization(double beta) {
  return mixing::solve_spontaneous_magnetization(mixing::InverseTemperature(beta));
}

std::size_t rank_of(const SymmetricMatrix& m) {
  const auto ev = spectral::eigenvalues(m);
  double top = 0.0;
  for (double v : ev.eigenvalues()) top = std::max(top, std::abs(v));
  std::size_t r = 0;
  for (double v : ev.eigenvalues()) r += std::abs(v) > 1e-9 * top;
  return r;
}

}  // namespace

TEST_CASE("ensemble parameter validation") {
  CHECK_NOTHROW(spec_of(Variant::curie_weiss, 0.7, 10, 1).validate());
  CHECK_THROWS_AS(spec_of(Variant::curie_weiss, 0.7, 1, 1).validate(), Error);
  CHECK_THROWS_AS(spec_of(Variant::curie_weiss, 0.7, 5000, 1).validate(), Error);
  try {
    spec_of(Variant::perturbed_supercritical, 0.9, 10, 1).validate();
    FAIL("expected SupercriticalRequired");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SupercriticalRequired);
  }
  CHECK(parse_variant("rademacher") == Variant::rademacher);
  CHECK(to_string(Variant::perturbed_supercritical) == "perturbed_supercritical");
  CHECK_THROWS_AS(parse_variant("gaussian"), Error);
}

TEST_CASE("Rademacher entries") {
  const std::size_t n = 200;
  const auto h = build(spec_of(Variant::rademacher, 0.0, n, 42));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      CHECK(std::abs(std::abs(h(i, j)) - scale) < 1e-15);
      sum += h(i, j) / scale;
    }
  }
  const double m = static_cast<double>(n * (n + 1) / 2);
  CHECK(std::abs(sum / m) < 3.0 / std::sqrt(m) * 3.0);
  CHECK(h.mixing_draw == 0.0);
}

TEST_CASE("exact symmetry of every variant") {
  for (auto v : {Variant::curie_weiss, Variant::rademacher, Variant::perturbed_supercritical}) {
    const auto h = build(spec_of(v, 1.5, 37, 9));
    CHECK(h.max_asymmetry() == 0.0);
    for (std::size_t i = 0; i < 37; ++i)
      for (std::size_t j = 0; j < 37; ++j) CHECK(h(i, j) == h(j, i));
  }
}

TEST_CASE("pair products against the mixing second moment") {
  // Mean of Y_a Y_b over distinct upper-triangle spins equals int t^2 d mu_{N^2}.
  const double beta = 1.0;
  const std::size_t n = 32, reps = 1000;
  const double m = static_cast<double>(n * (n + 1) / 2);
  std::vector<double> q;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto h = build(spec_of(Variant::curie_weiss, beta, n, 1000 + r));
    const double s = h.spin_sum;
    q.push_back((s * s - m) / (m * (m - 1.0)));
  }
  double mean = 0.0, var = 0.0;
  for (double x : q) mean += x;
  mean /= reps;
  for (double x : q) var += (x - mean) * (x - mean);
  var /= reps - 1;
  const double oracle = mixing::mixing_moment(mixing::MixingMeasure(mixing::InverseTemperature(beta), n * n), 2);
  CHECK(std::abs(mean - oracle) < 3.0 * std::sqrt(var / reps));
}

TEST_CASE("perturbed ensemble") {
  const double beta = 1.5, c = magnetization(beta);
  const std::size_t n = 64;
  const double s = std::sqrt(n * (1 - c * c));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto z = build_perturbed(spec_of(Variant::perturbed_supercritical, beta, n, seed));
    const double sign = z.mixing_draw > 0.0 ? 1.0 : -1.0;
    std::set<double> atoms;
    for (double v : z.data()) atoms.insert(v);
    for (double v : atoms) {
      const bool ok = std::abs(v - (1 - sign * c) / s) < 1e-14 || std::abs(v - (-1 - sign * c) / s) < 1e-14;
      CHECK(ok);
    }
  }

  // Rank-one difference to the rescaled Curie-Weiss draw with the same seed.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto cw = spec_of(Variant::curie_weiss, beta, n, seed);
    cw.rescale = 1.0 / std::sqrt(1 - c * c);
    const auto h = build(cw);
    const auto z = build_perturbed(spec_of(Variant::perturbed_supercritical, beta, n, seed));
    CHECK(h.mixing_draw == z.mixing_draw);
    CHECK(rank_of(h - z) == 1);
  }

  // Entry variance: 1/N times int m2 d mu_{N^2}, close to 1/N.
  double sq = 0.0, count = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto z = build_perturbed(spec_of(Variant::perturbed_supercritical, beta, n, 500 + seed));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        sq += z(i, j) * z(i, j);
        count += 1.0;
      }
  }
  const auto& mm = *mixing::shared_measure(mixing::InverseTemperature(beta), n * n);
  const double oracle =
      1.0 - mm.expect([&](double t) { return mixing::perturbed_moments(mixing::InverseTemperature(beta), t).one_minus_m2; });
  CHECK(sq / count * n == doctest::Approx(1.0).epsilon(0.1));
  CHECK(sq / count * n == doctest::Approx(oracle).epsilon(0.05));
}

TEST_CASE("both perturbation paths give the same matrix") {
  for (std::uint64_t seed : {3u, 17u, 99u}) {
    const auto spec = spec_of(Variant::perturbed_supercritical, 1.3, 24, seed);
    const auto a = build_perturbed(spec, PerturbationPath::shift);
    const auto b = build_perturbed(spec, PerturbationPath::kernel);
    for (std::size_t k = 0; k < a.data().size(); ++k) CHECK(std::abs(a.data()[k] - b.data()[k]) < 1e-15);
  }
}

TEST_CASE("determinism") {
  const auto spec = spec_of(Variant::curie_weiss, 0.8, 50, 1234);
  const auto a = build(spec), b = build(spec);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  const auto c = build(spec_of(Variant::curie_weiss, 0.8, 50, 1235));
  CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
}

TEST_CASE("entry positions are exchangeable (chi-square)") {
  // Count +1 entries per upper-triangle position over many Rademacher draws.
  const std::size_t n = 6, reps = 4000;
  const std::size_t m = n * (n + 1) / 2;
  std::vector<double> plus(m, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto h = build(spec_of(Variant::curie_weiss, 0.5, n, 77 + r));
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) plus[k++] += h(i, j) > 0.0;
  }
  double total = 0.0;
  for (double p : plus) total += p;
  const double expected = total / m;
  double chi2 = 0.0;
  for (double p : plus) chi2 += (p - expected) * (p - expected) / expected;
  // 20 degrees of freedom; 99.99% quantile is about 52.
  CHECK(chi2 < 52.0);
}

TEST_CASE("custom mixing space") {
  MixingSpace space;
  CounterRng rng(5);
  CHECK_THROWS_AS(custom_ensemble(space, 10, rng), Error);
  space.sample_t = [](CounterRng&) { return 0.0; };
  space.sample_spin = [](double, CounterRng& r) { return r.uniform() < 0.5 ? 1.0 : -1.0; };
  space.m1 = [](double t) { return t; };
  CHECK_THROWS_AS(custom_ensemble(space, 10, rng), Error);
  space.m2 = [](double) { return 1.0; };
  const auto h = custom_ensemble(space, 10, rng);
  CHECK(h.dimension() == 10);
  CHECK(h.max_asymmetry() == 0.0);
  CHECK(h.variant == Variant::custom);
  try {
    build(spec_of(Variant::custom, 0.0, 10, 1));
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
  }
}

TEST_CASE("Curie-Weiss type condition checker") {
  const std::vector<std::size_t> grid{100, 1000, 10000};
  const std::vector<int> ps{2, 4};
  for (double beta : {0.5, 1.0}) {
    const auto report = check_cw_type_conditions(plain_cw_mixing(mixing::InverseTemperature(beta)), grid, ps);
    CHECK(report.all_bounded());
    CHECK(report.rows.size() == grid.size() * ps.size());
  }
  const auto super = check_cw_type_conditions(plain_cw_mixing(mixing::InverseTemperature(1.5)), grid, ps);
  CHECK_FALSE(super.all_bounded());
  for (const auto& t : super.trends) CHECK_FALSE(t.first_bounded);
  const double c = magnetization(1.5);
  for (const auto& r : super.rows) {
    // N^{p/2} c^p growth.
    CHECK(r.first_moment == doctest::Approx(std::pow(static_cast<double>(r.n), r.p / 2.0) * std::pow(c, r.p)).epsilon(0.05));
  }
  const auto perturbed = check_cw_type_conditions(perturbed_cw_mixing(mixing::InverseTemperature(1.5)), grid, ps);
  CHECK(perturbed.all_bounded());
  QuadratureMixing broken;
  CHECK_THROWS_AS(check_cw_type_conditions(broken, grid, ps), Error);
}

TEST_CASE("matrix arithmetic") {
  const auto a = build(spec_of(Variant::rademacher, 0.0, 8, 1));
  const auto b = build(spec_of(Variant::rademacher, 0.0, 8, 2));
  const auto d = (a + b) - b;
  for (std::size_t k = 0; k < 64; ++k) CHECK(std::abs(d.data()[k] - a.data()[k]) < 1e-15);
  const auto twice = 2.0 * a;
  CHECK(twice.frobenius_norm() == doctest::Approx(2.0 * a.frobenius_norm()));
  // Frobenius norm of an N x N sign matrix scaled by 1/sqrt(N) is sqrt(N).
  CHECK(a.frobenius_norm() == doctest::Approx(std::sqrt(8.0)));
  CHECK_THROWS_AS(a + build(spec_of(Variant::rademacher, 0.0, 9, 1)), Error);
}

TEST_CASE("binary matrix round trip") {
  const auto h = build_perturbed(spec_of(Variant::perturbed_supercritical, 1.5, 13, 21));
  std::stringstream buf;
  write_matrix(buf, h);
  const auto back = read_matrix(buf);
  CHECK(back.dimension() == 13);
  CHECK(std::equal(h.data().begin(), h.data().end(), back.data().begin()));
  CHECK(back.mixing_draw == h.mixing_draw);
  CHECK(back.seed == 21);
  CHECK(back.beta == 1.5);
  CHECK(back.variant == Variant::perturbed_supercritical);

  std::stringstream garbage("not a matrix at all, definitely not");
  CHECK_THROWS_AS(read_matrix(garbage), Error);
  std::string bytes = buf.str();
  std::stringstream again;
  write_matrix(again, h);
  bytes = again.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 8));
  try {
    read_matrix(truncated);
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IoError);
  }
}
