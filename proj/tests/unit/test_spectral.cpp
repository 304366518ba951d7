#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cwsc/ensembles.hpp"
#include "cwsc/spectral.hpp"

using namespace cwsc;
using namespace cwsc::spectral;
using ensembles::EnsembleSpec;
using ensembles::Variant;

namespace {

SymmetricMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  SymmetricMatrix m(rows.size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double v : r) {
      if (j >= i) m.set(i, j, v);
      ++j;
    }
    ++i;
  }
  return m;
}

SymmetricMatrix cw_draw(double beta, std::size_t n, std::uint64_t seed) {
  EnsembleSpec s;
  s.variant = Variant::curie_weiss;
  s.beta = beta;
  s.dimension = n;
  s.seed = seed;
  return ensembles::build(s);
}

// Roots of det(xI - A) for symmetric 3x3 A, trigonometric form.
std::vector<double> cubic_roots(const SymmetricMatrix& a) {
  const double q = a.trace() / 3.0;
  double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  double p2 = 2.0 * p1;
  for (int i = 0; i < 3; ++i) p2 += (a(i, i) - q) * (a(i, i) - q);
  const double p = std::sqrt(p2 / 6.0);
  double b[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b[i][j] = (a(i, j) - (i == j ? q : 0.0)) / p;
  const double det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                     b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
  const double r = std::clamp(det / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  std::vector<double> out{q + 2 * p * std::cos(phi), q + 2 * p * std::cos(phi + 2 * std::numbers::pi / 3),
                          q + 2 * p * std::cos(phi + 4 * std::numbers::pi / 3)};
  std::sort(out.begin(), out.end());
  return out;
}

double simpson(double (*f)(double), double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + h * k);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("eigenvalues of small matrices") {
  const auto d = eigenvalues(from_rows({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}));
  REQUIRE(d.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(d.eigenvalues()[k] == doctest::Approx(k + 1.0).epsilon(1e-15));
  const auto two = eigenvalues(from_rows({{0, 1}, {1, 0}}));
  CHECK(two.eigenvalues()[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(two.eigenvalues()[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("integer 3x3 matrices against the trigonometric cubic") {
  CounterRng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    SymmetricMatrix a(3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i; j < 3; ++j) a.set(i, j, std::floor(rng.uniform() * 11.0) - 5.0);
    const auto ev = eigenvalues(a);
    const auto oracle = cubic_roots(a);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(ev.eigenvalues()[k] - oracle[k]) < 1e-9);
  }
}

TEST_CASE("trace and residual on Curie-Weiss draws") {
  for (double beta : {0.0, 1.0, 1.5}) {
    const auto h = cw_draw(beta, 128, 5);
    const auto ev = eigenvalues(h);
    CHECK(std::abs(ev.sum() - h.trace()) < 1e-9 * 128);
    const auto sys = symmetric_eigen(h.data(), 128, true);
    CHECK(max_eigen_residual(h, sys) < 1e-10);
  }
  const auto tri = tridiagonal_eigenvalues({2, 2}, {1});
  REQUIRE(tri.size() == 2);
  CHECK(tri[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tri[1] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("spectrum helpers") {
  const Spectrum s({3.0, -1.0, 1.0, 1.0});
  CHECK(s.eigenvalues()[0] == -1.0);
  CHECK(s.cdf(1.0) == 0.75);
  CHECK(s.cdf_left(1.0) == 0.25);
  const auto t = s.scaled(2.0);
  CHECK(t.eigenvalues()[3] == 6.0);
}

TEST_CASE("empirical Stieltjes transform") {
  const Spectrum zero({0.0});
  const auto s = empirical_stieltjes(zero, SpectralPoint(0.0, 1.0));
  CHECK(std::abs(s - Complex(0.0, 1.0)) < 1e-15);

  const auto h = cw_draw(1.0, 128, 8);
  const auto ev = eigenvalues(h);
  for (double eta : {1e-3, 0.1, 2.0}) {
    const SpectralPoint z(0.3, eta);
    const auto sz = empirical_stieltjes(ev, z);
    CHECK(std::abs(sz) <= 1.0 / eta + 1e-12);
    const auto g = resolvent(h, z.z());
    CHECK(std::abs(g.trace() / 128.0 - sz) < 1e-10);
  }
  CHECK_THROWS_AS(SpectralPoint(0.0, 0.0), Error);
}

TEST_CASE("semicircle Stieltjes transform") {
  CHECK(std::abs(semicircle_stieltjes(Complex(0, 1)) - Complex(0, (std::sqrt(5.0) - 1) / 2)) < 1e-15);
  CounterRng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const Complex z(rng.uniform() * 8 - 4, std::exp(rng.uniform() * 12 - 8));
    const auto m = semicircle_stieltjes(z);
    CHECK(std::abs(m * m + z * m + 1.0) < 1e-12);
    CHECK(m.imag() > 0.0);
  }
  const Complex big(0.0, 1e6);
  CHECK(std::abs(semicircle_stieltjes(big) + 1.0 / big) < 1e-15);
}

TEST_CASE("semicircle law") {
  CHECK(semicircle_interval(-2, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(semicircle_interval(0, 2) == doctest::Approx(0.5).epsilon(1e-15));
  const double expected = 1.0 / 3.0 + std::sqrt(3.0) / (2 * std::numbers::pi);
  CHECK(std::abs(semicircle_interval(-1, 1) - expected) < 1e-14);
  const double quad = simpson([](double e) { return std::sqrt(4 - e * e) / (2 * std::numbers::pi); }, -1, 1, 20000);
  CHECK(std::abs(semicircle_interval(-1, 1) - quad) < 1e-12);
  CHECK(semicircle_interval(-INFINITY, INFINITY) == doctest::Approx(1.0));
  CHECK(semicircle_density(3.0) == 0.0);
  CHECK(semicircle_density(0.0) == doctest::Approx(1.0 / std::numbers::pi));
  for (double p : {0.0, 0.01, 0.3, 0.5, 0.77, 1.0}) CHECK(semicircle_cdf(semicircle_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("Cauchy smoothing") {
  const Spectrum zero({0.0});
  for (double eta : {0.01, 0.1, 1.0}) CHECK(cauchy_smoothed(zero, eta, 0.0) == doctest::Approx(1.0 / (std::numbers::pi * eta)));
  const auto ev = eigenvalues(cw_draw(0.0, 60, 3));
  const int panels = 200000;
  const double a = -50, b = 50, h = (b - a) / panels;
  double s = cauchy_smoothed(ev, 0.1, a) + cauchy_smoothed(ev, 0.1, b);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * cauchy_smoothed(ev, 0.1, a + h * k);
  // Tail mass beyond +-50 of a Cauchy(0.1) is about 2 * 0.1 / (50 pi).
  CHECK(std::abs(s * h / 3.0 - 1.0) < 1.5e-3);
  CHECK(std::abs(s * h / 3.0 + 2 * std::atan(0.1 / 48) / std::numbers::pi - 1.0) < 1e-4);
}

TEST_CASE("resolvent") {
  const SymmetricMatrix zero(5);
  const auto g = resolvent(zero, Complex(0, 1));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(g(i, j) - (i == j ? Complex(0, 1) : Complex(0, 0))) < 1e-15);

  const auto h = cw_draw(0.5, 40, 12);
  const Complex z(0.2, 0.05);
  const auto gz = resolvent(h, z);
  CHECK(resolvent_residual(h, z, gz) < 1e-10);
  ComplexMatrix shifted(40);
  for (std::size_t a = 0; a < 40; ++a)
    for (std::size_t b = 0; b < 40; ++b) shifted(a, b) = h(a, b) - (a == b ? std::conj(z) : Complex(0));
  const auto gc = invert(shifted);
  double max_entry = 0.0;
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) {
      CHECK(std::abs(gc(i, j) - std::conj(gz(i, j))) < 1e-10);
      max_entry = std::max(max_entry, std::abs(gz(i, j)));
    }
  CHECK(max_entry <= 1.0 / z.imag() + 1e-9);

  // Minor identity G^(i)_kk = G_kk - G_ki G_ik / G_ii against a direct minor solve.
  const std::size_t i = 7;
  const std::vector<std::size_t> ex{i};
  const auto minor = minor_resolvent(h, ex, z);
  for (std::size_t k = 0, kk = 0; k < 40; ++k) {
    if (k == i) continue;
    const Complex viaid = gz(k, k) - gz(k, i) * gz(i, k) / gz(i, i);
    CHECK(std::abs(minor(kk, kk) - viaid) < 1e-9);
    ++kk;
  }
  CHECK_THROWS_AS(resolvent(cw_draw(0.0, 513, 1), z), Error);
}

TEST_CASE("complex LU inverse") {
  ComplexMatrix a(3);
  a(0, 0) = {2, 1};
  a(0, 1) = {0, 1};
  a(1, 0) = {1, 0};
  a(1, 1) = {3, 0};
  a(2, 2) = {0, -4};
  a(1, 2) = {1, 1};
  const auto inv = invert(a);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      Complex s = 0;
      for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * inv(k, j);
      CHECK(std::abs(s - (i == j ? Complex(1) : Complex(0))) < 1e-14);
    }
}
