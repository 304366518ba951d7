#pragma once

// Curie-Weiss spins as a de Finetti mixture: the mixing measure on (-1, 1),
// the conditional spin kernels, and exact / quadrature moment computations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "cwsc/error.hpp"
#include "cwsc/quadrature.hpp"
#include "cwsc/rng.hpp"

namespace cwsc::mixing {

class InverseTemperature {
 public:
  explicit InverseTemperature(double beta) : beta_(beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) fail(ErrorKind::DomainError, "inverse temperature must be finite and >= 0");
  }
  double value() const noexcept { return beta_; }
  bool supercritical() const noexcept { return beta_ > 1.0; }

 private:
  double beta_;
};

/// Unique c in (0, 1) with tanh(beta c) = c. Throws SupercriticalRequired for beta <= 1.
double solve_spontaneous_magnetization(InverseTemperature beta);

/// log cosh(u), accurate for small and large |u|.
inline double log_cosh(double u) noexcept {
  const double a = std::abs(u);
  if (a < 1.0) {
    const double s = std::sinh(0.5 * a);
    return std::log1p(2.0 * s * s);
  }
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

struct CdfNode {
  double u;    // artanh(t)
  double cdf;  // mu((-1, tanh u])
};

/// The de Finetti mixing measure of Curie-Weiss(beta, n) spins.
///
/// Everything is evaluated in u = artanh(t), where the density becomes
/// exp(phi(u)) with phi(u) = -n (u^2 / (2 beta) - log cosh u). Tables are
/// immutable after construction.
class MixingMeasure {
 public:
  MixingMeasure(InverseTemperature beta, std::uint64_t n);

  double beta() const noexcept { return beta_; }
  std::uint64_t n() const noexcept { return n_; }
  bool is_dirac() const noexcept { return beta_ == 0.0; }

  /// The constant C making C e^{-(n/2) F_beta(t)} / (1 - t^2) a probability density.
  double normalization() const;
  double log_normalization() const;

  /// Density of mu at t in (-1, 1).
  double density(double t) const;

  /// phi(u) - max phi; zero at the mode(s). Expanded around the mode m >= 0
  /// nearest to |u|: with d = |u| - m,
  ///   phi(u) - phi(m) = -n [d (2m + d) / (2 beta) - log(cosh d + tanh(m) sinh d)].
  double log_weight(double u) const noexcept {
    const double d = std::abs(u) - mode_;
    double lc;
    if (std::abs(d) < 1.0) {
      const double s = std::sinh(0.5 * d);
      lc = std::log1p(2.0 * s * s + tanh_mode_ * std::sinh(d));
    } else if (d > 0.0) {
      lc = d + std::log(0.5 * ((1.0 + tanh_mode_) + one_minus_tanh_mode_ * std::exp(-2.0 * d)));
    } else {
      lc = -d + std::log(0.5 * (one_minus_tanh_mode_ + (1.0 + tanh_mode_) * std::exp(2.0 * d)));
    }
    return -static_cast<double>(n_) * (d * (2.0 * mode_ + d) / (2.0 * beta_) - lc);
  }

  /// Integral of h(u) d mu, with h given in the u coordinate.
  template <class H>
  double expect_u(H&& h, quadrature::Tolerance tol = default_tolerance()) const {
    if (is_dirac()) return h(0.0);
    double total = 0.0;
    auto integrand = [&](double u) { return h(u) * std::exp(log_weight(u)); };
    tol.absolute *= mass_;
    tol.noise = std::max(tol.noise, noise_);
    for (const auto& [lo, hi] : segments_) {
      total += quadrature::integrate(integrand, lo, hi, tol, breaks_);
    }
    return total / mass_;
  }

  /// Integral of h(t) d mu(t).
  template <class H>
  double expect(H&& h, quadrature::Tolerance tol = default_tolerance()) const {
    return expect_u([&](double u) { return h(std::tanh(u)); }, tol);
  }

  /// Integral of t^p d mu, absolute tolerance 1e-12.
  double moment(int p) const;

  /// mu([a, b]) for -1 <= a <= b <= 1.
  double mass(double a, double b) const;

  /// Inverse-CDF draw of the mixing variable t.
  double sample(CounterRng& rng) const;

  std::span<const CdfNode> cdf_table() const noexcept { return table_; }
  std::span<const double> modes_u() const noexcept { return modes_; }
  std::span<const std::pair<double, double>> support_u() const noexcept { return segments_; }

  static quadrature::Tolerance default_tolerance() { return {1e-12, 1e-13, 48}; }

 private:
  double integrate_range(double lo, double hi) const;

  double beta_;
  std::uint64_t n_;
  double log_peak_ = 0.0;  // max phi
  double mode_ = 0.0;      // positive mode in u (0 for beta <= 1)
  double tanh_mode_ = 0.0;
  double one_minus_tanh_mode_ = 1.0;
  double noise_ = 1e-12;
  double mass_ = 1.0;      // integral of exp(phi - max phi) du
  std::vector<double> modes_;
  std::vector<std::pair<double, double>> segments_;
  std::vector<double> breaks_;
  std::vector<CdfNode> table_;
};

/// Process-wide cache of immutable measures keyed by (beta, n).
std::shared_ptr<const MixingMeasure> shared_measure(InverseTemperature beta, std::uint64_t n);

/// Density of mu^beta_n at t; DiracMeasure for beta = 0, DomainError for |t| >= 1.
double mixing_density(const MixingMeasure& mm, double t);
double sample_mixing(const MixingMeasure& mm, CounterRng& rng);
double mixing_moment(const MixingMeasure& mm, int p);

inline constexpr std::size_t kOracleMaxSpins = 24;

/// Exact Curie-Weiss(beta, n) probability of a +-1 configuration, n <= 24.
double exact_cw_pmf(InverseTemperature beta, std::size_t n, std::span<const int> config);

/// The same probability through the mixture integral over mu^beta_n.
double definetti_pmf_oracle(InverseTemperature beta, std::size_t n, std::span<const int> config);
double definetti_pmf_oracle(const MixingMeasure& mm, std::span<const int> config);

/// E[Y_1 ... Y_ell] for Curie-Weiss(beta, n) spins.
double correlation_exact(InverseTemperature beta, std::uint64_t n, int ell);

enum class KernelVariant { plain, perturbed };

/// t -> P_t (plain, support {-1, +1}) or the shifted kernel of the
/// supercritical construction, support (+-1 -+ c) / sqrt(1 - c^2) for t > 0 and
/// (+-1 +- c) / sqrt(1 - c^2) for t <= 0. In both cases the "plus" atom has
/// probability (1 + t) / 2.
class SpinKernel {
 public:
  static SpinKernel plain();
  static SpinKernel perturbed(InverseTemperature beta);

  KernelVariant variant() const noexcept { return variant_; }
  double beta() const noexcept { return beta_; }
  double magnetization() const noexcept { return c_; }

  /// {plus atom, minus atom} for mixing value t.
  std::pair<double, double> support(double t) const noexcept;
  double plus_probability(double t) const noexcept { return 0.5 * (1.0 + t); }

  double draw(double t, CounterRng& rng) const noexcept {
    const auto [plus, minus] = support(t);
    return rng.uniform() < plus_probability(t) ? plus : minus;
  }

  double m1(double t) const noexcept;
  double m2(double t) const noexcept;
  /// Integral of |y - m1(t)|^p dP_t(y).
  double central_first(double t, double p) const noexcept;
  /// Integral of |y^2 - m2(t)|^p dP_t(y).
  double central_second(double t, double p) const noexcept;

 private:
  SpinKernel(KernelVariant v, double beta, double c) : variant_(v), beta_(beta), c_(c) {
    scale_ = v == KernelVariant::perturbed ? 1.0 / std::sqrt(1.0 - c * c) : 1.0;
  }

  KernelVariant variant_;
  double beta_;
  double c_;
  double scale_;
};

struct SpinArray {
  std::vector<double> values;
  std::size_t size() const noexcept { return values.size(); }
};

SpinArray sample_spins(const SpinKernel& kernel, double t, std::size_t count, CounterRng& rng);

struct PerturbedMoments {
  double m1;
  double one_minus_m2;
};

/// First moment and 1 - second moment of the shifted kernel; beta > 1.
PerturbedMoments perturbed_moments(InverseTemperature beta, double t);

}  // namespace cwsc::mixing
