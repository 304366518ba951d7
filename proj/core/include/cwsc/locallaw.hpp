#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwsc/ensembles.hpp"
#include "cwsc/spectral.hpp"

namespace cwsc::locallaw {

using spectral::Complex;
using spectral::SpectralPoint;
using spectral::Spectrum;
using ensembles::SymmetricMatrix;

enum class DomainKind { full, bulk, encompassing };

std::string to_string(DomainKind kind);
DomainKind parse_domain(const std::string& name);

struct Range {
  double lo;
  double hi;
};

struct GridSpec {
  std::size_t e_points = 24;
  std::size_t eta_points = 16;
};

/// Spectral domain at scale N.
///   full:         E in [-1/tau, 1/tau],   eta in [N^{tau-1}, 1/tau]
///   bulk:         E in [-2+tau, 2-tau],   eta in [N^{tau-1}, 1/tau]
///   encompassing: E in [-1/tau, 1/tau],   eta in [1/N, 1/tau]
/// With a lattice exponent L the domain is intersected with N^{-L}(Z + iZ).
class Domain {
 public:
  Domain(double tau, std::size_t n, DomainKind kind, std::optional<int> lattice_exponent = std::nullopt);

  double tau() const noexcept { return tau_; }
  std::size_t n() const noexcept { return n_; }
  DomainKind kind() const noexcept { return kind_; }
  std::optional<int> lattice_exponent() const noexcept { return lattice_; }

  Range e_range() const noexcept { return e_; }
  Range eta_range() const noexcept { return eta_; }
  bool contains(Complex z) const noexcept;

  /// Linear in E, geometric in eta. A single eta point sits at the lower edge.
  std::vector<SpectralPoint> grid(GridSpec spec = {}) const;

  /// Spacing N^{-L} of the full lattice. ConfigError without a lattice exponent.
  double lattice_spacing() const;
  /// Number of lattice points inside the domain.
  double lattice_count() const;

 private:
  double tau_;
  std::size_t n_;
  DomainKind kind_;
  std::optional<int> lattice_;
  Range e_;
  Range eta_;
};

/// Points of a lattice net. When the full lattice exceeds the cap it is
/// thinned to every `stride`-th lattice line in each direction.
struct LatticeNet {
  std::vector<SpectralPoint> points;
  double spacing = 0.0;
  std::size_t stride = 1;
  /// Largest distance from a domain point to the nearest net point.
  double covering_radius = 0.0;
};

inline constexpr std::size_t kLatticeCap = 100000;

LatticeNet lattice_net(const Domain& domain, std::size_t cap = kLatticeCap);

enum class ErrorTermKind { psi1, psi2 };

std::string to_string(ErrorTermKind kind);
ErrorTermKind parse_error_term(const std::string& name);

/// psi1 = (N eta)^{-1/2} / sqrt(kappa + eta + (N eta)^{-1/2}); psi2 = (N eta)^{-1/2}.
double error_term(ErrorTermKind kind, const SpectralPoint& z, std::size_t n);

/// |s - m| from eigenvalues, no resolvent needed.
double s_minus_m(const Spectrum& spectrum, const SpectralPoint& z);
double s_minus_m(std::span<const double> eigenvalues, Complex z);

struct LambdaStat {
  /// max_{ij} |G_ij - m delta_ij|; empty above the resolvent cap.
  std::optional<double> lambda;
  /// max_{i != j} |G_ij|
  std::optional<double> lambda_star;
  /// max_i |G_ii - m|
  std::optional<double> max_diagonal;
  double s_minus_m = 0.0;

  /// Lambda, or ScaleExceeded when it was not computed.
  double require_lambda() const;
};

LambdaStat lambda_stat(const SymmetricMatrix& matrix, const SpectralPoint& z);
/// Same statistics from a precomputed resolvent.
LambdaStat lambda_stat(const spectral::ComplexMatrix& g, const SpectralPoint& z);

enum class Statistic { lambda, s_minus_m, max };

std::string to_string(Statistic s);
Statistic parse_statistic(const std::string& name);

/// Per-replica seed: stable hash of (master seed, experiment id, N, replica).
std::uint64_t replica_seed(std::uint64_t master_seed, const std::string& experiment, std::size_t n,
                           std::size_t replica);

/// Builds one replica of the ensemble described by `tmpl` at dimension n.
SymmetricMatrix build_replica(const ensembles::EnsembleSpec& tmpl, std::size_t n, std::uint64_t seed);

/// Spectra of `replicas` independent draws, seeds from replica_seed.
std::vector<Spectrum> sample_spectra(const ensembles::EnsembleSpec& tmpl, std::size_t n, std::size_t replicas,
                                     std::uint64_t master_seed, const std::string& experiment, unsigned workers);

/// Supplies the replica spectra for dimension n (lets callers share spectra).
using SpectrumProvider = std::function<std::vector<Spectrum>(std::size_t n)>;

struct DominationConfig {
  /// Variant, beta and rescale; dimension and seed are set per replica.
  ensembles::EnsembleSpec ensemble;
  std::vector<double> epsilons{0.2};
  std::vector<std::size_t> n_grid;
  std::size_t replicas = 400;
  double tau = 0.5;
  DomainKind domain = DomainKind::bulk;
  GridSpec grid;
  /// Fixed evaluation points replacing the domain grid.
  std::vector<Complex> points;
  Statistic statistic = Statistic::s_minus_m;
  ErrorTermKind error_term = ErrorTermKind::psi1;
  std::uint64_t master_seed = 0;
  std::string experiment = "domination";
  unsigned workers = 1;
};

struct DominationCell {
  std::size_t n = 0;
  std::vector<SpectralPoint> points;
  std::vector<double> psi;
  /// values[r * points.size() + p]
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  /// tail_frequency[k][p] for epsilons[k]
  std::vector<std::vector<double>> tail_frequency;
  std::vector<double> max_tail_frequency;
  /// Median over replicas of max_p value * sqrt(N eta_p).
  double median_scaled = 0.0;
};

struct DominationReport {
  std::vector<double> epsilons;
  std::vector<DominationCell> cells;

  /// max tail frequency non-increasing along the N grid for epsilons[k].
  bool tail_non_increasing(std::size_t k) const;
  bool median_non_increasing() const;
};

/// Evaluation points of one N: the fixed points if given, else the domain grid.
std::vector<SpectralPoint> domination_points(const DominationConfig& config, std::size_t n);

/// Statistic at every point for one replica. `spectrum` is used for |s - m| when given.
std::vector<double> domination_values(const DominationConfig& config, std::size_t n,
                                      std::span<const SpectralPoint> points, std::uint64_t seed,
                                      const Spectrum* spectrum = nullptr);

/// Tail frequencies and medians from values[r * points.size() + p].
DominationCell summarize_domination(const DominationConfig& config, std::size_t n, std::vector<SpectralPoint> points,
                                    std::vector<double> values, std::vector<std::uint64_t> seeds);

/// Frequency of {stat(z) > N^eps psi(z)} across replicas, per N and grid point.
/// Spectra come from `provider` when given and the statistic is |s - m|.
DominationReport domination_experiment(const DominationConfig& config, const SpectrumProvider& provider = {});

/// sup over the net of |s - m| / psi.
double simultaneous_sup_stat(const Spectrum& spectrum, const LatticeNet& net, ErrorTermKind kind);
/// sup over `points` of max(Lambda, |s - m|) / psi using resolvents.
double simultaneous_sup_stat(const SymmetricMatrix& matrix, std::span<const SpectralPoint> points, ErrorTermKind kind);

struct IntervalStat {
  double sup_deviation = 0.0;
  double a = 0.0;
  double b = 0.0;
  bool a_closed = false;
  bool b_closed = false;
};

/// sup over intervals I of |sigma_N(I) - sigma(I)|, as sup D - inf D with
/// D = F_N - F_sigma at eigenvalues and their left limits.
IntervalStat interval_sup(const Spectrum& spectrum);
/// Same with I restricted to [-2 + tau, 2 - tau].
IntervalStat interval_sup_bulk(const Spectrum& spectrum, double tau);

/// sup |sigma_N(I) / sigma(I) - 1| over closed intervals in [-2 + tau, 2 - tau]
/// with endpoints on a lattice of spacing N^{tau - 1/2} / 10 and length at
/// least N^{tau - 1/2}.
double relative_interval_stat(const Spectrum& spectrum, double tau);
/// The same ratio for one interval [a, b].
double relative_deviation(const Spectrum& spectrum, double a, double b);

inline constexpr double kKernelGridMaxStep = 0.01;

/// E-grid over [-1/tau, 1/tau] with spacing at most min(eta / 10, kKernelGridMaxStep).
std::vector<double> kernel_grid(double eta, double tau);
/// sup over the grid of |(1/pi) Im s(E + i eta) - f_sigma(E)|.
double kernel_distance(const Spectrum& spectrum, double eta, double tau);
/// Same with s replaced by m.
double kernel_distance_semicircle(double eta, std::span<const double> grid);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  double r_squared = 1.0;
};

/// Least squares of log y against log x; needs at least 2 points.
SlopeFit loglog_fit(std::span<const double> x, std::span<const double> y);
/// Decay exponent of a statistic over an N grid; ConfigError below 4 points.
SlopeFit decay_slope(std::span<const double> n, std::span<const double> values);

double median(std::vector<double> values);

}  // namespace cwsc::locallaw
