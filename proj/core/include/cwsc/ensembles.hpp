#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwsc/mixing.hpp"
#include "cwsc/rng.hpp"

namespace cwsc::ensembles {

enum class Variant { curie_weiss, rademacher, perturbed_supercritical, custom };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

inline constexpr std::size_t kDefaultMaxDimension = 4096;

struct EnsembleSpec {
  Variant variant = Variant::curie_weiss;
  double beta = 0.0;
  std::size_t dimension = 2;
  std::uint64_t seed = 0;
  /// Extra factor applied to every entry, e.g. (1 - c^2)^{-1/2}.
  std::optional<double> rescale;

  /// Checks the variant/beta/dimension invariants.
  void validate(std::size_t max_dimension = kDefaultMaxDimension) const;
};

/// Dense real symmetric matrix, row-major, both triangles stored. Builders
/// write the upper triangle and mirror it.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t dimension() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

  /// Sets (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double v) noexcept {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * n_, n_}; }

  /// Realized mixing variable t (NaN when not applicable).
  double mixing_draw = 0.0;
  /// Sum of the raw upper-triangle spins; diagnostics only.
  double spin_sum = 0.0;
  Variant variant = Variant::curie_weiss;
  double beta = 0.0;
  std::uint64_t seed = 0;

  double max_asymmetry() const noexcept;
  double frobenius_norm() const noexcept;
  double trace() const noexcept;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b);
SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b);
SymmetricMatrix operator*(double s, const SymmetricMatrix& a);

/// Flat binary form, host byte order:
///   "CWSCMAT" + NUL, u32 version (1), u32 variant, u64 N, f64 beta, u64 seed, f64 t,
///   then the upper triangle row by row (j >= i) as f64.
void write_matrix(std::ostream& out, const SymmetricMatrix& m);
/// IoError on a bad header or short payload.
SymmetricMatrix read_matrix(std::istream& in);

/// Curie-Weiss(beta) or Rademacher matrix: t ~ mu^beta_{N^2}, then the
/// N(N+1)/2 upper-triangle spins i.i.d. P_t, scaled by 1/sqrt(N).
/// Draw order: t first, then the upper triangle row by row.
SymmetricMatrix build(const EnsembleSpec& spec, CounterRng& rng);
SymmetricMatrix build(const EnsembleSpec& spec);

enum class PerturbationPath {
  /// Build X_N from P_t, then subtract sign(t) c times the ones matrix and rescale.
  shift,
  /// Draw each entry directly from the shifted kernel.
  kernel,
};

/// Z_N / sqrt(N) for beta > 1. Both paths consume the rng identically and
/// produce the same matrix.
SymmetricMatrix build_perturbed(const EnsembleSpec& spec, CounterRng& rng,
                                PerturbationPath path = PerturbationPath::kernel);
SymmetricMatrix build_perturbed(const EnsembleSpec& spec, PerturbationPath path = PerturbationPath::kernel);

/// User-supplied mixing space: how to draw t, how to draw a spin given t, and
/// its first two conditional moments.
struct MixingSpace {
  std::function<double(CounterRng&)> sample_t;
  std::function<double(double, CounterRng&)> sample_spin;
  std::function<double(double)> m1;
  std::function<double(double)> m2;
};

SymmetricMatrix custom_ensemble(const MixingSpace& mixing, std::size_t n, CounterRng& rng);

/// Mixing description able to integrate against mu_N for each matrix size N.
struct QuadratureMixing {
  std::string name;
  /// Integral of h(t) d mu_N(t).
  std::function<double(std::size_t, const std::function<double(double)>&)> expect;
  std::function<double(double)> m1;
  std::function<double(double)> m2;
  /// Integral of |y - m1(t)|^p dP_t and |y^2 - m2(t)|^p dP_t.
  std::function<double(double, double)> central_first;
  std::function<double(double, double)> central_second;
  double t_min = -1.0;
  double t_max = 1.0;
};

/// The Curie-Weiss mixing of the matrix ensemble (mu^beta_{N^2}) with the plain kernel.
QuadratureMixing plain_cw_mixing(mixing::InverseTemperature beta);
/// The same mixture with the shifted supercritical kernel.
QuadratureMixing perturbed_cw_mixing(mixing::InverseTemperature beta);

struct ConditionRow {
  int p = 0;
  std::size_t n = 0;
  double first_moment = 0.0;    // N^{p/2} int |m1|^p dmu_N
  double second_moment = 0.0;   // N^{p/2} int |1 - m2|^p dmu_N
  double central_first = 0.0;   // sup_t int |y - m1|^p dP_t
  double central_second = 0.0;  // sup_t int |y^2 - m2|^p dP_t
};

struct ConditionTrend {
  int p = 0;
  bool first_bounded = true;
  bool second_bounded = true;
  bool central_first_bounded = true;
  bool central_second_bounded = true;
  bool all() const noexcept { return first_bounded && second_bounded && central_first_bounded && central_second_bounded; }
};

struct ConditionReport {
  std::vector<ConditionRow> rows;
  std::vector<ConditionTrend> trends;
  bool all_bounded() const noexcept;
};

/// A statistic counts as bounded over the N-grid when no later value exceeds
/// this factor times the first one.
inline constexpr double kGrowthFactor = 1.5;

ConditionReport check_cw_type_conditions(const QuadratureMixing& mixing, std::span<const std::size_t> n_grid,
                                         std::span<const int> p_list, std::size_t t_grid_points = 2001);

}  // namespace cwsc::ensembles
