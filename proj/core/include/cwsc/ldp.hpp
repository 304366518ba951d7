#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cwsc/ensembles.hpp"
#include "cwsc/spectral.hpp"

namespace cwsc::ldp {

using spectral::Complex;
using spectral::ComplexMatrix;
using ensembles::SymmetricMatrix;

inline constexpr std::size_t kSchurMaxDimension = 256;

/// Components of 1/G_ii = -z - s + Y_i with Y_i = H_ii + A_i - Z1_i - Z2_i.
struct SchurDecomposition {
  std::size_t i = 0;
  Complex g_ii;
  Complex a_i;
  Complex z1;
  Complex z2;
  Complex y;
  Complex s;
  /// |1/G_ii - (H_ii - z - sum_{k,l != i} H_ik G^(i)_kl H_li)|
  double residual_raw = 0.0;
  /// |1/G_ii + z + s - Y_i|
  double residual_y = 0.0;
};

/// G from a full inverse and G^(i) from a separate inverse of the minor.
/// ScaleExceeded above kSchurMaxDimension.
SchurDecomposition schur_decompose(const SymmetricMatrix& h, Complex z, std::size_t i);
/// All i, sharing G.
std::vector<SchurDecomposition> schur_decompose_all(const SymmetricMatrix& h, Complex z);

/// G^(i)_kl = G_kl - G_ki G_il / G_ii, indexed by the kept rows in order.
ComplexMatrix minor_from_resolvent(const ComplexMatrix& g, std::size_t i);

enum class FormKind {
  /// sum_i b_i Y_i
  linear,
  /// sum_{i,j} a_ij Y_i Z_j with Z an independent copy given t
  bilinear,
  /// sum_{i != j} a_ij Y_i Y_j
  offdiag,
  /// sum_{i,j} a_ij Y_i Y_j
  full,
};

enum class CoefficientSource { synthetic, resolvent };
enum class KernelFamily { plain, perturbed };

std::string to_string(FormKind f);
FormKind parse_form(const std::string& name);
std::string to_string(CoefficientSource c);
CoefficientSource parse_coefficients(const std::string& name);

/// Value of the form for spins y (and z for the bilinear form).
/// Coefficients are row-major n x n (or length n for the linear form).
Complex evaluate_form(FormKind form, const std::vector<Complex>& coeff, const std::vector<double>& y,
                      const std::vector<double>& z);

struct BilinearConfig {
  FormKind form = FormKind::offdiag;
  CoefficientSource source = CoefficientSource::synthetic;
  KernelFamily kernel = KernelFamily::plain;
  double beta = 0.0;
  /// Fixed mixing value; otherwise t ~ mu^beta_{N^2} per replica.
  std::optional<double> fixed_t;
  int p = 2;
  std::vector<std::size_t> n_grid;
  std::size_t replicas = 200;
  /// Defaults: A_p = sqrt(p), mu_p = 2.
  std::optional<double> a_p;
  double mu_p = 2.0;
  /// Spectral parameter of the resolvent coefficients.
  Complex z{0.5, 0.5};
  std::uint64_t master_seed = 0;
  std::string experiment = "ldp";
  unsigned workers = 1;
};

struct BilinearCheck {
  std::size_t n = 0;
  int p = 2;
  double a_p = 0.0;
  double mu_p = 0.0;
  /// (mean |form|^p)^{1/p}
  double empirical_pnorm = 0.0;
  /// Mean over replicas of sqrt(sum |coeff|^2).
  double bound_scale = 0.0;
  /// (mean |form / sqrt(sum |coeff|^2)|^p)^{1/p}
  double normalized_pnorm = 0.0;
  /// (mean |m1(t)|^p)^{1/p}
  double m1_pnorm = 0.0;
  /// A_p mu_p + sqrt(N) m1, squared for two-index forms.
  double bound_factor = 0.0;
  bool within_bound() const noexcept { return normalized_pnorm <= bound_factor; }
};

std::vector<BilinearCheck> bilinear_pnorm_experiment(const BilinearConfig& config);

struct QuadraticConfig {
  ensembles::EnsembleSpec ensemble;
  std::vector<std::size_t> n_grid;
  std::size_t replicas = 400;
  std::vector<double> epsilons{0.25};
  Complex z{0.5, 0.5};
  std::uint64_t master_seed = 0;
  std::string experiment = "ldp";
  unsigned workers = 1;
};

struct QuadraticCell {
  std::size_t n = 0;
  /// Fraction of (replica, i) with |Z1_i| > N^eps ((1/N^2) sum_kl |G^(i)_kl|^2)^{1/2}, per epsilon.
  std::vector<double> tail_z1;
  /// Same for |Z2_i| against ((1/N^2) sum_k |G^(i)_kk|^2)^{1/2}.
  std::vector<double> tail_z2;
  /// Per replica: max_i of the two ratios.
  std::vector<double> max_ratio_z1;
  std::vector<double> max_ratio_z2;
  std::vector<std::uint64_t> seeds;
};

struct QuadraticRatios {
  /// |Z1_i| / ((1/N^2) sum_kl |G^(i)_kl|^2)^{1/2} for each i.
  std::vector<double> z1;
  /// |Z2_i| / ((1/N^2) sum_k |G^(i)_kk|^2)^{1/2} for each i.
  std::vector<double> z2;
};

/// Both ratios for every row of one matrix; G^(i) from the rank-one identity.
QuadraticRatios quadratic_ratios(const SymmetricMatrix& h, Complex z);

std::vector<QuadraticCell> quadratic_domination_experiment(const QuadraticConfig& config);

/// Number of eigenvalues with |lambda| > rel * max |lambda|.
std::size_t numerical_rank(const SymmetricMatrix& e, double rel = 1e-10);

struct RankGap {
  double gap = 0.0;
  double bound = 0.0;
  std::size_t rank = 0;
  bool holds() const noexcept { return gap <= bound; }
};

/// |tr (Y - z)^{-1} - tr (Y + E - z)^{-1}| from eigenvalues, against 2k / eta.
RankGap rank_perturbation_gap(const SymmetricMatrix& y, const SymmetricMatrix& e, Complex z);

/// sum_r s_r u_r u_r' with standard normal u_r and s_r uniform in [-scale, scale].
SymmetricMatrix random_low_rank(std::size_t n, std::size_t k, double scale, CounterRng& rng);

}  // namespace cwsc::ldp
