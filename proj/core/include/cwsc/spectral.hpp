#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cwsc/ensembles.hpp"

namespace cwsc::spectral {

using Complex = std::complex<double>;
using ensembles::SymmetricMatrix;

/// z = E + i eta in the upper half-plane.
class SpectralPoint {
 public:
  SpectralPoint(double e, double eta) : e_(e), eta_(eta) {
    if (!(eta > 0.0)) fail(ErrorKind::DomainError, "spectral point needs eta > 0");
  }
  double e() const noexcept { return e_; }
  double eta() const noexcept { return eta_; }
  /// ||E| - 2|
  double kappa() const noexcept { return std::abs(std::abs(e_) - 2.0); }
  Complex z() const noexcept { return {e_, eta_}; }

 private:
  double e_;
  double eta_;
};

/// Sorted eigenvalues of one matrix.
class Spectrum {
 public:
  Spectrum() = default;
  /// Sorts the input.
  explicit Spectrum(std::vector<double> eigenvalues);

  std::span<const double> eigenvalues() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double sum() const noexcept;
  /// Every eigenvalue multiplied by `factor` (factor > 0 keeps the order).
  Spectrum scaled(double factor) const;

  /// Fraction of eigenvalues <= x, and < x.
  double cdf(double x) const noexcept;
  double cdf_left(double x) const noexcept;

 private:
  std::vector<double> values_;
};

/// Eigenvalues and (optionally) orthonormal eigenvectors, row-major with
/// eigenvector k stored in column k.
struct EigenSystem {
  std::vector<double> values;
  std::vector<double> vectors;
  std::size_t n = 0;
};

/// Householder tridiagonalization followed by implicit-shift QL.
/// NumericalFailure if QL needs more than 50 N sweeps.
EigenSystem symmetric_eigen(std::span<const double> dense, std::size_t n, bool want_vectors);

Spectrum eigenvalues(const SymmetricMatrix& matrix);
Spectrum eigenvalues(std::span<const double> dense, std::size_t n);

/// max_k ||H v_k - lambda_k v_k||_2.
double max_eigen_residual(const SymmetricMatrix& matrix, const EigenSystem& system);

/// Eigenvalues of a symmetric tridiagonal matrix (diagonal d, off-diagonal e of length n-1).
std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e);

/// (1/N) sum 1 / (lambda_i - z).
Complex empirical_stieltjes(const Spectrum& spectrum, const SpectralPoint& z);
Complex empirical_stieltjes(std::span<const double> eigenvalues, Complex z);

/// m(z) = (-z + sqrt(z^2 - 4)) / 2 on the branch with Im m > 0.
Complex semicircle_stieltjes(Complex z);
inline Complex semicircle_stieltjes(const SpectralPoint& z) { return semicircle_stieltjes(z.z()); }

double semicircle_density(double e);
double semicircle_cdf(double e);
/// sigma([a, b]); endpoints may be infinite.
double semicircle_interval(double a, double b);
/// Quantile function of the semicircle law, p in [0, 1].
double semicircle_quantile(double p);

/// (1/pi) Im s(E + i eta): the Cauchy-kernel smoothing of the ESD at bandwidth eta.
double cauchy_smoothed(const Spectrum& spectrum, double eta, double e);
double cauchy_smoothed(std::span<const double> eigenvalues, double eta, double e);

inline constexpr std::size_t kResolventMaxDimension = 512;

/// Dense complex N x N matrix, row-major.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  explicit ComplexMatrix(std::size_t n) : n_(n), data_(n * n) {}
  std::size_t dimension() const noexcept { return n_; }
  Complex& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  std::span<const Complex> data() const noexcept { return data_; }
  Complex trace() const noexcept;

 private:
  std::size_t n_ = 0;
  std::vector<Complex> data_;
};

/// Inverse of a dense complex matrix by LU with partial pivoting.
ComplexMatrix invert(const ComplexMatrix& a);

/// G(z) = (H - z)^{-1}; ScaleExceeded above kResolventMaxDimension.
ComplexMatrix resolvent(const SymmetricMatrix& matrix, Complex z);

/// Resolvent of H with the rows/columns in `exclude` removed. Indices of the
/// result follow the kept rows in increasing order.
ComplexMatrix minor_resolvent(const SymmetricMatrix& matrix, std::span<const std::size_t> exclude, Complex z);

/// max_{ij} |((H - z) G - I)_{ij}|.
double resolvent_residual(const SymmetricMatrix& matrix, Complex z, const ComplexMatrix& g);

}  // namespace cwsc::spectral
