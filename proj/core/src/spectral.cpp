#include "cwsc/spectral.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>

namespace cwsc::spectral {

Spectrum::Spectrum(std::vector<double> eigenvalues) : values_(std::move(eigenvalues)) {
  std::sort(values_.begin(), values_.end());
}

double Spectrum::sum() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

Spectrum Spectrum::scaled(double factor) const {
  std::vector<double> v = values_;
  for (double& x : v) x *= factor;
  return Spectrum(std::move(v));
}

double Spectrum::cdf(double x) const noexcept {
  const auto count = std::upper_bound(values_.begin(), values_.end(), x) - values_.begin();
  return static_cast<double>(count) / static_cast<double>(values_.size());
}

double Spectrum::cdf_left(double x) const noexcept {
  const auto count = std::lower_bound(values_.begin(), values_.end(), x) - values_.begin();
  return static_cast<double>(count) / static_cast<double>(values_.size());
}

namespace {

// Implicit-shift QL on a symmetric tridiagonal matrix. `e` holds the
// off-diagonal in e[0..n-2]; e[n-1] is scratch. If `z` is non-null the
// rotations are applied to its columns (row-major n x n).
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, double* z, std::size_t n) {
  if (n == 0) return;
  e[n - 1] = 0.0;
  const std::size_t limit = 50 * n;
  std::size_t sweeps = 0;
  for (std::size_t l = 0; l < n; ++l) {
    std::size_t m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (++sweeps > limit) fail(ErrorKind::NumericalFailure, "QL iteration did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        bool underflow = false;
        for (std::size_t ii = m; ii-- > l;) {
          double f = s * e[ii];
          const double b = c * e[ii];
          r = std::hypot(f, g);
          e[ii + 1] = r;
          if (r == 0.0) {
            d[ii + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[ii + 1] - p;
          r = (d[ii] - g) * s + 2.0 * c * b;
          p = s * r;
          d[ii + 1] = g + p;
          g = c * r - b;
          if (z != nullptr) {
            for (std::size_t k = 0; k < n; ++k) {
              double* row = z + k * n;
              f = row[ii + 1];
              row[ii + 1] = s * row[ii] + c * f;
              row[ii] = c * row[ii] - s * f;
            }
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e) {
  const std::size_t n = d.size();
  if (n == 0) return d;
  if (e.size() + 1 != n) fail(ErrorKind::DomainError, "off-diagonal length must be n - 1");
  e.push_back(0.0);
  tridiagonal_ql(d, e, nullptr, n);
  std::sort(d.begin(), d.end());
  return d;
}

EigenSystem symmetric_eigen(std::span<const double> dense, std::size_t n, bool want_vectors) {
  if (dense.size() != n * n) fail(ErrorKind::DomainError, "dense matrix size mismatch");
  for (double v : dense) {
    if (!std::isfinite(v)) fail(ErrorKind::DomainError, "matrix has non-finite entries");
  }
  EigenSystem out;
  out.n = n;
  if (n == 0) return out;
  std::vector<double> a(dense.begin(), dense.end());
  std::vector<double> d(n, 0.0);
  std::vector<double> e(n, 0.0);
  std::vector<double> tau(n, 0.0);
  std::vector<double> v(n, 0.0);
  std::vector<double> p(n, 0.0);

  // Householder reduction on the lower triangle. The rank-2 update of step k
  // is deferred and fused with the symmetric matrix-vector product of step
  // k + 1, so each step streams the trailing block once.
  std::vector<double> pv_prev(n, 0.0);
  std::vector<double> pw_prev(n, 0.0);
  bool pending = false;
  auto apply_pending = [&](std::size_t i, std::size_t j) {
    return pending ? pv_prev[i] * pw_prev[j] + pw_prev[i] * pv_prev[j] : 0.0;
  };
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t lo = k + 1;
    // Column k (rows >= k) receives the deferred update first.
    for (std::size_t i = k; i < n; ++i) a[i * n + k] -= apply_pending(i, k);
    d[k] = a[k * n + k];
    const double x0 = a[lo * n + k];
    double sigma = 0.0;
    for (std::size_t i = lo + 1; i < n; ++i) sigma += a[i * n + k] * a[i * n + k];
    double t = 0.0;
    if (sigma == 0.0) {
      e[k] = x0;
      std::fill(v.begin() + lo, v.end(), 0.0);
    } else {
      const double norm = std::sqrt(x0 * x0 + sigma);
      const double head = x0 <= 0.0 ? norm : -norm;
      const double v0 = x0 - head;
      v[lo] = 1.0;
      for (std::size_t i = lo + 1; i < n; ++i) v[i] = a[i * n + k] / v0;
      t = (head - x0) / head;
      e[k] = head;
    }
    tau[k] = t;
    // The upper part of row k is free; it keeps the reflector.
    for (std::size_t j = lo + 1; j < n; ++j) a[k * n + j] = v[j];

    // One pass: finish the deferred update of A22 and accumulate p = A22 v.
    std::fill(p.begin() + lo, p.end(), 0.0);
    for (std::size_t i = lo; i < n; ++i) {
      double* row = a.data() + i * n;
      const double vi = pending ? pv_prev[i] : 0.0;
      const double wi = pending ? pw_prev[i] : 0.0;
      const double xi = v[i];
      double acc = 0.0;
      if (pending) {
        for (std::size_t j = lo; j < i; ++j) {
          const double r = row[j] - (vi * pw_prev[j] + wi * pv_prev[j]);
          row[j] = r;
          acc += r * v[j];
          p[j] += r * xi;
        }
        row[i] -= 2.0 * vi * wi;
      } else {
        for (std::size_t j = lo; j < i; ++j) {
          const double r = row[j];
          acc += r * v[j];
          p[j] += r * xi;
        }
      }
      p[i] += acc + row[i] * xi;
    }
    if (t == 0.0) {
      pending = false;
      continue;
    }
    // w = t A22 v - (t^2 / 2)(v' A22 v) v; A22 -= v w' + w v' deferred.
    double pvdot = 0.0;
    for (std::size_t i = lo; i < n; ++i) {
      p[i] *= t;
      pvdot += p[i] * v[i];
    }
    const double half = 0.5 * t * pvdot;
    for (std::size_t i = lo; i < n; ++i) {
      pv_prev[i] = v[i];
      pw_prev[i] = p[i] - half * v[i];
    }
    pending = true;
  }
  if (n >= 2) {
    for (std::size_t i = n - 2; i < n; ++i) {
      for (std::size_t j = n - 2; j <= i; ++j) a[i * n + j] -= apply_pending(i, j);
    }
    d[n - 2] = a[(n - 2) * n + (n - 2)];
    e[n - 2] = a[(n - 1) * n + (n - 2)];
  }
  d[n - 1] = a[(n - 1) * n + (n - 1)];

  std::vector<double> q;
  if (want_vectors) {
    q.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) q[i * n + i] = 1.0;
    for (std::size_t kk = n >= 2 ? n - 2 : 0; kk-- > 0;) {
      if (tau[kk] == 0.0) continue;
      const std::size_t lo = kk + 1;
      const double* rowk = a.data() + kk * n;
      v[lo] = 1.0;
      for (std::size_t j = lo + 1; j < n; ++j) v[j] = rowk[j];
      // Q_sub -= tau v (v' Q_sub)
      std::fill(p.begin(), p.end(), 0.0);
      for (std::size_t i = lo; i < n; ++i) {
        const double* row = q.data() + i * n;
        for (std::size_t j = lo; j < n; ++j) p[j] += v[i] * row[j];
      }
      for (std::size_t i = lo; i < n; ++i) {
        double* row = q.data() + i * n;
        const double s = tau[kk] * v[i];
        for (std::size_t j = lo; j < n; ++j) row[j] -= s * p[j];
      }
    }
  }

  tridiagonal_ql(d, e, want_vectors ? q.data() : nullptr, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.values[k] = d[order[k]];
  if (want_vectors) {
    out.vectors.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) out.vectors[i * n + k] = q[i * n + order[k]];
    }
  }
  return out;
}

Spectrum eigenvalues(std::span<const double> dense, std::size_t n) {
  return Spectrum(symmetric_eigen(dense, n, false).values);
}

Spectrum eigenvalues(const SymmetricMatrix& matrix) { return eigenvalues(matrix.data(), matrix.dimension()); }

double max_eigen_residual(const SymmetricMatrix& matrix, const EigenSystem& system) {
  const std::size_t n = matrix.dimension();
  if (system.vectors.size() != n * n) fail(ErrorKind::DomainError, "eigen system carries no vectors");
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += matrix(i, j) * system.vectors[j * n + k];
      const double r = acc - system.values[k] * system.vectors[i * n + k];
      norm2 += r * r;
    }
    worst = std::max(worst, std::sqrt(norm2));
  }
  return worst;
}

Complex empirical_stieltjes(std::span<const double> eigenvalues, Complex z) {
  double re = 0.0;
  double im = 0.0;
  const double e = z.real();
  const double eta = z.imag();
  for (double lambda : eigenvalues) {
    const double a = lambda - e;
    const double inv = 1.0 / (a * a + eta * eta);
    re += a * inv;
    im += eta * inv;
  }
  const double n = static_cast<double>(eigenvalues.size());
  return {re / n, im / n};
}

Complex empirical_stieltjes(const Spectrum& spectrum, const SpectralPoint& z) {
  return empirical_stieltjes(spectrum.eigenvalues(), z.z());
}

Complex semicircle_stieltjes(Complex z) {
  // (z + w)(-z + w) = -4 with w = sqrt(z - 2) sqrt(z + 2) ~ z at infinity.
  const Complex w = std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
  return -2.0 / (z + w);
}

double semicircle_density(double e) {
  const double r = 4.0 - e * e;
  return r > 0.0 ? std::sqrt(r) / (2.0 * std::numbers::pi) : 0.0;
}

double semicircle_cdf(double e) {
  if (e <= -2.0) return 0.0;
  if (e >= 2.0) return 1.0;
  const double x = std::clamp(e / 2.0, -1.0, 1.0);
  const double v = 0.5 + e * std::sqrt(std::max(0.0, 4.0 - e * e)) / (4.0 * std::numbers::pi) +
                   std::asin(x) / std::numbers::pi;
  return std::clamp(v, 0.0, 1.0);
}

double semicircle_interval(double a, double b) {
  if (b < a) std::swap(a, b);
  return semicircle_cdf(b) - semicircle_cdf(a);
}

double semicircle_quantile(double p) {
  if (p <= 0.0) return -2.0;
  if (p >= 1.0) return 2.0;
  double lo = -2.0;
  double hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (semicircle_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double cauchy_smoothed(std::span<const double> eigenvalues, double eta, double e) {
  if (!(eta > 0.0)) fail(ErrorKind::DomainError, "bandwidth must be positive");
  double sum = 0.0;
  for (double lambda : eigenvalues) {
    const double a = lambda - e;
    sum += eta / (a * a + eta * eta);
  }
  return sum / (std::numbers::pi * static_cast<double>(eigenvalues.size()));
}

double cauchy_smoothed(const Spectrum& spectrum, double eta, double e) {
  return cauchy_smoothed(spectrum.eigenvalues(), eta, e);
}

Complex ComplexMatrix::trace() const noexcept {
  Complex s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += data_[i * n_ + i];
  return s;
}

ComplexMatrix invert(const ComplexMatrix& a) {
  const std::size_t n = a.dimension();
  ComplexMatrix lu = a;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto mag = [](const Complex& c) { return std::abs(c.real()) + std::abs(c.imag()); };

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (mag(lu(i, k)) > mag(lu(pivot, k))) pivot = i;
    }
    if (mag(lu(pivot, k)) == 0.0) fail(ErrorKind::NumericalFailure, "singular matrix in LU");
    if (pivot != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(pivot, j));
      std::swap(perm[k], perm[pivot]);
    }
    const Complex inv = 1.0 / lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const Complex f = lu(i, k) * inv;
      lu(i, k) = f;
      Complex* ri = &lu(i, 0);
      const Complex* rk = &lu(k, 0);
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= f * rk[j];
    }
  }

  // Rows of P I, then forward and backward substitution on whole rows.
  ComplexMatrix x(n);
  for (std::size_t i = 0; i < n; ++i) x(i, perm[i]) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    Complex* xi = &x(i, 0);
    for (std::size_t k = 0; k < i; ++k) {
      const Complex f = lu(i, k);
      if (f == Complex(0.0)) continue;
      const Complex* xk = &x(k, 0);
      for (std::size_t j = 0; j < n; ++j) xi[j] -= f * xk[j];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    Complex* xi = &x(i, 0);
    for (std::size_t k = i + 1; k < n; ++k) {
      const Complex f = lu(i, k);
      const Complex* xk = &x(k, 0);
      for (std::size_t j = 0; j < n; ++j) xi[j] -= f * xk[j];
    }
    const Complex inv = 1.0 / lu(i, i);
    for (std::size_t j = 0; j < n; ++j) xi[j] *= inv;
  }
  return x;
}

ComplexMatrix resolvent(const SymmetricMatrix& matrix, Complex z) {
  const std::size_t n = matrix.dimension();
  if (n > kResolventMaxDimension) fail(ErrorKind::ScaleExceeded, "dense resolvent limited to N <= 512");
  if (!(z.imag() > 0.0)) fail(ErrorKind::DomainError, "resolvent needs Im z > 0");
  ComplexMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = matrix(i, j);
    a(i, i) -= z;
  }
  return invert(a);
}

ComplexMatrix minor_resolvent(const SymmetricMatrix& matrix, std::span<const std::size_t> exclude, Complex z) {
  const std::size_t n = matrix.dimension();
  std::vector<bool> drop(n, false);
  for (std::size_t i : exclude) {
    if (i >= n) fail(ErrorKind::DomainError, "excluded index out of range");
    drop[i] = true;
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (!drop[i]) keep.push_back(i);
  }
  SymmetricMatrix sub(keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    for (std::size_t b = a; b < keep.size(); ++b) sub.set(a, b, matrix(keep[a], keep[b]));
  }
  return resolvent(sub, z);
}

double resolvent_residual(const SymmetricMatrix& matrix, Complex z, const ComplexMatrix& g) {
  const std::size_t n = matrix.dimension();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Complex acc = -z * g(i, j);
      for (std::size_t k = 0; k < n; ++k) acc += matrix(i, k) * g(k, j);
      if (i == j) acc -= 1.0;
      worst = std::max(worst, std::abs(acc));
    }
  }
  return worst;
}

}  // namespace cwsc::spectral
