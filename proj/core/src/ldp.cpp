#include "cwsc/ldp.hpp"

#include <algorithm>
#include <cmath>

#include "cwsc/locallaw.hpp"
#include "cwsc/mixing.hpp"
#include "cwsc/parallel.hpp"

namespace cwsc::ldp {

namespace {

SchurDecomposition decompose(const SymmetricMatrix& h, Complex z, std::size_t i, const ComplexMatrix& g,
                             const ComplexMatrix& gi) {
  const std::size_t n = h.dimension();
  const double nd = static_cast<double>(n);
  SchurDecomposition out;
  out.i = i;
  out.g_ii = g(i, i);
  out.s = g.trace() / nd;
  Complex a = 0.0;
  for (std::size_t k = 0; k < n; ++k) a += g(k, i) * g(i, k);
  out.a_i = a / (nd * out.g_ii);

  // Minor indices skip row/column i.
  auto full = [i](std::size_t k) { return k < i ? k : k + 1; };
  Complex quad = 0.0;
  Complex z1 = 0.0;
  Complex z2 = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double hik = h(i, full(k));
    for (std::size_t l = 0; l + 1 < n; ++l) {
      const Complex term = hik * gi(k, l) * h(full(l), i);
      quad += term;
      if (k != l) z1 += term;
    }
    z2 += (hik * hik - 1.0 / nd) * gi(k, k);
  }
  out.z1 = z1;
  out.z2 = z2;
  out.y = h(i, i) + out.a_i - (z1 + z2);
  const Complex inv = 1.0 / out.g_ii;
  out.residual_raw = std::abs(inv - (h(i, i) - z - quad));
  out.residual_y = std::abs(inv + z + out.s - out.y);
  return out;
}

void check_schur_size(std::size_t n) {
  if (n > kSchurMaxDimension) fail(ErrorKind::ScaleExceeded, "Schur decomposition needs N <= 256");
  if (n < 2) fail(ErrorKind::DomainError, "Schur decomposition needs N >= 2");
}

}  // namespace

SchurDecomposition schur_decompose(const SymmetricMatrix& h, Complex z, std::size_t i) {
  check_schur_size(h.dimension());
  if (i >= h.dimension()) fail(ErrorKind::DomainError, "row index out of range");
  const std::size_t exclude[] = {i};
  return decompose(h, z, i, spectral::resolvent(h, z), spectral::minor_resolvent(h, exclude, z));
}

std::vector<SchurDecomposition> schur_decompose_all(const SymmetricMatrix& h, Complex z) {
  check_schur_size(h.dimension());
  const ComplexMatrix g = spectral::resolvent(h, z);
  std::vector<SchurDecomposition> out;
  out.reserve(h.dimension());
  for (std::size_t i = 0; i < h.dimension(); ++i) {
    const std::size_t exclude[] = {i};
    out.push_back(decompose(h, z, i, g, spectral::minor_resolvent(h, exclude, z)));
  }
  return out;
}

ComplexMatrix minor_from_resolvent(const ComplexMatrix& g, std::size_t i) {
  const std::size_t n = g.dimension();
  if (i >= n) fail(ErrorKind::DomainError, "row index out of range");
  ComplexMatrix out(n - 1);
  const Complex inv = 1.0 / g(i, i);
  for (std::size_t k = 0, kk = 0; k < n; ++k) {
    if (k == i) continue;
    const Complex gki = g(k, i) * inv;
    for (std::size_t l = 0, ll = 0; l < n; ++l) {
      if (l == i) continue;
      out(kk, ll++) = g(k, l) - gki * g(i, l);
    }
    ++kk;
  }
  return out;
}

std::string to_string(FormKind f) {
  switch (f) {
    case FormKind::linear: return "linear";
    case FormKind::bilinear: return "bilinear";
    case FormKind::offdiag: return "offdiag";
    case FormKind::full: return "full";
  }
  return "unknown";
}

FormKind parse_form(const std::string& name) {
  if (name == "linear") return FormKind::linear;
  if (name == "bilinear") return FormKind::bilinear;
  if (name == "offdiag") return FormKind::offdiag;
  if (name == "full") return FormKind::full;
  fail(ErrorKind::ConfigError, "unknown form '" + name + "'");
}

std::string to_string(CoefficientSource c) { return c == CoefficientSource::synthetic ? "synthetic" : "resolvent"; }

CoefficientSource parse_coefficients(const std::string& name) {
  if (name == "synthetic") return CoefficientSource::synthetic;
  if (name == "resolvent") return CoefficientSource::resolvent;
  fail(ErrorKind::ConfigError, "unknown coefficient source '" + name + "'");
}

Complex evaluate_form(FormKind form, const std::vector<Complex>& coeff, const std::vector<double>& y,
                      const std::vector<double>& z) {
  const std::size_t n = y.size();
  Complex total = 0.0;
  if (form == FormKind::linear) {
    for (std::size_t i = 0; i < n; ++i) total += coeff[i] * y[i];
    return total;
  }
  const std::vector<double>& right = form == FormKind::bilinear ? z : y;
  for (std::size_t i = 0; i < n; ++i) {
    Complex row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (form == FormKind::offdiag && i == j) continue;
      row += coeff[i * n + j] * right[j];
    }
    total += y[i] * row;
  }
  return total;
}

namespace {

std::vector<Complex> synthetic_coefficients(FormKind form, std::size_t n, CounterRng& rng) {
  const std::size_t count = form == FormKind::linear ? n : n * n;
  std::vector<Complex> c(count);
  for (auto& v : c) v = {rng.normal(), rng.normal()};
  if (form == FormKind::offdiag) {
    for (std::size_t i = 0; i < n; ++i) c[i * n + i] = 0.0;
  }
  double norm2 = 0.0;
  for (const auto& v : c) norm2 += std::norm(v);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& v : c) v *= inv;
  return c;
}

// Entries of G^(0)/N for an independent Curie-Weiss draw of dimension n + 1.
std::vector<Complex> resolvent_coefficients(FormKind form, std::size_t n, double beta, Complex z, std::uint64_t seed) {
  ensembles::EnsembleSpec spec;
  spec.variant = beta == 0.0 ? ensembles::Variant::rademacher : ensembles::Variant::curie_weiss;
  spec.beta = beta;
  const SymmetricMatrix h = locallaw::build_replica(spec, n + 1, seed);
  const ComplexMatrix g0 = minor_from_resolvent(spectral::resolvent(h, z), 0);
  const double nd = static_cast<double>(n);
  std::vector<Complex> c;
  if (form == FormKind::linear) {
    for (std::size_t k = 0; k < n; ++k) c.push_back(g0(k, k) / nd);
    return c;
  }
  c.resize(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) c[k * n + l] = (form == FormKind::offdiag && k == l) ? 0.0 : g0(k, l) / nd;
  }
  return c;
}

}  // namespace

std::vector<BilinearCheck> bilinear_pnorm_experiment(const BilinearConfig& config) {
  if (config.p < 2 || config.p % 2 != 0) fail(ErrorKind::ConfigError, "p must be an even integer >= 2");
  if (config.kernel == KernelFamily::perturbed && !(config.beta > 1.0)) {
    fail(ErrorKind::SupercriticalRequired, "perturbed kernel needs beta > 1");
  }
  const mixing::InverseTemperature beta(config.beta);
  const mixing::SpinKernel kernel =
      config.kernel == KernelFamily::plain ? mixing::SpinKernel::plain() : mixing::SpinKernel::perturbed(beta);
  const double p = static_cast<double>(config.p);
  const double a_p = config.a_p.value_or(std::sqrt(p));

  std::vector<BilinearCheck> out;
  for (std::size_t n : config.n_grid) {
    if (n == 0) fail(ErrorKind::ConfigError, "N must be positive");
    std::shared_ptr<const mixing::MixingMeasure> measure;
    if (!config.fixed_t) measure = mixing::shared_measure(beta, n * n);
    const std::size_t reps = config.replicas;
    std::vector<double> form_p(reps), norm_p(reps), m1_p(reps), scale(reps);
    parallel_for(reps, config.workers, [&](std::size_t r) {
      CounterRng rng(derive_seed(config.master_seed, config.experiment, n, r));
      CounterRng coeff_rng(derive_seed(config.master_seed, config.experiment + "/coefficients", n, r));
      const std::vector<Complex> coeff =
          config.source == CoefficientSource::synthetic
              ? synthetic_coefficients(config.form, n, coeff_rng)
              : resolvent_coefficients(config.form, n, config.beta, config.z, coeff_rng());
      const double t = config.fixed_t ? *config.fixed_t : measure->sample(rng);
      std::vector<double> y(n), z;
      for (auto& v : y) v = kernel.draw(t, rng);
      if (config.form == FormKind::bilinear) {
        z.resize(n);
        for (auto& v : z) v = kernel.draw(t, rng);
      }
      double norm2 = 0.0;
      for (const auto& c : coeff) norm2 += std::norm(c);
      const double value = std::abs(evaluate_form(config.form, coeff, y, z));
      scale[r] = std::sqrt(norm2);
      form_p[r] = std::pow(value, p);
      norm_p[r] = scale[r] > 0.0 ? std::pow(value / scale[r], p) : 0.0;
      m1_p[r] = std::pow(std::abs(kernel.m1(t)), p);
    });
    BilinearCheck check;
    check.n = n;
    check.p = config.p;
    check.a_p = a_p;
    check.mu_p = config.mu_p;
    if (reps > 0) {
      auto mean = [reps](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(reps);
      };
      check.empirical_pnorm = std::pow(mean(form_p), 1.0 / p);
      check.normalized_pnorm = std::pow(mean(norm_p), 1.0 / p);
      check.m1_pnorm = std::pow(mean(m1_p), 1.0 / p);
      check.bound_scale = mean(scale);
    }
    const double factor = a_p * config.mu_p + std::sqrt(static_cast<double>(n)) * check.m1_pnorm;
    check.bound_factor = config.form == FormKind::linear ? factor : factor * factor;
    out.push_back(check);
  }
  return out;
}

QuadraticRatios quadratic_ratios(const SymmetricMatrix& h, Complex z) {
  const std::size_t n = h.dimension();
  if (n > spectral::kResolventMaxDimension) fail(ErrorKind::ScaleExceeded, "quadratic ratios need N <= 512");
  if (n < 2) fail(ErrorKind::DomainError, "quadratic ratios need N >= 2");
  const double nd = static_cast<double>(n);
  const ComplexMatrix g = spectral::resolvent(h, z);
  QuadraticRatios out;
  out.z1.resize(n);
  out.z2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex inv = 1.0 / g(i, i);
    Complex z1 = 0.0;
    Complex z2 = 0.0;
    double norm1 = 0.0;
    double norm2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const Complex gki = g(k, i) * inv;
      const double hik = h(i, k);
      Complex row = 0.0;
      for (std::size_t l = 0; l < n; ++l) {
        if (l == i) continue;
        const Complex gkl = g(k, l) - gki * g(i, l);
        norm1 += std::norm(gkl);
        if (l == k) {
          z2 += (hik * hik - 1.0 / nd) * gkl;
          norm2 += std::norm(gkl);
        } else {
          row += gkl * h(l, i);
        }
      }
      z1 += hik * row;
    }
    out.z1[i] = std::abs(z1) / (std::sqrt(norm1) / nd);
    out.z2[i] = std::abs(z2) / (std::sqrt(norm2) / nd);
  }
  return out;
}

std::vector<QuadraticCell> quadratic_domination_experiment(const QuadraticConfig& config) {
  std::vector<QuadraticCell> out;
  for (std::size_t n : config.n_grid) {
    const std::size_t reps = config.replicas;
    const double nd = static_cast<double>(n);
    QuadraticCell cell;
    cell.n = n;
    for (std::size_t r = 0; r < reps; ++r) {
      cell.seeds.push_back(locallaw::replica_seed(config.master_seed, config.experiment, n, r));
    }
    // ratios[r * n + i]
    std::vector<double> ratio1(reps * n), ratio2(reps * n);
    parallel_for(reps, config.workers, [&](std::size_t r) {
      const SymmetricMatrix h = locallaw::build_replica(config.ensemble, n, cell.seeds[r]);
      const QuadraticRatios q = quadratic_ratios(h, config.z);
      std::copy(q.z1.begin(), q.z1.end(), ratio1.begin() + static_cast<std::ptrdiff_t>(r * n));
      std::copy(q.z2.begin(), q.z2.end(), ratio2.begin() + static_cast<std::ptrdiff_t>(r * n));
    });
    const double samples = static_cast<double>(reps * n);
    for (double eps : config.epsilons) {
      const double threshold = std::pow(nd, eps);
      std::size_t hit1 = 0;
      std::size_t hit2 = 0;
      for (std::size_t k = 0; k < reps * n; ++k) {
        hit1 += ratio1[k] > threshold ? 1 : 0;
        hit2 += ratio2[k] > threshold ? 1 : 0;
      }
      cell.tail_z1.push_back(reps == 0 ? 0.0 : static_cast<double>(hit1) / samples);
      cell.tail_z2.push_back(reps == 0 ? 0.0 : static_cast<double>(hit2) / samples);
    }
    for (std::size_t r = 0; r < reps; ++r) {
      cell.max_ratio_z1.push_back(*std::max_element(ratio1.begin() + r * n, ratio1.begin() + (r + 1) * n));
      cell.max_ratio_z2.push_back(*std::max_element(ratio2.begin() + r * n, ratio2.begin() + (r + 1) * n));
    }
    out.push_back(std::move(cell));
  }
  return out;
}

std::size_t numerical_rank(const SymmetricMatrix& e, double rel) {
  const auto spectrum = spectral::eigenvalues(e);
  double top = 0.0;
  for (double v : spectrum.eigenvalues()) top = std::max(top, std::abs(v));
  if (top == 0.0) return 0;
  std::size_t k = 0;
  for (double v : spectrum.eigenvalues()) k += std::abs(v) > rel * top ? 1 : 0;
  return k;
}

RankGap rank_perturbation_gap(const SymmetricMatrix& y, const SymmetricMatrix& e, Complex z) {
  if (!(z.imag() > 0.0)) fail(ErrorKind::DomainError, "rank perturbation gap needs eta > 0");
  if (y.dimension() != e.dimension()) fail(ErrorKind::DomainError, "dimension mismatch");
  RankGap out;
  out.rank = numerical_rank(e);
  const double n = static_cast<double>(y.dimension());
  const Complex before = spectral::empirical_stieltjes(spectral::eigenvalues(y).eigenvalues(), z) * n;
  const Complex after = spectral::empirical_stieltjes(spectral::eigenvalues(y + e).eigenvalues(), z) * n;
  out.gap = std::abs(before - after);
  out.bound = 2.0 * static_cast<double>(out.rank) / z.imag();
  return out;
}

SymmetricMatrix random_low_rank(std::size_t n, std::size_t k, double scale, CounterRng& rng) {
  SymmetricMatrix out(n);
  std::vector<double> u(n);
  for (std::size_t r = 0; r < k; ++r) {
    for (auto& v : u) v = rng.normal();
    const double s = scale * (2.0 * rng.uniform() - 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) out.set(i, j, out(i, j) + s * u[i] * u[j]);
    }
  }
  return out;
}

}  // namespace cwsc::ldp
