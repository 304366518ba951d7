#include "cwsc/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace cwsc::ensembles {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::curie_weiss: return "curie_weiss";
    case Variant::rademacher: return "rademacher";
    case Variant::perturbed_supercritical: return "perturbed_supercritical";
    case Variant::custom: return "custom";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::curie_weiss, Variant::rademacher, Variant::perturbed_supercritical, Variant::custom}) {
    if (to_string(v) == name) return v;
  }
  fail(ErrorKind::ConfigError, "unknown ensemble variant '" + name + "'");
}

void EnsembleSpec::validate(std::size_t max_dimension) const {
  mixing::InverseTemperature check(beta);
  if (dimension < 2) fail(ErrorKind::ConfigError, "ensemble dimension must be >= 2");
  if (dimension > max_dimension) fail(ErrorKind::ScaleExceeded, "ensemble dimension above cap");
  if (variant == Variant::perturbed_supercritical && beta <= 1.0) {
    fail(ErrorKind::SupercriticalRequired, "perturbed ensemble needs beta > 1");
  }
  if (rescale && !(std::isfinite(*rescale) && *rescale > 0.0)) fail(ErrorKind::ConfigError, "rescale must be positive");
}

double SymmetricMatrix::max_asymmetry() const noexcept {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
  }
  return worst;
}

double SymmetricMatrix::frobenius_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double SymmetricMatrix::trace() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
  return s;
}

namespace {

template <class Op>
SymmetricMatrix combine(const SymmetricMatrix& a, const SymmetricMatrix& b, Op op) {
  if (a.dimension() != b.dimension()) fail(ErrorKind::DomainError, "matrix dimensions differ");
  SymmetricMatrix out(a.dimension());
  auto dst = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = op(x[k], y[k]);
  return out;
}

double entry_scale(const EnsembleSpec& spec) {
  return spec.rescale.value_or(1.0) / std::sqrt(static_cast<double>(spec.dimension));
}

}  // namespace

SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return combine(a, b, [](double x, double y) { return x + y; });
}

SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return combine(a, b, [](double x, double y) { return x - y; });
}

SymmetricMatrix operator*(double s, const SymmetricMatrix& a) {
  SymmetricMatrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

namespace {

constexpr char kMagic[8] = {'C', 'W', 'S', 'C', 'M', 'A', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorKind::IoError, "truncated matrix record");
  return v;
}

}  // namespace

void write_matrix(std::ostream& out, const SymmetricMatrix& m) {
  out.write(kMagic, sizeof kMagic);
  put(out, kFormatVersion);
  put(out, static_cast<std::uint32_t>(m.variant));
  put(out, static_cast<std::uint64_t>(m.dimension()));
  put(out, m.beta);
  put(out, m.seed);
  put(out, m.mixing_draw);
  for (std::size_t i = 0; i < m.dimension(); ++i) {
    for (std::size_t j = i; j < m.dimension(); ++j) put(out, m(i, j));
  }
  if (!out) fail(ErrorKind::IoError, "matrix write failed");
}

SymmetricMatrix read_matrix(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    fail(ErrorKind::IoError, "not a matrix record");
  }
  if (get<std::uint32_t>(in) != kFormatVersion) fail(ErrorKind::IoError, "unsupported matrix format version");
  const auto variant = get<std::uint32_t>(in);
  if (variant > static_cast<std::uint32_t>(Variant::custom)) fail(ErrorKind::IoError, "bad variant in matrix record");
  const auto n = get<std::uint64_t>(in);
  if (n > kDefaultMaxDimension) fail(ErrorKind::IoError, "matrix record dimension above cap");
  SymmetricMatrix m(static_cast<std::size_t>(n));
  m.variant = static_cast<Variant>(variant);
  m.beta = get<double>(in);
  m.seed = get<std::uint64_t>(in);
  m.mixing_draw = get<double>(in);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) m.set(i, j, get<double>(in));
  }
  return m;
}

SymmetricMatrix build(const EnsembleSpec& spec, CounterRng& rng) {
  spec.validate();
  if (spec.variant == Variant::perturbed_supercritical) return build_perturbed(spec, rng);
  if (spec.variant == Variant::custom) fail(ErrorKind::ConfigError, "custom ensembles need a mixing space");

  const std::size_t n = spec.dimension;
  const double beta = spec.variant == Variant::rademacher ? 0.0 : spec.beta;
  const auto measure = mixing::shared_measure(mixing::InverseTemperature(beta), n * n);
  const double t = measure->sample(rng);
  const double p_plus = 0.5 * (1.0 + t);
  const double scale = entry_scale(spec);

  SymmetricMatrix h(n);
  double spins = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double x = rng.uniform() < p_plus ? 1.0 : -1.0;
      spins += x;
      h.set(i, j, x * scale);
    }
  }
  h.mixing_draw = t;
  h.spin_sum = spins;
  h.variant = spec.variant;
  h.beta = beta;
  h.seed = spec.seed;
  return h;
}

SymmetricMatrix build(const EnsembleSpec& spec) {
  CounterRng rng(spec.seed);
  return build(spec, rng);
}

SymmetricMatrix build_perturbed(const EnsembleSpec& spec, CounterRng& rng, PerturbationPath path) {
  mixing::InverseTemperature beta(spec.beta);
  if (!beta.supercritical()) fail(ErrorKind::SupercriticalRequired, "perturbed ensemble needs beta > 1");
  EnsembleSpec checked = spec;
  checked.variant = Variant::perturbed_supercritical;
  checked.validate();

  const std::size_t n = spec.dimension;
  const auto kernel = mixing::SpinKernel::perturbed(beta);
  const double c = kernel.magnetization();
  const double inv = 1.0 / std::sqrt(1.0 - c * c);
  const auto measure = mixing::shared_measure(beta, n * n);
  const double t = measure->sample(rng);
  const double p_plus = 0.5 * (1.0 + t);
  const double shift = t > 0.0 ? c : -c;
  const double scale = entry_scale(spec);

  SymmetricMatrix z(n);
  double spins = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v;
      if (path == PerturbationPath::shift) {
        const double x = rng.uniform() < p_plus ? 1.0 : -1.0;
        v = (x - shift) * inv;
      } else {
        v = kernel.draw(t, rng);
      }
      spins += v > 0.0 ? 1.0 : -1.0;
      z.set(i, j, v * scale);
    }
  }
  z.mixing_draw = t;
  z.spin_sum = spins;
  z.variant = Variant::perturbed_supercritical;
  z.beta = spec.beta;
  z.seed = spec.seed;
  return z;
}

SymmetricMatrix build_perturbed(const EnsembleSpec& spec, PerturbationPath path) {
  CounterRng rng(spec.seed);
  return build_perturbed(spec, rng, path);
}

SymmetricMatrix custom_ensemble(const MixingSpace& mixing, std::size_t n, CounterRng& rng) {
  if (!mixing.sample_t || !mixing.sample_spin || !mixing.m1 || !mixing.m2) {
    fail(ErrorKind::ConfigError, "custom mixing space is missing a callback");
  }
  if (n < 2) fail(ErrorKind::ConfigError, "ensemble dimension must be >= 2");
  const double t = mixing.sample_t(rng);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  SymmetricMatrix h(n);
  double spins = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double x = mixing.sample_spin(t, rng);
      spins += x;
      h.set(i, j, x * scale);
    }
  }
  h.mixing_draw = t;
  h.spin_sum = spins;
  h.variant = Variant::custom;
  return h;
}

namespace {

QuadratureMixing from_kernel(std::string name, mixing::InverseTemperature beta, mixing::SpinKernel kernel) {
  QuadratureMixing q;
  q.name = std::move(name);
  q.expect = [beta](std::size_t n, const std::function<double(double)>& h) {
    return mixing::shared_measure(beta, static_cast<std::uint64_t>(n) * n)->expect(h, {1e-300, 1e-10, 48});
  };
  q.m1 = [kernel](double t) { return kernel.m1(t); };
  q.m2 = [kernel](double t) { return kernel.m2(t); };
  q.central_first = [kernel](double t, double p) { return kernel.central_first(t, p); };
  q.central_second = [kernel](double t, double p) { return kernel.central_second(t, p); };
  return q;
}

}  // namespace

QuadratureMixing plain_cw_mixing(mixing::InverseTemperature beta) {
  return from_kernel("curie_weiss_plain", beta, mixing::SpinKernel::plain());
}

QuadratureMixing perturbed_cw_mixing(mixing::InverseTemperature beta) {
  return from_kernel("curie_weiss_perturbed", beta, mixing::SpinKernel::perturbed(beta));
}

bool ConditionReport::all_bounded() const noexcept {
  return std::all_of(trends.begin(), trends.end(), [](const ConditionTrend& t) { return t.all(); });
}

ConditionReport check_cw_type_conditions(const QuadratureMixing& mixing, std::span<const std::size_t> n_grid,
                                         std::span<const int> p_list, std::size_t t_grid_points) {
  if (!mixing.expect || !mixing.m1 || !mixing.m2 || !mixing.central_first || !mixing.central_second) {
    fail(ErrorKind::ConfigError, "mixing description is not quadrature-capable");
  }
  if (n_grid.empty() || t_grid_points < 2) fail(ErrorKind::ConfigError, "empty N-grid or t-grid");

  ConditionReport report;
  for (int p : p_list) {
    const double pd = static_cast<double>(p);
    double sup_first = 0.0;
    double sup_second = 0.0;
    for (std::size_t k = 0; k < t_grid_points; ++k) {
      const double t = mixing.t_min + (mixing.t_max - mixing.t_min) * (static_cast<double>(k) + 0.5) /
                                          static_cast<double>(t_grid_points);
      sup_first = std::max(sup_first, mixing.central_first(t, pd));
      sup_second = std::max(sup_second, mixing.central_second(t, pd));
    }
    std::vector<ConditionRow> rows;
    for (std::size_t n : n_grid) {
      const double factor = std::pow(static_cast<double>(n), pd / 2.0);
      ConditionRow row;
      row.p = p;
      row.n = n;
      row.first_moment = factor * mixing.expect(n, [&](double t) { return std::pow(std::abs(mixing.m1(t)), pd); });
      row.second_moment =
          factor * mixing.expect(n, [&](double t) { return std::pow(std::abs(1.0 - mixing.m2(t)), pd); });
      row.central_first = sup_first;
      row.central_second = sup_second;
      rows.push_back(row);
    }
    auto bounded = [&](auto field) {
      const double first = rows.front().*field;
      return std::all_of(rows.begin(), rows.end(),
                         [&](const ConditionRow& r) { return r.*field <= kGrowthFactor * first + 1e-300; });
    };
    ConditionTrend trend;
    trend.p = p;
    trend.first_bounded = bounded(&ConditionRow::first_moment);
    trend.second_bounded = bounded(&ConditionRow::second_moment);
    trend.central_first_bounded = bounded(&ConditionRow::central_first);
    trend.central_second_bounded = bounded(&ConditionRow::central_second);
    report.trends.push_back(trend);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  return report;
}

}  // namespace cwsc::ensembles
