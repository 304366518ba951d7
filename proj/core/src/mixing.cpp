#include "cwsc/mixing.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace cwsc::mixing {

namespace {

// Mass beyond this log-drop from the peak is below e^{-80} and dropped.
constexpr double kSupportDrop = 80.0;
constexpr std::size_t kUniformNodes = 2048;
constexpr std::size_t kModeNodes = 2048;
constexpr double kRefineGap = 0x1.0p-20;

// Smallest step d > 0 with drop(anchor + dir * d) >= level, drop increasing along dir.
template <class Drop>
double find_drop(Drop&& drop, double anchor, double dir, double level, double start) {
  double lo = 0.0;
  double hi = start;
  while (drop(anchor + dir * hi) < level) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) fail(ErrorKind::NumericalFailure, "mixing support search diverged");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (drop(anchor + dir * mid) < level ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

double solve_spontaneous_magnetization(InverseTemperature beta) {
  const double b = beta.value();
  if (b <= 1.0) fail(ErrorKind::SupercriticalRequired, "spontaneous magnetization needs beta > 1");
  auto g = [b](double c) { return std::tanh(b * c) - c; };
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  // lo keeps g > 0 and stays strictly below 1.
  const double c = (lo > 0.0 && std::abs(g(lo)) <= std::abs(g(hi))) || hi >= 1.0 ? lo : hi;
  if (!(std::abs(g(c)) < 1e-14)) fail(ErrorKind::NumericalFailure, "magnetization bisection did not converge");
  return c;
}

MixingMeasure::MixingMeasure(InverseTemperature beta, std::uint64_t n) : beta_(beta.value()), n_(n) {
  if (n == 0) fail(ErrorKind::DomainError, "mixing measure needs n >= 1");
  if (is_dirac()) {
    modes_ = {0.0};
    table_ = {{0.0, 0.0}, {0.0, 1.0}};
    return;
  }
  const double nd = static_cast<double>(n_);
  auto phi = [this, nd](double u) { return -nd * (u * u / (2.0 * beta_) - log_cosh(u)); };

  const double c = beta.supercritical() ? solve_spontaneous_magnetization(beta) : 0.0;
  const double mode = beta_ * c;
  mode_ = mode;
  tanh_mode_ = c;
  // 1 - tanh(m) = 2 e^{-2m} / (1 + e^{-2m}) without cancellation.
  one_minus_tanh_mode_ = 2.0 * std::exp(-2.0 * mode) / (1.0 + std::exp(-2.0 * mode));
  log_peak_ = phi(mode);
  auto drop = [&](double u) { return -log_weight(u); };

  const double width = find_drop(drop, mode, 1.0, 0.5, 1e-6 / std::sqrt(nd));
  // Rounding of u near the mode perturbs phi by about |phi'| ulp(u), with
  // |phi'| of order 1 / width a few widths out.
  noise_ = std::max(1e-12, 16.0 * std::numeric_limits<double>::epsilon() * (mode + 8.0 * width) / width);
  const double outer = mode + find_drop(drop, mode, 1.0, kSupportDrop, width);

  if (mode > 0.0) {
    modes_ = {-mode, mode};
    if (drop(0.0) > kSupportDrop) {
      const double inner = mode - find_drop(drop, mode, -1.0, kSupportDrop, std::min(width, 0.5 * mode));
      segments_ = {{-outer, -inner}, {inner, outer}};
    } else {
      segments_ = {{-outer, outer}};
    }
  } else {
    modes_ = {0.0};
    segments_ = {{-outer, outer}};
  }

  for (double m : modes_) {
    for (double k : {-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      breaks_.push_back(m + k * width);
    }
  }
  breaks_.push_back(0.0);
  std::sort(breaks_.begin(), breaks_.end());
  breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());

  mass_ = 1.0;
  double total = 0.0;
  for (const auto& [lo, hi] : segments_) total += integrate_range(lo, hi);
  mass_ = total;

  // Inverse-CDF table: uniform nodes over the support plus a dense block
  // around each mode.
  std::vector<double> nodes;
  for (const auto& [lo, hi] : segments_) {
    const std::size_t count = kUniformNodes / segments_.size();
    for (std::size_t i = 0; i <= count; ++i) {
      nodes.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count));
    }
  }
  for (double m : modes_) {
    const std::size_t count = kModeNodes / modes_.size();
    for (std::size_t i = 0; i <= count; ++i) {
      const double u = m + width * (-8.0 + 16.0 * static_cast<double>(i) / static_cast<double>(count));
      for (const auto& [lo, hi] : segments_) {
        if (u > lo && u < hi) nodes.push_back(u);
      }
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  const auto& rule = quadrature::gauss_legendre(20);
  auto weight = [this](double u) { return std::exp(log_weight(u)); };
  std::vector<double> cumulative(nodes.size(), 0.0);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    double cell = 0.0;
    // Cells spanning the gap between two segments carry no mass.
    bool inside = false;
    for (const auto& [lo, hi] : segments_) inside = inside || (nodes[i - 1] >= lo && nodes[i] <= hi);
    if (inside) cell = quadrature::fixed(weight, nodes[i - 1], nodes[i], rule);
    cumulative[i] = cumulative[i - 1] + cell;
  }
  const double table_total = cumulative.back();
  if (std::abs(table_total - mass_) > 1e-10 * mass_) {
    fail(ErrorKind::NumericalFailure, "inverse-CDF table disagrees with adaptive normalization");
  }
  table_.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) table_.push_back({nodes[i], cumulative[i] / table_total});
  table_.back().cdf = 1.0;
}

double MixingMeasure::integrate_range(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  auto weight = [this](double u) { return std::exp(log_weight(u)); };
  return quadrature::integrate(weight, lo, hi, {1e-15 * mass_, 1e-14, 48, noise_}, breaks_);
}

double MixingMeasure::log_normalization() const {
  if (is_dirac()) fail(ErrorKind::DiracMeasure, "beta = 0 mixing measure has no density");
  return -log_peak_ - std::log(mass_);
}

double MixingMeasure::normalization() const { return std::exp(log_normalization()); }

double MixingMeasure::density(double t) const {
  if (!(std::abs(t) < 1.0)) fail(ErrorKind::DomainError, "mixing density needs |t| < 1");
  if (is_dirac()) fail(ErrorKind::DiracMeasure, "beta = 0 mixing measure is the point mass at 0");
  const double u = std::atanh(t);
  // C e^{phi(u)} / (1 - t^2) with 1 / (1 - t^2) = cosh^2 u and C = e^{-max phi} / mass.
  return std::exp(log_weight(u) - std::log(mass_) + 2.0 * log_cosh(u));
}

double MixingMeasure::moment(int p) const {
  if (p < 1) fail(ErrorKind::DomainError, "moment order must be >= 1");
  if (is_dirac()) return 0.0;
  return expect([p](double t) { return std::pow(t, p); });
}

double MixingMeasure::mass(double a, double b) const {
  if (a > b) std::swap(a, b);
  if (is_dirac()) return (a <= 0.0 && 0.0 <= b) ? 1.0 : 0.0;
  const double ua = a <= -1.0 ? -std::numeric_limits<double>::infinity() : std::atanh(a);
  const double ub = b >= 1.0 ? std::numeric_limits<double>::infinity() : std::atanh(b);
  double total = 0.0;
  for (const auto& [lo, hi] : segments_) total += integrate_range(std::max(lo, ua), std::min(hi, ub));
  return std::clamp(total / mass_, 0.0, 1.0);
}

double MixingMeasure::sample(CounterRng& rng) const {
  if (is_dirac()) return 0.0;
  const double target = rng.uniform_open();
  auto it = std::upper_bound(table_.begin(), table_.end(), target,
                             [](double v, const CdfNode& node) { return v < node.cdf; });
  if (it == table_.begin()) return std::tanh(table_.front().u);
  if (it == table_.end()) return std::tanh(table_.back().u);
  const CdfNode lo = *(it - 1);
  const CdfNode hi = *it;
  const double gap = hi.cdf - lo.cdf;
  double x = lo.u + (hi.u - lo.u) * (target - lo.cdf) / gap;
  if (gap <= kRefineGap) return std::tanh(x);

  // Newton on the exact cell CDF, safeguarded by the bracket.
  const auto& rule = quadrature::gauss_legendre(20);
  auto weight = [this](double u) { return std::exp(log_weight(u)); };
  const double want = (target - lo.cdf) * mass_;
  double a = lo.u;
  double b = hi.u;
  for (int iter = 0; iter < 60; ++iter) {
    const double g = quadrature::fixed(weight, lo.u, x, rule) - want;
    if (std::abs(g) <= 1e-15 * mass_) break;
    (g > 0.0 ? b : a) = x;
    const double w = weight(x);
    double next = w > 0.0 ? x - g / w : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - x) <= 1e-16 * std::max(1.0, std::abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return std::tanh(x);
}

std::shared_ptr<const MixingMeasure> shared_measure(InverseTemperature beta, std::uint64_t n) {
  static std::mutex mutex;
  static std::map<std::pair<double, std::uint64_t>, std::shared_ptr<const MixingMeasure>> cache;
  const auto key = std::make_pair(beta.value(), n);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto built = std::make_shared<const MixingMeasure>(beta, n);
  std::lock_guard lock(mutex);
  return cache.emplace(key, std::move(built)).first->second;
}

double mixing_density(const MixingMeasure& mm, double t) { return mm.density(t); }
double sample_mixing(const MixingMeasure& mm, CounterRng& rng) { return mm.sample(rng); }
double mixing_moment(const MixingMeasure& mm, int p) { return mm.moment(p); }

namespace {

std::size_t count_plus(std::size_t n, std::span<const int> config) {
  if (n > kOracleMaxSpins) fail(ErrorKind::OracleScaleExceeded, "exact pmf limited to n <= 24");
  if (config.size() != n) fail(ErrorKind::DomainError, "configuration length differs from n");
  std::size_t plus = 0;
  for (int y : config) {
    if (y != 1 && y != -1) fail(ErrorKind::DomainError, "configuration entries must be +-1");
    plus += y == 1;
  }
  return plus;
}

}  // namespace

double exact_cw_pmf(InverseTemperature beta, std::size_t n, std::span<const int> config) {
  const std::size_t plus = count_plus(n, config);
  const double b = beta.value();
  const double nd = static_cast<double>(n);
  auto energy = [&](std::size_t k) {
    const double s = 2.0 * static_cast<double>(k) - nd;
    return b * s * s / (2.0 * nd);
  };
  // Partition function by magnetization classes, log-sum-exp.
  std::vector<double> terms(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    terms[k] = std::lgamma(nd + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
               std::lgamma(nd - static_cast<double>(k) + 1.0) + energy(k);
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double x : terms) sum += std::exp(x - top);
  const double log_z = top + std::log(sum);
  return std::exp(energy(plus) - log_z);
}

double definetti_pmf_oracle(const MixingMeasure& mm, std::span<const int> config) {
  const std::size_t n = mm.n();
  const std::size_t plus = count_plus(n, config);
  const double nd = static_cast<double>(n);
  const double s = 2.0 * static_cast<double>(plus) - nd;
  // prod_i (1 + t y_i) / 2 = e^{u s} / (2 cosh u)^n with t = tanh u
  return mm.expect_u([&](double u) { return std::exp(u * s - nd * (std::numbers::ln2 + log_cosh(u))); });
}

double definetti_pmf_oracle(InverseTemperature beta, std::size_t n, std::span<const int> config) {
  count_plus(n, config);
  return definetti_pmf_oracle(*shared_measure(beta, n), config);
}

double correlation_exact(InverseTemperature beta, std::uint64_t n, int ell) {
  if (ell < 1) fail(ErrorKind::DomainError, "correlation order must be >= 1");
  return shared_measure(beta, n)->moment(ell);
}

SpinKernel SpinKernel::plain() { return SpinKernel(KernelVariant::plain, 0.0, 0.0); }

SpinKernel SpinKernel::perturbed(InverseTemperature beta) {
  return SpinKernel(KernelVariant::perturbed, beta.value(), solve_spontaneous_magnetization(beta));
}

std::pair<double, double> SpinKernel::support(double t) const noexcept {
  if (variant_ == KernelVariant::plain) return {1.0, -1.0};
  const double shift = t > 0.0 ? c_ : -c_;
  return {(1.0 - shift) * scale_, (-1.0 - shift) * scale_};
}

double SpinKernel::m1(double t) const noexcept {
  if (variant_ == KernelVariant::plain) return t;
  const double shift = t > 0.0 ? c_ : -c_;
  return (t - shift) * scale_;
}

double SpinKernel::m2(double t) const noexcept {
  if (variant_ == KernelVariant::plain) return 1.0;
  const double shift = t > 0.0 ? c_ : -c_;
  return 1.0 - 2.0 * shift * (t - shift) / (1.0 - c_ * c_);
}

double SpinKernel::central_first(double t, double p) const noexcept {
  const auto [plus, minus] = support(t);
  const double m = m1(t);
  const double q = plus_probability(t);
  return q * std::pow(std::abs(plus - m), p) + (1.0 - q) * std::pow(std::abs(minus - m), p);
}

double SpinKernel::central_second(double t, double p) const noexcept {
  const auto [plus, minus] = support(t);
  const double m = m2(t);
  const double q = plus_probability(t);
  return q * std::pow(std::abs(plus * plus - m), p) + (1.0 - q) * std::pow(std::abs(minus * minus - m), p);
}

SpinArray sample_spins(const SpinKernel& kernel, double t, std::size_t count, CounterRng& rng) {
  if (!(std::abs(t) < 1.0)) fail(ErrorKind::DomainError, "spin kernel needs |t| < 1");
  SpinArray out;
  out.values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.values.push_back(kernel.draw(t, rng));
  return out;
}

PerturbedMoments perturbed_moments(InverseTemperature beta, double t) {
  const double c = solve_spontaneous_magnetization(beta);
  const double scale = 1.0 / std::sqrt(1.0 - c * c);
  if (t > 0.0) return {scale * (t - c), 2.0 * c / (1.0 - c * c) * (t - c)};
  return {scale * (t + c), -2.0 * c / (1.0 - c * c) * (t + c)};
}

}  // namespace cwsc::mixing
