#include <benchmark/benchmark.h>

#include "cwsc/ensembles.hpp"
#include "cwsc/ldp.hpp"
#include "cwsc/locallaw.hpp"
#include "cwsc/mixing.hpp"
#include "cwsc/spectral.hpp"

using namespace cwsc;

namespace {

ensembles::EnsembleSpec cw(double beta, std::size_t n, std::uint64_t seed) {
  ensembles::EnsembleSpec s;
  s.variant = ensembles::Variant::curie_weiss;
  s.beta = beta;
  s.dimension = n;
  s.seed = seed;
  return s;
}

void BM_MeasureConstruction(benchmark::State& state) {
  const double beta = static_cast<double>(state.range(0)) / 10.0;
  const auto n = static_cast<std::uint64_t>(state.range(1));
  for (auto _ : state) {
    mixing::MixingMeasure mm(mixing::InverseTemperature(beta), n);
    benchmark::DoNotOptimize(mm.normalization());
  }
}
BENCHMARK(BM_MeasureConstruction)->Args({5, 10000})->Args({10, 1048576})->Args({15, 1048576})->Unit(benchmark::kMicrosecond);

void BM_MixingSample(benchmark::State& state) {
  const auto mm = mixing::shared_measure(mixing::InverseTemperature(static_cast<double>(state.range(0)) / 10.0), 1048576);
  CounterRng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(mixing::sample_mixing(*mm, rng));
}
BENCHMARK(BM_MixingSample)->Arg(5)->Arg(10)->Arg(15);

void BM_Build(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ensembles::build(cw(1.0, n, seed++)).trace());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Build)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMicrosecond)->Complexity(benchmark::oNSquared);

void BM_BuildPerturbed(benchmark::State& state) {
  auto spec = cw(1.5, static_cast<std::size_t>(state.range(0)), 0);
  spec.variant = ensembles::Variant::perturbed_supercritical;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ensembles::build_perturbed(spec).trace());
    ++spec.seed;
  }
}
BENCHMARK(BM_BuildPerturbed)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_Eigenvalues(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto h = ensembles::build(cw(1.0, n, 3));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::eigenvalues(h).sum());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Eigenvalues)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oNCubed);

void BM_EigenVectors(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto h = ensembles::build(cw(1.0, n, 3));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::symmetric_eigen(h.data(), n, true).values.size());
}
BENCHMARK(BM_EigenVectors)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Resolvent(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto h = ensembles::build(cw(0.0, n, 5));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::resolvent(h, {0.3, 0.1}).trace());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Resolvent)->RangeMultiplier(2)->Range(32, 512)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oNCubed);

void BM_SchurAllRows(benchmark::State& state) {
  const auto h = ensembles::build(cw(1.0, static_cast<std::size_t>(state.range(0)), 7));
  for (auto _ : state) benchmark::DoNotOptimize(ldp::schur_decompose_all(h, {0.5, 0.5}).size());
}
BENCHMARK(BM_SchurAllRows)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_StieltjesFromSpectrum(benchmark::State& state) {
  const auto ev = spectral::eigenvalues(ensembles::build(cw(0.0, static_cast<std::size_t>(state.range(0)), 9)));
  const spectral::SpectralPoint z(0.2, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(locallaw::s_minus_m(ev, z));
}
BENCHMARK(BM_StieltjesFromSpectrum)->Arg(256)->Arg(1024);

void BM_IntervalSup(benchmark::State& state) {
  const auto ev = spectral::eigenvalues(ensembles::build(cw(0.0, static_cast<std::size_t>(state.range(0)), 9)));
  for (auto _ : state) benchmark::DoNotOptimize(locallaw::interval_sup(ev).sup_deviation);
}
BENCHMARK(BM_IntervalSup)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
