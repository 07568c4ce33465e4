// OpenMP kernels against the serial reference implementation.
//
//   SDSR_THREADS=4 ./build/bench/sdsr_bench

#include <benchmark/benchmark.h>

#include <random>

#include "sdsr/degradation.hpp"
#include "sdsr/framelet.hpp"
#include "sdsr/parallel.hpp"

namespace {

using namespace sdsr;

Image random_image(int n) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(0.0, 255.0);
  Image u(n, n);
  for (double& v : u.pixels()) v = d(rng);
  return u;
}

void BM_AnalyzeParallel(benchmark::State& state) {
  const Image u = random_image(static_cast<int>(state.range(0)));
  const FrameletSystem sys(static_cast<int>(state.range(1)));
  CoefficientPyramid c;
  for (auto _ : state) {
    sys.analyze_into(u, c);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(u.size()));
}

void BM_AnalyzeSerial(benchmark::State& state) {
  const Image u = random_image(static_cast<int>(state.range(0)));
  const int levels = static_cast<int>(state.range(1));
  for (auto _ : state) {
    CoefficientPyramid c = reference::analyze(levels, u);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(u.size()));
}

void BM_SynthesizeParallel(benchmark::State& state) {
  const FrameletSystem sys(static_cast<int>(state.range(1)));
  const CoefficientPyramid c = sys.analyze(random_image(static_cast<int>(state.range(0))));
  Image u;
  for (auto _ : state) {
    sys.synthesize_into(c, u);
    benchmark::DoNotOptimize(u.pixels().data());
  }
}

void BM_SynthesizeSerial(benchmark::State& state) {
  const FrameletSystem sys(static_cast<int>(state.range(1)));
  const CoefficientPyramid c = sys.analyze(random_image(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    Image u = reference::synthesize(c);
    benchmark::DoNotOptimize(u.pixels().data());
  }
}

void BM_SumSquaresParallel(benchmark::State& state) {
  const FrameletSystem sys(4);
  const CoefficientPyramid c = sys.analyze(random_image(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(par::sum_squares(c.values()));
}

void BM_SumSquaresSerial(benchmark::State& state) {
  const FrameletSystem sys(4);
  const CoefficientPyramid c = sys.analyze(random_image(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    double s = 0.0;
    for (double v : c.values()) s += v * v;
    benchmark::DoNotOptimize(s);
  }
}

void BM_Blur(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image u = random_image(n);
  const BlurOperator op(make_psf(PsfKind::gaussian_25_sigma1p6), n, n);
  for (auto _ : state) {
    Image f = op.apply(u);
    benchmark::DoNotOptimize(f.pixels().data());
  }
}

void sizes_and_levels(benchmark::internal::Benchmark* b) {
  for (int n : {256, 512})
    for (int levels : {1, 4}) b->Args({n, levels});
}

BENCHMARK(BM_AnalyzeParallel)->Apply(sizes_and_levels)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnalyzeSerial)->Apply(sizes_and_levels)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SynthesizeParallel)->Apply(sizes_and_levels)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SynthesizeSerial)->Apply(sizes_and_levels)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SumSquaresParallel)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SumSquaresSerial)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Blur)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  sdsr::par::configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
