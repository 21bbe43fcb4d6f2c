#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "obliv/gf2m.hpp"
#include "obliv/operator.hpp"
#include "obliv/pattern.hpp"
#include "obliv/perturb.hpp"
#include "obliv/rng.hpp"
#include "obliv/solver.hpp"
#include "obliv/spectra.hpp"

using namespace obliv;

namespace {

Vector gaussian(std::size_t n, BitSource& src) {
  Vector x(n);
  for (auto& v : x) v = src.next_gaussian();
  return x;
}

}  // namespace

static void BM_FieldMul(benchmark::State& state) {
  const GFContext& f = gf_context(static_cast<unsigned>(state.range(0)));
  std::uint64_t a = 0x9e3779b97f4a7c15ULL & f.element_mask(), b = 0x2545f4914f6cdd1dULL & f.element_mask();
  for (auto _ : state) {
    a = f.mul(a, b) ^ 1;
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_FieldMul)->Arg(8)->Arg(20)->Arg(64);

static void BM_ClmulPortable(benchmark::State& state) {
  std::uint64_t a = 0x9e3779b97f4a7c15ULL, lo = 0, hi = 0;
  for (auto _ : state) {
    clmul64_portable(a, 0x2545f4914f6cdd1dULL, lo, hi);
    a ^= lo;
    benchmark::DoNotOptimize(hi);
  }
}
BENCHMARK(BM_ClmulPortable);

static void BM_SubsetSample(benchmark::State& state) {
  BitSource src(1);
  const auto n = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(src.sample_k_subset(n, 8));
}
BENCHMARK(BM_SubsetSample)->Arg(1024)->Arg(1 << 20);

// One streamed V x costs n^2 sign evaluations; items are matrix entries.
static void BM_PatternApply(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  BitSource src(2);
  const auto v = PatternMatrix::build(n, src);
  const Vector x = gaussian(n, src);
  Vector y(n);
  for (auto _ : state) {
    v.apply(x, y);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}
BENCHMARK(BM_PatternApply)->RangeMultiplier(4)->Range(64, 4096)->Unit(benchmark::kMicrosecond);

static void BM_PerturbationApply(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  BitSource src(3);
  const auto r = build_perturbation(n, 0.1, 0.1, {}, src);
  const Vector x = gaussian(n, src);
  Vector y(n);
  for (auto _ : state) {
    r.apply(x, y);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_PerturbationApply)->RangeMultiplier(4)->Range(64, 4096)->Unit(benchmark::kMicrosecond);

static void BM_PerturbationBuild(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    BitSource src(++seed);
    benchmark::DoNotOptimize(build_perturbation(n, 0.1, 0.1, {}, src));
  }
}
BENCHMARK(BM_PerturbationBuild)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);

static void BM_WalshHadamard(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  BitSource src(4);
  Vector x = gaussian(n, src);
  for (auto _ : state) {
    walsh_hadamard(x);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_WalshHadamard)->RangeMultiplier(16)->Range(256, 1 << 20);

static void BM_SingularValues(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  BitSource src(5);
  const DenseMatrix a = random_gaussian(n, n, src);
  for (auto _ : state) benchmark::DoNotOptimize(singular_values(a));
}
BENCHMARK(BM_SingularValues)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_SpectralNorm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  BitSource src(6);
  const DenseMatrix a = random_gaussian(n, n, src);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_norm(a));
}
BENCHMARK(BM_SpectralNorm)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_SolveIdentity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto op = exact_from_dense(DenseMatrix::identity(n));
  BitSource g(7);
  const Vector b = gaussian(n, g);
  SolveConfig cfg;
  cfg.eps = 0.2;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    BitSource src(++seed);
    benchmark::DoNotOptimize(solve_backward(op, op, b, cfg, src));
  }
}
BENCHMARK(BM_SolveIdentity)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
