#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ctsynth/conv.hpp"
#include "ctsynth/gemm.hpp"
#include "ctsynth/tensor.hpp"

namespace {

using ctsynth::Shape;
using ctsynth::Tensor;
using ctsynth::kernels::Trans;

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

Tensor random_tensor(Shape shape, unsigned seed) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return Tensor(std::move(shape), random_vec(n, seed));
}

template <bool Reference>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Reference) {
      ctsynth::kernels::gemm_reference(Trans::no, Trans::no, n, n, n, a.data(), n, b.data(), n, c.data(), n, false);
    } else {
      ctsynth::kernels::gemm(Trans::no, Trans::no, n, n, n, a.data(), n, b.data(), n, c.data(), n, false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOP/s"] =
      benchmark::Counter(2.0 * n * n * n, benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Gemm<false>)->Name("gemm")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_Gemm<true>)->Name("gemm_reference")->Arg(64)->Arg(256);

// Second discriminator conv at 40x40 input: [16,20,20,256] -> 128 channels, stride 1.
void BM_DiscConv2(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({16, 20, 20, 256}, 3);
  const Tensor w = random_tensor({k, k, 256, 128}, 4);
  const Tensor dy = random_tensor({16, 20, 20, 128}, 5);
  const bool backward = state.range(1) != 0;
  for (auto _ : state) {
    if (backward) {
      benchmark::DoNotOptimize(ctsynth::kernels::conv2d_grad_input(dy, w, x.shape(), 1));
      benchmark::DoNotOptimize(ctsynth::kernels::conv2d_grad_weight(x, dy, k, 1));
    } else {
      benchmark::DoNotOptimize(ctsynth::kernels::conv2d(x, w, nullptr, 1));
    }
  }
}
BENCHMARK(BM_DiscConv2)->ArgNames({"k", "backward"})->Args({3, 0})->Args({3, 1})->Args({5, 0})->Unit(benchmark::kMillisecond);

// Third generator layer at 40x40 output: [16,40,40,128] -> 64 channels, stride 1.
void BM_GenTconv3(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({16, 40, 40, 128}, 6);
  const Tensor w = random_tensor({k, k, 64, 128}, 7);
  const Tensor dy = random_tensor({16, 40, 40, 64}, 8);
  const bool backward = state.range(1) != 0;
  for (auto _ : state) {
    if (backward) {
      benchmark::DoNotOptimize(ctsynth::kernels::conv2d_transpose_grad_input(dy, w, 1));
      benchmark::DoNotOptimize(ctsynth::kernels::conv2d_transpose_grad_weight(x, dy, k, 1));
    } else {
      benchmark::DoNotOptimize(ctsynth::kernels::conv2d_transpose(x, w, nullptr, 1));
    }
  }
}
BENCHMARK(BM_GenTconv3)->ArgNames({"k", "backward"})->Args({3, 0})->Args({3, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
