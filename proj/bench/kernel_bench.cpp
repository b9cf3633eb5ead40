// Serial reference kernels against their OpenMP variants. Thread count comes
// from OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "skipshift/kernels/feature_kernels.hpp"
#include "skipshift/kernels/pixel_kernels.hpp"

namespace {

using namespace skipshift;

std::vector<std::uint8_t> random_bytes(std::size_t n) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> d(0, 255);
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(d(gen));
  return v;
}

std::vector<float> random_floats(std::size_t n) {
  std::mt19937_64 gen(2);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

// state.range(0): image side.
template <bool Parallel>
void BM_ApplyLut(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto in = random_bytes(side * side * 3);
  std::vector<std::uint8_t> out(in.size());
  kernels::Lut lut{};
  for (int i = 0; i < 256; ++i) lut[i] = static_cast<std::uint8_t>(255 - i);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::omp::apply_lut(in, out, lut);
    } else {
      kernels::serial::apply_lut(in, out, lut);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * in.size()));
}

template <bool Parallel>
void BM_LumaSum(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto in = random_bytes(side * side * 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::omp::luma_sum(in) : kernels::serial::luma_sum(in));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * in.size()));
}

template <bool Parallel>
void BM_Desaturate(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto in = random_bytes(side * side * 3);
  std::vector<std::uint8_t> out(in.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::omp::desaturate(in, out, 0.25);
    } else {
      kernels::serial::desaturate(in, out, 0.25);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * in.size()));
}

// encoder_1-sized map on a 512 image: 64 x 128 x 128 onto a 16 x 16 grid.
template <bool Parallel>
void BM_PoolChw(benchmark::State& state) {
  const int channels = 64, side = 128;
  const auto map = random_floats(static_cast<std::size_t>(channels) * side * side);
  const auto windows = kernels::pooling_windows(side, 16);
  for (auto _ : state) {
    FeatureMatrix out;
    if constexpr (Parallel) {
      kernels::omp::pool_chw(map, channels, side, side, windows, windows, out);
    } else {
      kernels::serial::pool_chw(map, channels, side, side, windows, windows, out);
    }
    benchmark::DoNotOptimize(out.values.data());
  }
}

// state.range(0): feature dimensions; 40 images x 64 grid cells per set.
template <bool Parallel>
void BM_LayerHellinger(benchmark::State& state) {
  const int dims = static_cast<int>(state.range(0));
  const std::size_t rows = 40 * 64;
  FeatureMatrix ref{dims, random_floats(rows * dims)};
  FeatureMatrix shifted{dims, random_floats(rows * dims)};
  for (auto& v : shifted.values) v = v * 1.1f + 0.2f;
  for (auto _ : state) {
    auto out = Parallel ? kernels::omp::layer_hellinger(ref, shifted, 100)
                        : kernels::serial::layer_hellinger(ref, shifted, 100);
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK_TEMPLATE(BM_ApplyLut, false)->Arg(256)->Arg(512)->Arg(1500);
BENCHMARK_TEMPLATE(BM_ApplyLut, true)->Arg(256)->Arg(512)->Arg(1500);
BENCHMARK_TEMPLATE(BM_LumaSum, false)->Arg(512)->Arg(1500);
BENCHMARK_TEMPLATE(BM_LumaSum, true)->Arg(512)->Arg(1500);
BENCHMARK_TEMPLATE(BM_Desaturate, false)->Arg(512)->Arg(1500);
BENCHMARK_TEMPLATE(BM_Desaturate, true)->Arg(512)->Arg(1500);
BENCHMARK_TEMPLATE(BM_PoolChw, false);
BENCHMARK_TEMPLATE(BM_PoolChw, true);
BENCHMARK_TEMPLATE(BM_LayerHellinger, false)->Arg(64)->Arg(512);
BENCHMARK_TEMPLATE(BM_LayerHellinger, true)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
