// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <vector>

#include "bcdnet/kernels.hpp"
#include "bcdnet/rng.hpp"

namespace {

using namespace bcdnet;

std::vector<float> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

kernels::ConvGeometry conv_geometry(const benchmark::State& state) {
  kernels::ConvGeometry g;
  g.batch = 8;
  g.in_channels = static_cast<std::size_t>(state.range(0));
  g.out_channels = 2 * g.in_channels;
  g.height = g.width = static_cast<std::size_t>(state.range(1));
  g.kernel = 3;
  g.stride = 1;
  g.padding = 1;
  return g;
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  const auto g = conv_geometry(state);
  const auto x = random_vector(g.batch * g.in_channels * g.height * g.width, 1);
  const auto w = random_vector(g.out_channels * g.in_channels * 9, 2);
  const auto b = random_vector(g.out_channels, 3);
  std::vector<float> y(g.batch * g.out_channels * g.out_height() * g.out_width());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::conv2d_forward<float>(x, w, b, y, g);
    } else {
      kernels::serial::conv2d_forward<float>(x, w, b, y, g);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.batch));
}

template <bool Parallel>
void BM_ConvBackwardInput(benchmark::State& state) {
  const auto g = conv_geometry(state);
  const auto gy = random_vector(g.batch * g.out_channels * g.out_height() * g.out_width(), 1);
  const auto w = random_vector(g.out_channels * g.in_channels * 9, 2);
  std::vector<float> gx(g.batch * g.in_channels * g.height * g.width);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::conv2d_backward_input<float>(gy, w, gx, g);
    } else {
      kernels::serial::conv2d_backward_input<float>(gy, w, gx, g);
    }
    benchmark::DoNotOptimize(gx.data());
  }
}

template <bool Parallel>
void BM_ConvBackwardWeight(benchmark::State& state) {
  const auto g = conv_geometry(state);
  const auto gy = random_vector(g.batch * g.out_channels * g.out_height() * g.out_width(), 1);
  const auto x = random_vector(g.batch * g.in_channels * g.height * g.width, 2);
  std::vector<float> gw(g.out_channels * g.in_channels * 9), gb(g.out_channels);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::conv2d_backward_weight<float>(gy, x, gw, gb, g);
    } else {
      kernels::serial::conv2d_backward_weight<float>(gy, x, gw, gb, g);
    }
    benchmark::DoNotOptimize(gw.data());
  }
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::matmul<float>(a, b, c, n, n, n);
    } else {
      kernels::serial::matmul<float>(a, b, c, n, n, n);
    }
    benchmark::DoNotOptimize(c.data());
  }
}

template <bool Parallel>
void BM_MaxPool(benchmark::State& state) {
  kernels::PoolGeometry g{8, static_cast<std::size_t>(state.range(0)), 64, 64, 2, 2};
  const auto x = random_vector(g.batch * g.channels * g.height * g.width, 1);
  std::vector<float> y(g.batch * g.channels * 32 * 32);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::maxpool_forward<float>(x, y, g);
    } else {
      kernels::serial::maxpool_forward<float>(x, y, g);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_BatchNormMoments(benchmark::State& state) {
  kernels::ChannelGeometry g{16, static_cast<std::size_t>(state.range(0)), 56 * 56};
  const auto x = random_vector(g.batch * g.channels * g.spatial, 1);
  std::vector<float> mean(g.channels), var(g.channels);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::channel_moments<float>(x, mean, var, g);
    } else {
      kernels::serial::channel_moments<float>(x, mean, var, g);
    }
    benchmark::DoNotOptimize(var.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Args({16, 56})->Args({64, 28})->UseRealTime();
BENCHMARK(BM_ConvForward<true>)->Args({16, 56})->Args({64, 28})->UseRealTime();
BENCHMARK(BM_ConvBackwardInput<false>)->Args({16, 56})->UseRealTime();
BENCHMARK(BM_ConvBackwardInput<true>)->Args({16, 56})->UseRealTime();
BENCHMARK(BM_ConvBackwardWeight<false>)->Args({16, 56})->UseRealTime();
BENCHMARK(BM_ConvBackwardWeight<true>)->Args({16, 56})->UseRealTime();
BENCHMARK(BM_Matmul<false>)->Arg(256)->UseRealTime();
BENCHMARK(BM_Matmul<true>)->Arg(256)->UseRealTime();
BENCHMARK(BM_MaxPool<false>)->Arg(32)->UseRealTime();
BENCHMARK(BM_MaxPool<true>)->Arg(32)->UseRealTime();
BENCHMARK(BM_BatchNormMoments<false>)->Arg(64)->UseRealTime();
BENCHMARK(BM_BatchNormMoments<true>)->Arg(64)->UseRealTime();

BENCHMARK_MAIN();
