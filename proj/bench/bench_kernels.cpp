// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against the OpenMP kernels on a training-sized batch.

#include <random>

#include <benchmark/benchmark.h>

#include "modid/kernels.hpp"
#include "modid/mlp.hpp"

namespace {

using modid::Matrix;
using modid::MlpFunction;

struct Setup {
  MlpFunction net;
  Matrix x, up;
};

Setup make_setup(std::size_t width, std::size_t batch) {
  Setup s{modid::init_kaiming(modid::mlp_layout(2, width, 4, 2), 1), Matrix(2, batch), Matrix(2, batch)};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : s.x.data()) v = u(rng);
  for (double& v : s.up.data()) v = u(rng) - 0.5;
  return s;
}

template <bool Omp>
void forward_backward(benchmark::State& state) {
  const auto s = make_setup(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    modid::ForwardTape tape;
    if constexpr (Omp) {
      benchmark::DoNotOptimize(modid::kernels::omp::forward_batch(s.net, s.x, &tape));
      benchmark::DoNotOptimize(modid::kernels::omp::backward(s.net, tape, s.up));
    } else {
      benchmark::DoNotOptimize(modid::kernels::serial::forward_batch(s.net, s.x, &tape));
      benchmark::DoNotOptimize(modid::kernels::serial::backward(s.net, tape, s.up));
    }
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void args(benchmark::internal::Benchmark* b) {
  for (long width : {20, 50})
    for (long batch : {200, 2000, 10000}) b->Args({width, batch});
}

BENCHMARK(forward_backward<false>)->Name("serial")->Apply(args);
BENCHMARK(forward_backward<true>)->Name("omp")->Apply(args);

}  // namespace

BENCHMARK_MAIN();
