// Serial reference convolution against the OpenMP im2col + GEMM path.
//
//   bench_kernels --benchmark_filter=Conv
//
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "rankmini/kernels.hpp"
#include "rankmini/network.hpp"
#include "rankmini/rng.hpp"

using namespace rankmini;
using kernels::ConvGeometry;

namespace {

// Teacher conv layers at a 16x16 patch, batch 32.
ConvGeometry layer(int index) {
  static const ConvGeometry g[] = {
      {32, 2, 16, 16, 32, 3, 1, 1},
      {32, 32, 8, 8, 64, 3, 1, 1},
      {32, 64, 4, 4, 128, 3, 1, 1},
  };
  return g[index];
}

std::vector<float> filled(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

struct Buffers {
  explicit Buffers(const ConvGeometry& g)
      : input(filled(g.batch * g.in_channels * g.height * g.width, 1)),
        weight(filled(g.out_channels * g.patch_size(), 2)),
        bias(filled(g.out_channels, 3)),
        output(g.batch * g.out_channels * g.out_height() * g.out_width()),
        columns(g.patch_size() * g.columns()),
        grad_input(input.size()),
        grad_weight(weight.size()),
        grad_bias(bias.size()) {}
  std::vector<float> input, weight, bias, output, columns, grad_input, grad_weight, grad_bias;
};

void set_flops(benchmark::State& state, const ConvGeometry& g, double passes) {
  const double macs = double(g.columns()) * double(g.patch_size()) * double(g.out_channels);
  state.counters["GFLOP/s"] =
      benchmark::Counter(2.0 * macs * passes * double(state.iterations()), benchmark::Counter::kIsRate,
                         benchmark::Counter::kIs1000);
  state.counters["threads"] = omp_get_max_threads();
}

void BM_ConvForwardReference(benchmark::State& state) {
  const auto g = layer(static_cast<int>(state.range(0)));
  Buffers b(g);
  for (auto _ : state) {
    kernels::reference::conv2d_forward<float>(g, b.input, b.weight, b.bias, b.output);
    benchmark::DoNotOptimize(b.output.data());
  }
  set_flops(state, g, 1);
}

void BM_ConvForwardParallel(benchmark::State& state) {
  const auto g = layer(static_cast<int>(state.range(0)));
  Buffers b(g);
  for (auto _ : state) {
    kernels::conv2d_forward<float>(g, b.input, b.weight, b.bias, b.output, b.columns);
    benchmark::DoNotOptimize(b.output.data());
  }
  set_flops(state, g, 1);
}

void BM_ConvBackwardReference(benchmark::State& state) {
  const auto g = layer(static_cast<int>(state.range(0)));
  Buffers b(g);
  for (auto _ : state) {
    kernels::reference::conv2d_backward<float>(g, b.input, b.weight, b.output, b.grad_input, b.grad_weight,
                                               b.grad_bias);
    benchmark::DoNotOptimize(b.grad_weight.data());
  }
  set_flops(state, g, 2);
}

void BM_ConvBackwardParallel(benchmark::State& state) {
  const auto g = layer(static_cast<int>(state.range(0)));
  Buffers b(g);
  kernels::im2col<float>(g, b.input, b.columns);
  for (auto _ : state) {
    kernels::conv2d_backward<float>(g, b.columns, b.weight, b.output, b.grad_input, b.grad_weight, b.grad_bias);
    benchmark::DoNotOptimize(b.grad_weight.data());
  }
  set_flops(state, g, 2);
}

void BM_TeacherForward(benchmark::State& state) {
  TeacherConfig cfg;
  cfg.geometry = {1, 16, 16};
  const auto m = build_teacher<float>(cfg);
  Rng rng(4);
  Tensor<float> r({64, 1, 16, 16}), d({64, 1, 16, 16});
  for (auto& v : r.values()) v = static_cast<float>(rng.uniform(0.0, 1.0));
  for (auto& v : d.values()) v = static_cast<float>(rng.uniform(0.0, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(quality_scores(m.spec, m.params, r, d));
  state.SetItemsProcessed(state.iterations() * 64);
}

}  // namespace

BENCHMARK(BM_ConvForwardReference)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForwardParallel)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardReference)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardParallel)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TeacherForward)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
