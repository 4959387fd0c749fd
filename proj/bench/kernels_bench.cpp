// Serial reference vs OpenMP kernels on the video encoder's layer shapes.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "atract/kernels/conv3d.hpp"

namespace k = atract::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// Layer shapes: 0 = conv1 at 8x16x8, 1 = conv2 at 4x8x4, 2 = conv1 at 32x128x64.
k::Conv3dGeometry layer(int which) {
    switch (which) {
        case 0: return {3, 16, 8, 16, 8, 3};
        case 1: return {16, 32, 4, 8, 4, 3};
        default: return {3, 16, 32, 128, 64, 3};
    }
}

template <auto Fn>
void conv_forward(benchmark::State& state) {
    const auto g = layer(static_cast<int>(state.range(0)));
    const auto in = random_vector(g.input_size(), 1);
    const auto w = random_vector(g.weight_size(), 2);
    const auto b = random_vector(static_cast<std::size_t>(g.out_channels), 3);
    std::vector<double> out(g.output_size());
    for (auto _ : state) {
        Fn(g, in, w, b, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.counters["MACs/s"] = benchmark::Counter(static_cast<double>(g.macs()), benchmark::Counter::kIsIterationInvariantRate);
}

template <auto Fn>
void conv_backward_input(benchmark::State& state) {
    const auto g = layer(static_cast<int>(state.range(0)));
    const auto dout = random_vector(g.output_size(), 4);
    const auto w = random_vector(g.weight_size(), 2);
    std::vector<double> din(g.input_size());
    for (auto _ : state) {
        Fn(g, dout, w, din);
        benchmark::DoNotOptimize(din.data());
    }
    state.counters["MACs/s"] = benchmark::Counter(static_cast<double>(g.macs()), benchmark::Counter::kIsIterationInvariantRate);
}

template <auto Fn>
void conv_backward_weight(benchmark::State& state) {
    const auto g = layer(static_cast<int>(state.range(0)));
    const auto in = random_vector(g.input_size(), 1);
    const auto dout = random_vector(g.output_size(), 4);
    std::vector<double> dw(g.weight_size()), db(static_cast<std::size_t>(g.out_channels));
    for (auto _ : state) {
        Fn(g, in, dout, dw, db);
        benchmark::DoNotOptimize(dw.data());
    }
    state.counters["MACs/s"] = benchmark::Counter(static_cast<double>(g.macs()), benchmark::Counter::kIsIterationInvariantRate);
}

template <auto Fn>
void pool_forward(benchmark::State& state) {
    const k::Pool3dGeometry g{16, 32, 128, 64, 2};
    const auto in = random_vector(g.input_size(), 5);
    std::vector<double> out(g.output_size());
    std::vector<std::int32_t> arg(g.output_size());
    for (auto _ : state) {
        Fn(g, in, out, arg);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(conv_forward<k::reference::conv3d_forward>)->Name("conv3d_forward/reference")->DenseRange(0, 2);
BENCHMARK(conv_forward<k::parallel::conv3d_forward>)->Name("conv3d_forward/parallel")->DenseRange(0, 2);
BENCHMARK(conv_backward_input<k::reference::conv3d_backward_input>)->Name("conv3d_backward_input/reference")->DenseRange(0, 1);
BENCHMARK(conv_backward_input<k::parallel::conv3d_backward_input>)->Name("conv3d_backward_input/parallel")->DenseRange(0, 1);
BENCHMARK(conv_backward_weight<k::reference::conv3d_backward_weight>)->Name("conv3d_backward_weight/reference")->DenseRange(0, 1);
BENCHMARK(conv_backward_weight<k::parallel::conv3d_backward_weight>)->Name("conv3d_backward_weight/parallel")->DenseRange(0, 1);
BENCHMARK(pool_forward<k::reference::maxpool3d_forward>)->Name("maxpool3d_forward/reference");
BENCHMARK(pool_forward<k::parallel::maxpool3d_forward>)->Name("maxpool3d_forward/parallel");

BENCHMARK_MAIN();
