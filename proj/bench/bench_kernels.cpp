// OpenMP kernels vs the serial reference, on layer sizes from the
// Indian Pines networks (200 bands, FC batch 64, conv batch 32 of 7x7 patches).

#include "bandsel/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace bandsel;

namespace {

std::vector<double> filled(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v)
        x = d(g);
    return v;
}

template <bool Parallel>
void dense_forward(benchmark::State& state)
{
    const std::size_t batch = 64, in = std::size_t(state.range(0)), out = std::size_t(state.range(1));
    const auto x = filled(batch * in, 1), w = filled(in * out, 2), b = filled(out, 3);
    std::vector<double> y(batch * out);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::dense_forward(x, w, b, y, batch, in, out);
        else
            kernels::serial::dense_forward(x, w, b, y, batch, in, out);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(std::int64_t(state.iterations() * batch * in * out));
}

template <bool Parallel>
void dense_backward(benchmark::State& state)
{
    const std::size_t batch = 64, in = std::size_t(state.range(0)), out = std::size_t(state.range(1));
    const auto x = filled(batch * in, 1), w = filled(in * out, 2), gy = filled(batch * out, 3);
    std::vector<double> gx(batch * in), gw(in * out), gb(out);
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::dense_backward_input(gy, w, gx, batch, in, out);
            kernels::dense_backward_params(x, gy, gw, gb, batch, in, out);
        } else {
            kernels::serial::dense_backward_input(gy, w, gx, batch, in, out);
            kernels::serial::dense_backward_params(x, gy, gw, gb, batch, in, out);
        }
        benchmark::DoNotOptimize(gw.data());
    }
    state.SetItemsProcessed(std::int64_t(state.iterations() * 2 * batch * in * out));
}

kernels::ConvGeometry conv_geometry(const benchmark::State& state)
{
    return kernels::same_geometry(32, 7, 7, std::size_t(state.range(0)), std::size_t(state.range(1)), 3, 3,
                                  std::size_t(state.range(2)));
}

template <bool Parallel>
void conv_forward(benchmark::State& state)
{
    const auto g = conv_geometry(state);
    const auto x = filled(g.input_size(), 1), k = filled(g.kernel_size(), 2), b = filled(g.out_c, 3);
    std::vector<double> y(g.output_size());
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::conv_forward(x, k, b, y, g);
        else
            kernels::serial::conv_forward(x, k, b, y, g);
        benchmark::DoNotOptimize(y.data());
    }
}

template <bool Parallel>
void conv_backward(benchmark::State& state)
{
    const auto g = conv_geometry(state);
    const auto x = filled(g.input_size(), 1), k = filled(g.kernel_size(), 2), gy = filled(g.output_size(), 3);
    std::vector<double> gx(g.input_size()), gk(g.kernel_size()), gb(g.out_c);
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::conv_backward_input(gy, k, gx, g);
            kernels::conv_backward_kernel(x, gy, gk, gb, g);
        } else {
            kernels::serial::conv_backward_input(gy, k, gx, g);
            kernels::serial::conv_backward_kernel(x, gy, gk, gb, g);
        }
        benchmark::DoNotOptimize(gk.data());
    }
}

void dense_args(benchmark::internal::Benchmark* b)
{
    b->Args({200, 64})->Args({128, 200})->Args({256, 200});
}

// (in_c, out_c, stride): first BAM conv, RecNet conv1 and conv2.
void conv_args(benchmark::internal::Benchmark* b)
{
    b->Args({200, 64, 1})->Args({200, 128, 1})->Args({128, 64, 2});
}

}  // namespace

BENCHMARK(dense_forward<false>)->Name("dense_forward/serial")->Apply(dense_args);
BENCHMARK(dense_forward<true>)->Name("dense_forward/openmp")->Apply(dense_args);
BENCHMARK(dense_backward<false>)->Name("dense_backward/serial")->Apply(dense_args);
BENCHMARK(dense_backward<true>)->Name("dense_backward/openmp")->Apply(dense_args);
BENCHMARK(conv_forward<false>)->Name("conv_forward/serial")->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(conv_forward<true>)->Name("conv_forward/openmp")->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(conv_backward<false>)->Name("conv_backward/serial")->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(conv_backward<true>)->Name("conv_backward/openmp")->Apply(conv_args)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
