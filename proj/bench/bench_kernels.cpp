// Serial reference kernels against the OpenMP kernels on the model's layer shapes.
//
//   bench_kernels --benchmark_filter=conv

#include <benchmark/benchmark.h>

#include <vector>

#include "ierot/nn/kernels.hpp"
#include "ierot/rng.hpp"

namespace k = ierot::nn::kernels;

namespace {

std::vector<float> random_vector(std::size_t n, std::uint64_t seed) {
    ierot::Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

// Args: batch, in channels, side, out channels.
k::ConvDims conv_dims(const benchmark::State& s) {
    return {static_cast<std::size_t>(s.range(0)), static_cast<std::size_t>(s.range(1)),
            static_cast<std::size_t>(s.range(2)), static_cast<std::size_t>(s.range(2)),
            static_cast<std::size_t>(s.range(3))};
}

void set_conv_counters(benchmark::State& s, const k::ConvDims& d, double passes) {
    const double macs = static_cast<double>(d.n * d.k * d.h * d.w * d.c * 9) * passes;
    s.counters["GMAC/s"] = benchmark::Counter(macs * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

template <bool kParallel>
void conv_forward(benchmark::State& s) {
    const auto d = conv_dims(s);
    const auto x = random_vector(d.n * d.c * d.h * d.w, 1);
    const auto w = random_vector(d.k * d.c * 9, 2);
    std::vector<float> out(d.n * d.k * d.h * d.w);
    for (auto _ : s) {
        if constexpr (kParallel)
            k::conv3x3_forward(d, x, w, out);
        else
            k::reference::conv3x3_forward(d, x, w, out);
        benchmark::DoNotOptimize(out.data());
    }
    set_conv_counters(s, d, 1.0);
}

template <bool kParallel>
void conv_backward(benchmark::State& s) {
    const auto d = conv_dims(s);
    const auto x = random_vector(d.n * d.c * d.h * d.w, 1);
    const auto w = random_vector(d.k * d.c * 9, 2);
    const auto dout = random_vector(d.n * d.k * d.h * d.w, 3);
    std::vector<float> dx(x.size()), dw(w.size());
    for (auto _ : s) {
        if constexpr (kParallel)
            k::conv3x3_backward(d, x, w, dout, dx, dw);
        else
            k::reference::conv3x3_backward(d, x, w, dout, dx, dw);
        benchmark::DoNotOptimize(dw.data());
    }
    set_conv_counters(s, d, 2.0);
}

template <bool kParallel>
void batchnorm_forward(benchmark::State& s) {
    const k::PlaneDims d{static_cast<std::size_t>(s.range(0)), static_cast<std::size_t>(s.range(1)),
                         static_cast<std::size_t>(s.range(2)), static_cast<std::size_t>(s.range(2))};
    const auto x = random_vector(d.n * d.c * d.h * d.w, 4);
    const std::vector<float> gamma(d.c, 1.0f), beta(d.c, 0.0f);
    std::vector<float> out(x.size()), xhat(x.size()), mean(d.c), var(d.c), inv(d.c);
    for (auto _ : s) {
        if constexpr (kParallel)
            k::batchnorm_forward_train(d, x, gamma, beta, 1e-5f, out, xhat, mean, var, inv);
        else
            k::reference::batchnorm_forward_train(d, x, gamma, beta, 1e-5f, out, xhat, mean, var, inv);
        benchmark::DoNotOptimize(out.data());
    }
    s.SetBytesProcessed(static_cast<std::int64_t>(s.iterations() * x.size() * sizeof(float)));
}

void conv_args(benchmark::internal::Benchmark* b) {
    b->Args({32, 3, 32, 64})->Args({32, 64, 16, 128})->Args({32, 128, 16, 128})->Args({32, 128, 8, 128});
    b->Unit(benchmark::kMillisecond)->UseRealTime();
}

void bn_args(benchmark::internal::Benchmark* b) {
    b->Args({128, 64, 32})->Args({128, 128, 16})->Unit(benchmark::kMillisecond)->UseRealTime();
}

}  // namespace

BENCHMARK(conv_forward<false>)->Name("conv3x3_forward/reference")->Apply(conv_args);
BENCHMARK(conv_forward<true>)->Name("conv3x3_forward/parallel")->Apply(conv_args);
BENCHMARK(conv_backward<false>)->Name("conv3x3_backward/reference")->Apply(conv_args);
BENCHMARK(conv_backward<true>)->Name("conv3x3_backward/parallel")->Apply(conv_args);
BENCHMARK(batchnorm_forward<false>)->Name("batchnorm_forward/reference")->Apply(bn_args);
BENCHMARK(batchnorm_forward<true>)->Name("batchnorm_forward/parallel")->Apply(bn_args);

BENCHMARK_MAIN();
