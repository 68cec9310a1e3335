// Compares the OpenMP kernels against their serial references.
// Run with --benchmark_filter=conv to narrow.
#include <benchmark/benchmark.h>

#include "normscore/kernels.hpp"
#include "normscore/rng.hpp"

using namespace normscore;

namespace {

Tensor rand_t(std::vector<int> shape, std::uint64_t seed) {
    Rng rng(seed);
    return Tensor::randn(std::move(shape), rng);
}

void conv_args(benchmark::internal::Benchmark* b) {
    b->Args({16, 64})->Args({24, 32})->Args({48, 8});
}

}  // namespace

static void BM_conv2d_omp(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0)), n = static_cast<int>(state.range(1));
    const Tensor in = rand_t({c, n, n}, 1), w = rand_t({c, c, 3, 3}, 2), b = rand_t({c}, 3);
    Tensor out(std::vector<int>{c, n, n});
    for (auto _ : state) {
        kernels::conv2d_forward(in, w, &b, 1, 1, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * 2LL * c * c * 9 * n * n);
}
BENCHMARK(BM_conv2d_omp)->Apply(conv_args);

static void BM_conv2d_serial(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0)), n = static_cast<int>(state.range(1));
    const Tensor in = rand_t({c, n, n}, 1), w = rand_t({c, c, 3, 3}, 2), b = rand_t({c}, 3);
    Tensor out(std::vector<int>{c, n, n});
    for (auto _ : state) {
        kernels::conv2d_forward_serial(in, w, &b, 1, 1, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * 2LL * c * c * 9 * n * n);
}
BENCHMARK(BM_conv2d_serial)->Apply(conv_args);

static void BM_conv2d_bwd_weight_omp(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0)), n = static_cast<int>(state.range(1));
    const Tensor in = rand_t({c, n, n}, 1), dout = rand_t({c, n, n}, 2);
    Tensor dw(std::vector<int>{c, c, 3, 3}), db(std::vector<int>{c});
    for (auto _ : state) {
        kernels::conv2d_backward_weight(in, dout, 1, 1, dw, &db);
        benchmark::DoNotOptimize(dw.data());
    }
    state.SetItemsProcessed(state.iterations() * 2LL * c * c * 9 * n * n);
}
BENCHMARK(BM_conv2d_bwd_weight_omp)->Apply(conv_args);

static void BM_conv2d_bwd_weight_serial(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0)), n = static_cast<int>(state.range(1));
    const Tensor in = rand_t({c, n, n}, 1), dout = rand_t({c, n, n}, 2);
    Tensor dw(std::vector<int>{c, c, 3, 3}), db(std::vector<int>{c});
    for (auto _ : state) {
        kernels::conv2d_backward_weight_serial(in, dout, 1, 1, dw, &db);
        benchmark::DoNotOptimize(dw.data());
    }
    state.SetItemsProcessed(state.iterations() * 2LL * c * c * 9 * n * n);
}
BENCHMARK(BM_conv2d_bwd_weight_serial)->Apply(conv_args);

static void BM_blur_omp(benchmark::State& state) {
    const Tensor in = rand_t({192, 192}, 4);
    Tensor out(in.shape());
    for (auto _ : state) {
        kernels::gaussian_blur(in, 2.5, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_blur_omp);

static void BM_blur_serial(benchmark::State& state) {
    const Tensor in = rand_t({192, 192}, 4);
    Tensor out(in.shape());
    for (auto _ : state) {
        kernels::gaussian_blur_serial(in, 2.5, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_blur_serial);

static void BM_erode_omp(benchmark::State& state) {
    const Tensor in = rand_t({192, 192}, 5);
    Tensor out(in.shape());
    for (auto _ : state) {
        kernels::erode3x3(in, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_erode_omp);

static void BM_erode_serial(benchmark::State& state) {
    const Tensor in = rand_t({192, 192}, 5);
    Tensor out(in.shape());
    for (auto _ : state) {
        kernels::erode3x3_serial(in, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_erode_serial);

BENCHMARK_MAIN();
