// Serial reference vs OpenMP kernels on training-sized inputs.
#include "dfm/kernels.hpp"
#include "dfm/surface.hpp"
#include "dfm/tensor.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace dfm;

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Tensor t(r, c);
    for (double& v : t.values()) v = n(rng);
    return t;
}

template <auto Fn>
void BM_gemm_nt(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor a = random_matrix(n, 64, 1);
    const Tensor b = random_matrix(64, 64, 2);
    Tensor c(n, 64);
    for (auto _ : state) {
        Fn({a.data(), n, 64}, {b.data(), 64, 64}, {c.data(), n, 64});
        benchmark::DoNotOptimize(c.data());
    }
}

template <auto Fn>
void BM_pairwise_dist(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor a = random_matrix(n, 3, 3);
    const Tensor b = random_matrix(n, 3, 4);
    Tensor c(n, n);
    for (auto _ : state) {
        Fn({a.data(), n, 3}, {b.data(), n, 3}, {c.data(), n, n});
        benchmark::DoNotOptimize(c.data());
    }
}

template <auto Fn>
void BM_land_quadratic(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    static const XyGrid grid(bump_surface(BumpSpec{}));
    const kernels::LandKernelParams p{0.125, 1e-2, 1.0};
    Tensor z = random_matrix(n, 3, 5);
    const Tensor dz = random_matrix(n, 3, 6);
    std::vector<double> value(n), gz(n * 3), gdz(n * 3);
    for (auto _ : state) {
        Fn(grid.view(), p, {z.data(), n, 3}, {dz.data(), n, 3}, value.data(), gz.data(), gdz.data());
        benchmark::DoNotOptimize(value.data());
    }
}

BENCHMARK(BM_gemm_nt<kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(512)->Arg(2048);
BENCHMARK(BM_gemm_nt<kernels::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(512)->Arg(2048);
BENCHMARK(BM_pairwise_dist<kernels::serial::pairwise_dist>)->Name("pairwise_dist/serial")->Arg(512);
BENCHMARK(BM_pairwise_dist<kernels::parallel::pairwise_dist>)->Name("pairwise_dist/parallel")->Arg(512);
BENCHMARK(BM_land_quadratic<kernels::serial::land_quadratic>)->Name("land_quadratic/serial")->Arg(512);
BENCHMARK(BM_land_quadratic<kernels::parallel::land_quadratic>)->Name("land_quadratic/parallel")->Arg(512);

} // namespace

BENCHMARK_MAIN();
