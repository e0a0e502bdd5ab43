// Serial reference GEMM against the OpenMP row-parallel kernel.
#include <tiedlm/kernels.hpp>
#include <tiedlm/matrix.hpp>
#include <tiedlm/rng.hpp>

#include <benchmark/benchmark.h>

namespace {

tiedlm::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    tiedlm::Rng rng(seed);
    tiedlm::Matrix m(r, c);
    for (auto &v : m.values()) {
        v = rng.uniform(-1.0, 1.0);
    }
    return m;
}

template <bool Parallel, bool Transposed>
void BM_gemm(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_matrix(n, n, 1);
    const auto b = random_matrix(n, n, 2);
    tiedlm::Matrix c(n, n);
    for (auto _ : state) {
        if constexpr (Parallel && Transposed) {
            tiedlm::kernels::parallel::gemm_tn(a.data(), b.data(), c.data(), n, n, n, false);
        } else if constexpr (Parallel) {
            tiedlm::kernels::parallel::gemm_nn(a.data(), b.data(), c.data(), n, n, n, false);
        } else if constexpr (Transposed) {
            tiedlm::kernels::serial::gemm_tn(a.data(), b.data(), c.data(), n, n, n, false);
        } else {
            tiedlm::kernels::serial::gemm_nn(a.data(), b.data(), c.data(), n, n, n, false);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(
        2.0 * static_cast<double>(n * n * n), benchmark::Counter::kIsIterationInvariantRate,
        benchmark::Counter::kIs1000);
}

} // namespace

BENCHMARK(BM_gemm<false, false>)->Name("serial/gemm_nn")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_gemm<true, false>)->Name("parallel/gemm_nn")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_gemm<false, true>)->Name("serial/gemm_tn")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_gemm<true, true>)->Name("parallel/gemm_tn")->RangeMultiplier(2)->Range(64, 512);

BENCHMARK_MAIN();
