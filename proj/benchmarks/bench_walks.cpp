#include <vector>

#include <benchmark/benchmark.h>

#include "hdx/complex.hpp"
#include "hdx/spectra.hpp"
#include "hdx/stav.hpp"
#include "hdx/walks.hpp"

namespace bm = benchmark;

static void BM_PartiteComplexBuild(bm::State& state)
{
    const auto parts = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        hdx::Complex c = hdx::partite_complete_complex(std::vector<int>(parts, 3));
        bm::DoNotOptimize(c.level(1).size());
    }
}
BENCHMARK(BM_PartiteComplexBuild)->DenseRange(4, 8, 2)->Unit(bm::kMillisecond);

static void BM_ComplementWalkSpectrum(bm::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const hdx::Complex c = hdx::complete_complex(n, 5);
    for (auto _ : state) {
        hdx::SpectralReport r = hdx::square_spectrum(hdx::complement_walk(c, 1, 1));
        bm::DoNotOptimize(r.lambda_bip);
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_ComplementWalkSpectrum)->DenseRange(10, 22, 4)->Unit(bm::kMillisecond);

static void BM_LinkExpansion(bm::State& state)
{
    const hdx::Complex c = hdx::complete_complex(static_cast<int>(state.range(0)), 4);
    for (auto _ : state) {
        hdx::LinkExpansion e = hdx::link_expansion(c, true);
        bm::DoNotOptimize(e.value);
    }
}
BENCHMARK(BM_LinkExpansion)->Arg(10)->Arg(14)->Unit(bm::kMillisecond);

static void BM_HdxStavBuild(bm::State& state)
{
    const hdx::Complex c = hdx::complete_complex(static_cast<int>(state.range(0)), 5);
    for (auto _ : state) {
        hdx::StavInstance x = hdx::hdx_stav(c, 5, 1);
        bm::DoNotOptimize(x.n_vertices);
    }
}
BENCHMARK(BM_HdxStavBuild)->Arg(9)->Arg(11)->Unit(bm::kMillisecond);
