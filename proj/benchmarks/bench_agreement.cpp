#include <benchmark/benchmark.h>

#include "hdx/agreement.hpp"
#include "hdx/complex.hpp"
#include "hdx/decoder.hpp"
#include "hdx/stav.hpp"

namespace bm = benchmark;

namespace {

struct Fixture {
    hdx::StavInstance x;
    hdx::Ensemble f;
};

Fixture make_fixture(int n, double alpha)
{
    Fixture fx{hdx::hdx_stav(hdx::complete_complex(n, 5), 5, 1), {}};
    hdx::GlobalFunction g = hdx::random_global(fx.x, 2, 7);
    fx.f = hdx::corrupt(hdx::perfect_ensemble(fx.x.S, g, 2), alpha, hdx::CorruptionMode::FlipOne, 11);
    return fx;
}

}  // namespace

static void BM_RejectionExact(bm::State& state)
{
    const Fixture fx = make_fixture(static_cast<int>(state.range(0)), 0.05);
    for (auto _ : state) {
        hdx::TestResult r = hdx::rejection(fx.x, fx.f);
        bm::DoNotOptimize(r.epsilon);
    }
}
BENCHMARK(BM_RejectionExact)->Arg(9)->Arg(11)->Unit(bm::kMillisecond);

static void BM_RejectionMonteCarlo(bm::State& state)
{
    const Fixture fx = make_fixture(11, 0.05);
    hdx::RejectionOptions opts;
    opts.mode = hdx::RejectionMode::MonteCarlo;
    opts.samples = static_cast<std::size_t>(state.range(0));
    opts.seed = 3;
    for (auto _ : state) {
        hdx::TestResult r = hdx::rejection(fx.x, fx.f, opts);
        bm::DoNotOptimize(r.epsilon);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_RejectionMonteCarlo)->Arg(10000)->Arg(100000)->Unit(bm::kMillisecond);

static void BM_GlobalDecode(bm::State& state)
{
    const Fixture fx = make_fixture(static_cast<int>(state.range(0)), 0.05);
    for (auto _ : state) {
        hdx::DecodeOutput out = hdx::global_decode(fx.x, fx.f);
        bm::DoNotOptimize(out.G.data());
    }
}
BENCHMARK(BM_GlobalDecode)->Arg(9)->Arg(11)->Unit(bm::kMillisecond);
