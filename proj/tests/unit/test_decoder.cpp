#include <cmath>

#include "catch_amalgamated.hpp"

#include "hdx/agreement.hpp"
#include "hdx/complex.hpp"
#include "hdx/decoder.hpp"
#include "support.hpp"

using namespace hdx;
using Catch::Matchers::WithinAbs;
using hdx::testing::error_kind;

TEST_CASE("decoder configuration", "[decoder]")
{
    DecoderConfig ok;
    REQUIRE_NOTHROW(ok.validate());
    DecoderConfig swapped{0.1, 0.05};
    REQUIRE(error_kind([&] { swapped.validate(); }) == ErrorKind::ParameterRange);
    DecoderConfig zero{0.0, 0.05};
    REQUIRE(error_kind([&] { zero.validate(); }) == ErrorKind::ParameterRange);
}

TEST_CASE("perfect ensembles decode exactly", "[decoder]")
{
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    for (int alphabet : {2, 3}) {
        GlobalFunction g = random_global(x, alphabet, 12);
        Ensemble f = perfect_ensemble(x, g, alphabet);
        LocalPopularity h = local_popularity(x, f);
        for (std::size_t a = 0; a < h.size(); ++a)
            REQUIRE(h[a] == std::vector<Symbol>{g[static_cast<std::size_t>(x.A->content[a][0])]});
        ReachFunctions rf = reach_functions(x, f, h);
        for (const auto& row : rf)
            for (const auto& [v, sym] : row)
                REQUIRE(sym == g[v]);

        DecodeOutput out = global_decode(x, f);
        REQUIRE(out.G == g);
        REQUIRE_FALSE(out.fallback);
        REQUIRE(out.diagnostics.epsilon == 0.0);
        REQUIRE(out.diagnostics.distance == 0.0);
        REQUIRE(out.diagnostics.a_star_probability == 0.0);
        for (char b : out.bad.a_star)
            REQUIRE_FALSE(b);
    }
}

TEST_CASE("a single corrupted set is outvoted", "[decoder]")
{
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    GlobalFunction g = random_global(x, 2, 5);
    Ensemble f = perfect_ensemble(x, g, 2);
    for (auto& v : f.values[7])
        v ^= 1;
    DecodeOutput out = global_decode(x, f);
    REQUIRE(out.G == g);
    REQUIRE_THAT(out.diagnostics.distance, WithinAbs(x.s_prob[7], 1e-15));
    REQUIRE(out.diagnostics.epsilon > 0.0);
    REQUIRE(out.diagnostics.h_disagreement > 0.0);

    nlohmann::json j = to_json(out, true);
    REQUIRE(j.contains("G"));
    REQUIRE(j.contains("diagnostics"));
}

TEST_CASE("decoding is deterministic", "[decoder][oracle]")
{
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    Ensemble f = corrupt(perfect_ensemble(x, random_global(x, 2, 3), 2), 0.3, CorruptionMode::ResampleSet, 3);
    DecodeOutput a = global_decode(x, f), b = global_decode(x, f);
    REQUIRE(a.G == b.G);
    REQUIRE(a.bad.bad_probability == b.bad.bad_probability);
    REQUIRE(to_json(a.diagnostics) == to_json(b.diagnostics));
}

TEST_CASE("subset agreement samplers", "[decoder]")
{
    StavInstance x = hdx_stav(complete_complex(8, 4), 4, 1);
    GlobalFunction g = random_global(x, 2, 6);
    Ensemble f = perfect_ensemble(x, g, 2);
    for (const auto& sampler : {singleton_sampler(x), complement_sampler(x)}) {
        double total = 0.0;
        for (const auto& e : sampler) {
            total += e.p;
            REQUIRE(is_subset(e.b, x.S->content[e.s]));
            REQUIRE(std::binary_search(e.b.begin(), e.b.end(), static_cast<int>(e.v)));
        }
        REQUIRE_THAT(total, WithinAbs(1.0, 1e-12));
        REQUIRE(subset_agreement(x, f, g, sampler, 0.0) == 0.0);
    }
    std::vector<SubsetSample> skewed = singleton_sampler(x);
    skewed.front().p += 0.1;
    REQUIRE(error_kind([&] { subset_agreement(x, f, g, skewed, 0.0); }) == ErrorKind::MarginalMismatch);
}

TEST_CASE("partite decoding glues two I,J decodings", "[decoder]")
{
    Complex c = partite_complete_complex(std::vector<int>(9, 2));
    StsDistribution d = dl_distribution(c, 8, 1);
    GlobalFunction g(18);
    for (std::size_t v = 0; v < g.size(); ++v)
        g[v] = static_cast<Symbol>((v * 7 + 3) % 2);
    Ensemble f = perfect_ensemble(d.sets, g, 2);
    PartiteDecodeOutput out = partite_decode(c, 8, 1, f);
    REQUIRE(out.G == g);
    REQUIRE(out.distance == 0.0);
    REQUIRE(out.tuple.accepted);
    REQUIRE(out.tried.size() >= 1);

    REQUIRE(error_kind([&] { partite_decode(complete_complex(10, 8), 8, 1, f); }) != std::nullopt);
}
