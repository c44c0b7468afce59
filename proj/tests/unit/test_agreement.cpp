#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"

#include "hdx/agreement.hpp"
#include "hdx/complex.hpp"
#include "support.hpp"

using namespace hdx;
using Catch::Matchers::WithinAbs;
using hdx::testing::error_kind;

namespace {

bool agree(const Ensemble& f, std::size_t s1, std::size_t s2, const Face& part)
{
    return f.restrict_to(s1, part) == f.restrict_to(s2, part);
}

// Rejection straight from the explicit table.
double rejection_oracle(const StsDistribution& d, const Ensemble& f, bool full)
{
    double eps = 0.0;
    for (const auto& e : d.table()) {
        Face part = full ? face_intersection(d.sets->content[e.s1], d.sets->content[e.s2]) : d.faces->content[e.t];
        if (!agree(f, e.s1, e.s2, part))
            eps += e.p;
    }
    return eps;
}

// Surprise straight from the explicit STS table and the (a, v | t) lists.
double surprise_oracle(const StavInstance& x, const Ensemble& f)
{
    double differ = 0.0, joint = 0.0;
    for (const auto& e : x.sts.table()) {
        if (agree(f, e.s1, e.s2, x.T->content[e.t]))
            continue;
        differ += e.p;
        for (const auto& av : x.t_to_av[e.t]) {
            const int v = static_cast<int>(av.v);
            if (agree(f, e.s1, e.s2, x.A->content[av.a]) && f.value(e.s1, v) != f.value(e.s2, v))
                joint += e.p * av.p;
        }
    }
    return differ > 0.0 ? joint / differ : 0.0;
}

}  // namespace

TEST_CASE("perfect ensembles are never rejected", "[agreement]")
{
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    GlobalFunction g = random_global(x, 3, 4);
    Ensemble f = perfect_ensemble(x, g, 3);
    REQUIRE(rejection(x, f).epsilon == 0.0);
    RejectionOptions full;
    full.full_intersection = true;
    REQUIRE(rejection(x, f, full).epsilon == 0.0);
    REQUIRE(set_distance(f, 5, g) == 0.0);
    REQUIRE(dist_gamma(x, f, g, 0.0) == 0.0);
    SurpriseResult s = surprise(x, f);
    REQUIRE(s.empty_conditioning);
    REQUIRE(s.xi == 0.0);

    GlobalFunction partial = g;
    partial[2] = -1;
    REQUIRE(error_kind([&] { perfect_ensemble(x, partial, 3); }) == ErrorKind::PartialGlobal);
}

TEST_CASE("exact rejection matches the explicit table", "[agreement][oracle]")
{
    StavInstance x = hdx_stav(complete_complex(8, 4), 4, 1);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Ensemble f = corrupt(perfect_ensemble(x, random_global(x, 2, seed), 2), 0.3, CorruptionMode::FlipOne, seed);
        TestResult r = rejection(x, f);
        REQUIRE_THAT(r.epsilon, WithinAbs(rejection_oracle(x.sts, f, false), 1e-12));
        RejectionOptions full;
        full.full_intersection = true;
        TestResult rf = rejection(x, f, full);
        REQUIRE_THAT(rf.epsilon, WithinAbs(rejection_oracle(x.sts, f, true), 1e-12));
        REQUIRE(r.epsilon <= rf.epsilon + 1e-12);

        RejectionOptions per;
        per.per_t = true;
        TestResult rp = rejection(x.sts, f, per);
        REQUIRE(rp.per_t.size() == x.T->size());
        double sum = 0.0;
        for (std::size_t t = 0; t < rp.per_t.size(); ++t)
            sum += x.sts.t_prob[t] * rp.per_t[t];
        REQUIRE_THAT(sum, WithinAbs(r.epsilon, 1e-12));
    }
}

TEST_CASE("Monte Carlo rejection agrees with the exact value", "[agreement][oracle]")
{
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    Ensemble f = corrupt(perfect_ensemble(x, random_global(x, 2, 8), 2), 0.4, CorruptionMode::ResampleSet, 8);
    const double exact = rejection(x, f).epsilon;
    RejectionOptions mc;
    mc.mode = RejectionMode::MonteCarlo;
    mc.samples = 200000;
    mc.seed = 17;
    TestResult r = rejection(x, f, mc);
    REQUIRE(r.method == "monte_carlo");
    REQUIRE(r.samples == 200000);
    REQUIRE(r.std_error > 0.0);
    REQUIRE(std::abs(r.epsilon - exact) <= 5.0 * r.std_error);
    REQUIRE(rejection(x, f, mc).epsilon == r.epsilon);
}

TEST_CASE("surprise matches the explicit table", "[agreement][oracle]")
{
    StavInstance x = hdx_stav(complete_complex(8, 4), 4, 1);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        Ensemble f = random_ensemble(x.S, 2, seed);
        SurpriseResult s = surprise(x, f);
        REQUIRE(s.xi >= 0.0);
        REQUIRE(s.xi <= 1.0);
        REQUIRE_THAT(s.xi, WithinAbs(surprise_oracle(x, f), 1e-12));
    }
}

TEST_CASE("corruption modes", "[agreement]")
{
    StavInstance x = hdx_stav(complete_complex(8, 4), 4, 1);
    Ensemble f = perfect_ensemble(x, random_global(x, 4, 2), 4);
    REQUIRE(corrupt(f, 0.0, CorruptionMode::FlipOne, 1).values == f.values);
    Ensemble all = corrupt(f, 1.0, CorruptionMode::FlipOne, 1);
    for (std::size_t s = 0; s < f.size(); ++s) {
        std::size_t diff = 0;
        for (std::size_t i = 0; i < f.values[s].size(); ++i)
            diff += all.values[s][i] != f.values[s][i];
        REQUIRE(diff == 1);
    }
    REQUIRE(error_kind([&] { corrupt(f, 1.5, CorruptionMode::FlipOne, 1); }) == ErrorKind::ParameterRange);
    REQUIRE(corrupt(f, 0.3, CorruptionMode::ResampleSet, 9).values ==
            corrupt(f, 0.3, CorruptionMode::ResampleSet, 9).values);
}

TEST_CASE("distances and brute force", "[agreement]")
{
    StavInstance x = hdx_stav(complete_complex(8, 4), 4, 1);
    GlobalFunction g = random_global(x, 2, 3);
    Ensemble f = perfect_ensemble(x, g, 2);
    f.values[0][0] ^= 1;
    REQUIRE_THAT(set_distance(f, 0, g), WithinAbs(1.0 / 5.0, 1e-15));
    REQUIRE_THAT(dist_gamma(x, f, g, 0.0), WithinAbs(x.s_prob[0], 1e-15));
    REQUIRE(dist_gamma(x, f, g, 0.25) == 0.0);

    BruteForceResult b = dist_to_perfect_bruteforce(x, f, 0.0);
    REQUIRE(b.candidates == 256);
    REQUIRE_THAT(b.distance, WithinAbs(x.s_prob[0], 1e-15));
    REQUIRE(b.best == g);
}

TEST_CASE("delta-ensemble check", "[agreement]")
{
    StavInstance x = hdx_stav(complete_complex(8, 4), 4, 1);
    GlobalFunction g = random_global(x, 2, 3);
    Ensemble f = perfect_ensemble(x, g, 2);
    REQUIRE(delta_ensemble_check(x.sts, f, 0.9).pass);
    f.values[0][0] ^= 1;
    DeltaEnsembleResult r = delta_ensemble_check(x.sts, f, 0.5);
    REQUIRE_FALSE(r.pass);
    REQUIRE(r.witness.has_value());
    REQUIRE_THAT(r.min_distance, WithinAbs(0.5, 1e-15));
    REQUIRE(delta_ensemble_check(x.sts, f, 0.49).pass);
}

TEST_CASE("ensemble JSON and restriction", "[agreement]")
{
    Complex c = complete_complex(7, 4);
    StsDistribution d = dl_distribution(c, 2, 0);
    std::mt19937_64 rng(1);
    GlobalFunction g(7);
    for (auto& v : g)
        v = static_cast<Symbol>(rng() % 3);
    Ensemble f = corrupt(perfect_ensemble(d.sets, g, 3), 0.5, CorruptionMode::FlipOne, 2);
    Ensemble back = ensemble_from_json(ensemble_to_json(f), d.sets);
    REQUIRE(back.values == f.values);

    nlohmann::json j = ensemble_to_json(f);
    std::swap(j["sets"][0], j["sets"][1]);
    REQUIRE(error_kind([&] { ensemble_from_json(j, d.sets); }) == ErrorKind::SupportMismatch);

    StsDistribution up = up2k_distribution(c, 2, 0);
    Ensemble r = restrict_ensemble(f, up.sets);
    for (std::size_t s = 0; s < r.size(); ++s)
        REQUIRE(r.restrict_to(s, up.sets->content[s]) == r.values[s]);
    StsDistribution other = dl_distribution(c, 3, 0);
    REQUIRE(error_kind([&] { restrict_ensemble(f, other.sets); }) == ErrorKind::SupportMismatch);
}

TEST_CASE("UP_2k distributions", "[agreement]")
{
    Complex c = complete_complex(8, 5);
    for (int tl : {-1, 0, 1}) {
        StsDistribution d = up2k_distribution(c, 2, tl);
        double total = 0.0;
        d.for_each([&](std::size_t s1, std::size_t t, std::size_t s2, double p) {
            total += p;
            const Face& tc = d.faces->content[t];
            REQUIRE(is_subset(tc, d.sets->content[s1]));
            REQUIRE(is_subset(tc, d.sets->content[s2]));
            const Face both = face_union(d.sets->content[s1], d.sets->content[s2]);
            REQUIRE(both.size() <= 5);
            if (tl == -1)
                REQUIRE(tc == face_intersection(d.sets->content[s1], d.sets->content[s2]));
        });
        REQUIRE_THAT(total, WithinAbs(1.0, 1e-12));
    }
    // Two independent uniform (k+1)-subsets of a (2k+1)-set meet in (k+1)^2 / (2k+1) vertices on average.
    StsDistribution un = up2k_distribution(c, 2, -1);
    double meet = 0.0;
    un.for_each([&](std::size_t, std::size_t t, std::size_t, double p) {
        meet += p * static_cast<double>(un.faces->content[t].size());
    });
    REQUIRE_THAT(meet, WithinAbs(9.0 / 5.0, 1e-12));
    REQUIRE(error_kind([&] { up2k_distribution(c, 3, 0); }) != std::nullopt);
    REQUIRE(error_kind([&] { up2k_distribution(c, 2, 3); }) != std::nullopt);
}

TEST_CASE("neighborhood test rejections", "[agreement]")
{
    Complex c = complete_complex(9, 5);
    std::mt19937_64 rng(4);
    GlobalFunction g(9);
    for (auto& v : g)
        v = static_cast<Symbol>(rng() % 2);
    for (auto mode : {NeighborhoodMode::Independent, NeighborhoodMode::Complement}) {
        StavInstance x = neighborhood_stav(c, 1, 0, mode);
        Ensemble f = perfect_ensemble(x, g, 2);
        NeighborhoodTestResult r = weak_neighborhood_tests(c, 1, 0, f, mode);
        REQUIRE(r.weak.epsilon == 0.0);
        REQUIRE(r.full.epsilon == 0.0);
        Ensemble bad = corrupt(f, 0.5, CorruptionMode::ResampleSet, 3);
        NeighborhoodTestResult rb = weak_neighborhood_tests(x, bad);
        REQUIRE(rb.weak.epsilon <= rb.full.epsilon + 1e-12);
        REQUIRE(rb.full.full_intersection);
    }
}
