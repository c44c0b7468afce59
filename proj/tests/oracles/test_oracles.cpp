// Frozen reference values. Closed forms are computed here independently of the
// library; the goodness values of the complete complexes were frozen from
// explicit-route runs and are matched by the reduced route.

#include <cmath>

#include "catch_amalgamated.hpp"

#include "hdx/agreement.hpp"
#include "hdx/complex.hpp"
#include "hdx/spectra.hpp"
#include "hdx/stav.hpp"
#include "hdx/walks.hpp"
#include "support.hpp"

using namespace hdx;
using Catch::Matchers::WithinAbs;

namespace {

// Largest nontrivial |eigenvalue| of the Kneser walk on m-subsets of [n].
double kneser_lambda(int n, int m)
{
    double best = 0.0;
    for (int j = 1; j <= m; ++j)
        best = std::max(best, binomial_d(n - m - j, m - j) / binomial_d(n - m, m));
    return best;
}

}  // namespace

TEST_CASE("complement walk closed form", "[oracle]")
{
    for (auto [n, d, l] : {std::tuple{30, 5, 1}, std::tuple{14, 5, 2}, std::tuple{20, 3, 0}}) {
        BoundCheck b = verify_complement_bound(complete_complex(n, d), l, l);
        REQUIRE_THAT(b.lhs, WithinAbs(kneser_lambda(n, l + 1), 1e-9));
        // Two-sided link expansion of a complete complex is 1/(n-d).
        REQUIRE_THAT(b.rhs, WithinAbs((l + 1) * (l + 1) / static_cast<double>(n - d) + kBoundSlack, 1e-9));
    }
}

TEST_CASE("goodness of hdx_stav(complete(9,5), l=1)", "[oracle]")
{
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    GoodnessOptions opts;
    opts.gamma = 1.0;
    for (bool reduced : {false, true}) {
        opts.reduced_route = reduced;
        GoodnessReport g = goodness_check(x, opts);
        REQUIRE_THAT(g.a1_lambda, WithinAbs(1.0 / 8.0, 1e-9));
        REQUIRE_THAT(g.a2a_max_lambda2, WithinAbs(3.0 / 35.0, 1e-9));
        REQUIRE_THAT(g.a2a_min_phi, WithinAbs(16.0 / 35.0, 1e-9));
        REQUIRE(g.a2b_max_lambda < 1e-10);
        REQUIRE_THAT(g.a3a_max_lambda, WithinAbs(1.0 / 7.0, 1e-9));
        REQUIRE_THAT(g.a3b_max_lambda, WithinAbs(1.0 / std::sqrt(7.0), 1e-9));
        REQUIRE_THAT(g.a4_max_lambda, WithinAbs(0.2, 1e-9));
        REQUIRE_THAT(g.a5_min, WithinAbs(5.0 / 6.0, 1e-12));
        REQUIRE_THAT(g.inferred_gamma, WithinAbs(1.0 / 7.0, 1e-9));
        REQUIRE(g.pass);
    }
}

TEST_CASE("goodness of hdx_stav(complete(30,8), l=3)", "[oracle]")
{
    StavInstance x = hdx_stav(complete_complex(30, 8), 8, 3);
    GoodnessOptions opts;
    opts.gamma = 1.0 / 3.0;
    GoodnessReport g = goodness_check(x, opts);
    REQUIRE(g.route == "reduced");
    REQUIRE_THAT(g.a1_lambda, WithinAbs(0.0618984460590, 1e-9));
    REQUIRE_THAT(g.a2a_max_lambda2, WithinAbs(7.0 / 52.0, 1e-9));
    REQUIRE_THAT(g.a3a_max_lambda, WithinAbs(3.0 / 26.0, 1e-9));
    REQUIRE_THAT(g.a3b_max_lambda, WithinAbs(std::sqrt(4.0 / 13.0), 1e-9));
    REQUIRE_THAT(g.a4_max_lambda, WithinAbs(0.25, 1e-9));
    REQUIRE_THAT(g.a5_min, WithinAbs(6.0 / 9.0, 1e-12));
    REQUIRE_THAT(g.inferred_gamma, WithinAbs(4.0 / 13.0, 1e-9));
    REQUIRE(g.pass);
}

TEST_CASE("containment walk of a complete complex", "[oracle]")
{
    // X(k) to X(0) on complete(n, d): second singular value sqrt((n-k-1) / ((k+1)(n-1))).
    for (auto [n, k] : {std::pair{8, 2}, std::pair{10, 3}}) {
        Complex c = complete_complex(n, k);
        const double expected = std::sqrt(static_cast<double>(n - k - 1) / ((k + 1) * (n - 1.0)));
        REQUIRE_THAT(bipartite_norm(containment_operator(c, k, 0)).lambda_bip, WithinAbs(expected, 1e-10));
    }
}

TEST_CASE("seeded Monte Carlo is reproducible", "[oracle]")
{
    StavInstance x = hdx_stav(complete_complex(8, 4), 4, 1);
    Ensemble f = random_ensemble(x.S, 3, 21);
    RejectionOptions mc;
    mc.mode = RejectionMode::MonteCarlo;
    mc.samples = 5000;
    mc.seed = 99;
    TestResult a = rejection(x, f, mc), b = rejection(x, f, mc);
    REQUIRE(a.epsilon == b.epsilon);
    mc.seed = 100;
    REQUIRE(rejection(x, f, mc).samples == 5000);
}
