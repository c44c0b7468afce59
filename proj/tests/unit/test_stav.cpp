#include <cmath>
#include <cstdlib>

#include "catch_amalgamated.hpp"

#include "hdx/complex.hpp"
#include "hdx/error.hpp"
#include "hdx/stav.hpp"
#include "support.hpp"

using namespace hdx;
using Catch::Matchers::WithinAbs;
using hdx::testing::error_kind;

namespace {

double total(const StsDistribution& d)
{
    // Neumaier summation keeps the oracle exact to a few ulps on large supports.
    double sum = 0.0, comp = 0.0;
    d.for_each([&](std::size_t, std::size_t, std::size_t, double p) {
        const double t = sum + p;
        comp += std::abs(sum) >= std::abs(p) ? (sum - t) + p : (p - t) + sum;
        sum = t;
    });
    return sum + comp;
}

}  // namespace

TEST_CASE("simplicial STAV on a complete complex", "[stav]")
{
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    REQUIRE(x.kind == StavKind::Hdx);
    REQUIRE(x.S->size() == binomial(9, 6));
    REQUIRE(x.T->size() == binomial(9, 2));
    REQUIRE(x.A->size() == 9);
    REQUIRE(x.model.has_value());
    StavValidation v = validate(x);
    REQUIRE(v.pass);
    REQUIRE(v.v_marginal_error < 1e-12);
    REQUIRE(v.sts_symmetry_error < 1e-12);
    REQUIRE(v.vasa_symmetry_error < 1e-12);
    REQUIRE_THAT(total(x.sts), WithinAbs(1.0, 1e-12));
    for (const auto& e : x.vasa) {
        const Face& s = x.S->content[e.s];
        REQUIRE(is_subset(x.A->content[e.a1], s));
        REQUIRE(is_subset(x.A->content[e.a2], s));
        REQUIRE(is_disjoint(x.A->content[e.a1], x.A->content[e.a2]));
    }
}

TEST_CASE("STAV preconditions", "[stav]")
{
    Complex c = complete_complex(9, 5);
    REQUIRE(error_kind([&] { hdx_stav(c, 5, 0); }) != std::nullopt);
    REQUIRE(error_kind([&] { hdx_stav(c, 5, 2); }) != std::nullopt);
    REQUIRE(error_kind([&] { hdx_stav(c, 6, 1); }) != std::nullopt);
}

TEST_CASE("reduced and explicit routes agree", "[stav][oracle]")
{
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    GoodnessOptions opts;
    opts.gamma = 1.0;
    GoodnessReport e = goodness_check(x, opts);
    opts.reduced_route = true;
    GoodnessReport r = goodness_check(x, opts);
    REQUIRE(e.route == "explicit");
    REQUIRE(r.route == "reduced");
    REQUIRE_THAT(r.a1_lambda, WithinAbs(e.a1_lambda, 1e-9));
    REQUIRE_THAT(r.a2a_max_lambda2, WithinAbs(e.a2a_max_lambda2, 1e-9));
    REQUIRE_THAT(r.a2a_min_phi, WithinAbs(e.a2a_min_phi, 1e-9));
    REQUIRE_THAT(r.a2b_max_lambda, WithinAbs(e.a2b_max_lambda, 1e-9));
    REQUIRE_THAT(r.a3a_max_lambda, WithinAbs(e.a3a_max_lambda, 1e-9));
    REQUIRE_THAT(r.a3b_max_lambda, WithinAbs(e.a3b_max_lambda, 1e-9));
    REQUIRE_THAT(r.a4_max_lambda, WithinAbs(e.a4_max_lambda, 1e-9));
    REQUIRE_THAT(r.a5_min, WithinAbs(e.a5_min, 1e-9));
    REQUIRE_THAT(r.inferred_gamma, WithinAbs(e.inferred_gamma, 1e-9));
    REQUIRE(r.pass == e.pass);

    StavValidation ve = validate(x), vr = validate(x, 1e-12, true);
    REQUIRE(vr.route == "reduced");
    REQUIRE(vr.pass);
    REQUIRE_THAT(vr.min_probability, WithinAbs(ve.min_probability, 1e-12));
}

TEST_CASE("closed-form goodness values", "[stav][oracle]")
{
    // A5 closed form: (d - l + 1) / (d + 1).
    for (auto [n, d, l] : {std::tuple{9, 5, 1}, std::tuple{10, 6, 2}}) {
        StavInstance x = hdx_stav(complete_complex(n, d), d, l);
        GoodnessOptions opts;
        opts.gamma = 1.0;
        GoodnessReport g = goodness_check(x, opts);
        REQUIRE_THAT(g.a5_min, WithinAbs(static_cast<double>(d - l + 1) / (d + 1), 1e-12));
        // STS_{a,v} graphs of a complete complex are cliques with loops.
        REQUIRE(g.a2b_max_lambda < 1e-10);

        StavGraph tl = derive_graph(x, StavGraphQuery{StavGraphKind::TLower, 0, 0, 0, 0});
        REQUIRE_THAT(bipartite_norm(tl.graph).lambda_bip, WithinAbs(1.0 / l, 1e-10));
    }
}

TEST_CASE("derived graphs", "[stav]")
{
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    StavMarginals m = compute_marginals(x);
    for (double p : m.v_prob)
        REQUIRE_THAT(p, WithinAbs(1.0 / 9.0, 1e-14));
    StavGraph reach = derive_graph(x, m, {StavGraphKind::Reach, 0, 0, 0, 0});
    REQUIRE(reach.graph.n_left() == 9);
    REQUIRE(reach.graph.n_right() == 9);
    StavGraph sa = derive_graph(x, m, {StavGraphKind::StsA, 0, 0, 3, 0});
    REQUIRE(sa.graph.square);
    REQUIRE(sa.graph.n_left() == binomial(8, 5));
    StavGraph vv = derive_graph(x, m, {StavGraphKind::VasaV, 0, 0, 0, 2});
    REQUIRE(vv.graph.square);
    StavGraph st = sts_t_graph(x.sts, 0);
    REQUIRE(st.graph.n_left() == binomial(7, 4));
    REQUIRE(error_kind([&] { derive_graph(x, m, {StavGraphKind::StsAV, 0, 0, 3, 3}); }) ==
            ErrorKind::ZeroConditioning);
}

TEST_CASE("sampler certificate and spot checks", "[stav]")
{
    REQUIRE_THAT(sampler_parameter(0.2), WithinAbs(27.0 * 0.04 / 8.0, 1e-15));
    std::vector<Triplet> w;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 7; ++j)
            w.emplace_back(i, j, 1.0);
    std::size_t performed = 0;
    REQUIRE(sampler_spot_check(graph_from_weights(6, 7, w, false), 0.1, 200, 3, &performed) == 0);
    REQUIRE(performed > 0);
}

TEST_CASE("D_{d,l} distribution", "[stav]")
{
    Complex c = complete_complex(7, 3);
    StsDistribution d = dl_distribution(c, 3, 1);
    REQUIRE(d.independent);
    REQUIRE_THAT(total(d), WithinAbs(1.0, 1e-12));
    REQUIRE(d.support_size() == binomial(7, 2) * binomial(5, 2) * binomial(5, 2));
    StsDistribution empty_t = dl_distribution(c, 2, -1);
    REQUIRE_THAT(total(empty_t), WithinAbs(1.0, 1e-12));
    REQUIRE(error_kind([&] { dl_distribution(c, 4, 1); }) != std::nullopt);
}

TEST_CASE("partite I,J STAV", "[stav]")
{
    Complex c = partite_complete_complex(std::vector<int>(9, 2));
    StavInstance x = partite_ij_stav(c, {0}, {1}, 8);
    REQUIRE(x.kind == StavKind::PartiteIJ);
    REQUIRE(x.ground.size() == 18);
    for (int v = 0; v < 18; ++v)
        REQUIRE(static_cast<bool>(x.ground[static_cast<std::size_t>(v)]) == (c.color(v) >= 2));
    StavValidation v = validate(x);
    REQUIRE(v.pass);

    StsDistribution one = partite_in_one_set(c, {0}, {1}, 8);
    REQUIRE_THAT(total(one), WithinAbs(1.0, 1e-12));

    REQUIRE(error_kind([&] { partite_ij_stav(complete_complex(10, 8), {0}, {1}, 8); }) == ErrorKind::NotPartite);
    REQUIRE(error_kind([&] { partite_ij_stav(c, {0}, {1, 2}, 8); }) == ErrorKind::ColorSize);
    REQUIRE(error_kind([&] { partite_ij_stav(c, {0}, {0}, 8); }) == ErrorKind::OverlappingColors);
    REQUIRE(error_kind([&] { partite_ij_stav(c, {0}, {1}, 7); }) == ErrorKind::ParameterRange);
    REQUIRE(error_kind([&] { partite_ij_stav(c, {0}, {9}, 8); }) == ErrorKind::ParameterRange);
}

TEST_CASE("neighborhood STAVs", "[stav]")
{
    Complex c = complete_complex(9, 5);
    for (auto mode : {NeighborhoodMode::Independent, NeighborhoodMode::Complement}) {
        StavInstance x = neighborhood_stav(c, 1, 0, mode);
        REQUIRE(x.kind == StavKind::Neighborhood);
        REQUIRE(x.S->size() == 9);
        REQUIRE(x.S->content[0].size() == 8);
        REQUIRE(x.has_vasa);
        REQUIRE(validate(x).pass);
    }
    REQUIRE(error_kind([&] { neighborhood_stav(c, 1, 2, NeighborhoodMode::Complement); }) == ErrorKind::ParameterRange);
}

TEST_CASE("STAV JSON round trip", "[stav]")
{
    StavInstance x = hdx_stav(complete_complex(8, 4), 4, 1);
    StavInstance back = stav_from_json(stav_to_json(x));
    REQUIRE(back.kind == StavKind::Custom);
    REQUIRE(back.S->content == x.S->content);
    REQUIRE(back.factorization_error < 1e-12);
    StavValidation v = validate(back);
    REQUIRE(v.pass);

    StavInstance ij = partite_ij_stav(partite_complete_complex(std::vector<int>(9, 2)), {0}, {1}, 8);
    StavInstance ij_back = stav_from_json(stav_to_json(ij));
    REQUIRE(ij_back.ground == ij.ground);
    REQUIRE(validate(ij_back).pass);
}

TEST_CASE("non-factorizable custom STAV is flagged", "[stav]")
{
    // Given t, the vertex depends on which set was drawn.
    nlohmann::json j = {{"n_vertices", 2},
                        {"S", {{0, 1}, {0, 1}}},
                        {"T", {{0, 1}}},
                        {"A", {{0}, {1}}},
                        {"d_stav", {{0, 0, 0, 1, 0.5}, {1, 0, 1, 0, 0.5}}},
                        {"sts", {{0, 0, 1, 0.5}, {1, 0, 0, 0.5}}},
                        {"vasa", nlohmann::json::array()}};
    StavInstance x = stav_from_json(j);
    REQUIRE(x.factorization_error > 0.1);
    StavValidation v = validate(x);
    REQUIRE_FALSE(v.conditional_independence);
    REQUIRE_FALSE(v.pass);
    REQUIRE(error_kind([] { stav_from_json(nlohmann::json{{"S", 1}}); }) == ErrorKind::InvalidInput);
}

TEST_CASE("size caps scale with HDX_SIZE_CAP", "[stav]")
{
    ::setenv("HDX_SIZE_CAP", "3", 1);
    REQUIRE(size_cap(10) == 30);
    ::setenv("HDX_SIZE_CAP", "0.5", 1);
    REQUIRE(size_cap(10) == 10);
    ::unsetenv("HDX_SIZE_CAP");
    REQUIRE(size_cap(10) == 10);
    REQUIRE(error_kind([] { check_size_cap(11.0, 10, "widgets"); }) == ErrorKind::SizeCap);
}

TEST_CASE("model-only instance above the table cap", "[stav]")
{
    StavInstance x = hdx_stav(complete_complex(20, 8), 8, 3);
    REQUIRE_FALSE(x.materialized);
    REQUIRE(x.model.has_value());
    REQUIRE(validate(x).route == "reduced");
    REQUIRE(error_kind([&] { compute_marginals(x); }) == ErrorKind::SizeCap);
}
