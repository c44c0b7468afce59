#include <cmath>
#include <set>

#include "catch_amalgamated.hpp"

#include "hdx/grassmann.hpp"
#include "hdx/spectra.hpp"
#include "hdx/stav.hpp"
#include "support.hpp"

using namespace hdx;
using Catch::Matchers::WithinAbs;
using hdx::testing::dense_second_singular;
using hdx::testing::error_kind;

namespace {

// Product formula, independent of the library.
double gaussian_oracle(int n, int k, int q)
{
    if (k < 0 || k > n)
        return 0.0;
    double num = 1.0, den = 1.0;
    for (int i = 0; i < k; ++i) {
        num *= std::pow(q, n - i) - 1.0;
        den *= std::pow(q, i + 1) - 1.0;
    }
    return num / den;
}

}  // namespace

TEST_CASE("Galois field axioms", "[grassmann]")
{
    for (int q : {2, 3, 4, 5, 7, 8, 9}) {
        GaloisField f(q);
        REQUIRE(f.q() == q);
        for (int a = 0; a < q; ++a) {
            const auto ua = static_cast<std::uint8_t>(a);
            REQUIRE(f.add(ua, 0) == ua);
            REQUIRE(f.mul(ua, 1) == ua);
            REQUIRE(f.add(ua, f.neg(ua)) == 0);
            REQUIRE(f.sub(ua, ua) == 0);
            if (a != 0)
                REQUIRE(f.mul(ua, f.inv(ua)) == 1);
            std::uint8_t sum = 0;
            for (int i = 0; i < f.characteristic(); ++i)
                sum = f.add(sum, ua);
            REQUIRE(sum == 0);
            for (int b = 0; b < q; ++b) {
                const auto ub = static_cast<std::uint8_t>(b);
                REQUIRE(f.add(ua, ub) == f.add(ub, ua));
                REQUIRE(f.mul(ua, ub) == f.mul(ub, ua));
                for (int c = 0; c < q; ++c) {
                    const auto uc = static_cast<std::uint8_t>(c);
                    REQUIRE(f.mul(ua, f.add(ub, uc)) == f.add(f.mul(ua, ub), f.mul(ua, uc)));
                    REQUIRE(f.mul(f.mul(ua, ub), uc) == f.mul(ua, f.mul(ub, uc)));
                    REQUIRE(f.add(f.add(ua, ub), uc) == f.add(ua, f.add(ub, uc)));
                }
            }
        }
    }
    REQUIRE(error_kind([] { GaloisField f(6); }) == ErrorKind::ParameterRange);
}

TEST_CASE("Gaussian binomials and level counts", "[grassmann][oracle]")
{
    for (int q : {2, 3, 4})
        for (int n = 1; n <= 6; ++n)
            for (int k = 0; k <= n; ++k)
                REQUIRE(gaussian_binomial(n, k, q) == gaussian_oracle(n, k, q));

    for (auto [q, n] : {std::pair{2, 4}, std::pair{3, 3}, std::pair{4, 3}}) {
        GrassmannPoset lin(q, n, n - 1, Flavor::Linear);
        for (int k = -1; k <= n - 1; ++k) {
            REQUIRE(static_cast<double>(lin.level(k).size()) == gaussian_oracle(n, k + 1, q));
            REQUIRE(level_count(Flavor::Linear, q, n, k) == gaussian_oracle(n, k + 1, q));
        }
        GrassmannPoset aff(q, n, n, Flavor::Affine);
        for (int k = 0; k <= n; ++k)
            REQUIRE(static_cast<double>(aff.level(k).size()) == std::pow(q, n - k) * gaussian_oracle(n, k, q));
        REQUIRE(aff.level(-1).size() == 1);
    }
    REQUIRE(level_dimension(Flavor::Linear, 2) == 3);
    REQUIRE(level_dimension(Flavor::Affine, 2) == 2);
    REQUIRE(dimension_level(Flavor::Linear, 3) == 2);
}

TEST_CASE("subspace canonical form, join and containment", "[grassmann]")
{
    GaloisField f(3);
    Subspace a = linear_span(f, 3, {{1, 2, 0}, {0, 1, 1}});
    Subspace b = linear_span(f, 3, {{0, 1, 1}, {1, 0, 1}, {1, 2, 0}});
    REQUIRE(a == b);
    REQUIRE(a.dim() == 2);
    REQUIRE(a.key() == b.key());

    Subspace line = linear_span(f, 3, {{1, 2, 0}});
    REQUIRE(contains(f, a, line));
    REQUIRE(contains_vector(f, a, {2, 1, 0}));
    REQUIRE_FALSE(contains_vector(f, a, {0, 0, 1}));
    Subspace other = linear_span(f, 3, {{0, 0, 1}});
    REQUIRE(join(f, line, other).dim() == 2);

    Subspace flat = affine_flat(f, 3, {1, 1, 1}, {{1, 0, 0}});
    REQUIRE(flat.dim() == 1);
    REQUIRE(contains_vector(f, flat, {0, 1, 1}));
    REQUIRE_FALSE(contains_vector(f, flat, {0, 0, 0}));
    Subspace p = affine_flat(f, 3, {2, 2, 2}, {});
    REQUIRE(join(f, flat, p).dim() == 2);
    REQUIRE(error_kind([&] { join(f, flat, line); }) == ErrorKind::InvalidInput);
}

TEST_CASE("points of subspaces", "[grassmann]")
{
    GrassmannPoset aff(2, 4, 3, Flavor::Affine);
    for (int k = 0; k <= 3; ++k)
        for (const auto& s : aff.level(k))
            REQUIRE(points_of(aff, s).size() == static_cast<std::size_t>(1) << k);
    GrassmannPoset lin(3, 3, 2, Flavor::Linear);
    for (const auto& s : lin.level(1))
        REQUIRE(points_of(lin, s).size() == 4);
}

TEST_CASE("containment walk matches a dense SVD", "[grassmann]")
{
    GrassmannPoset p(2, 4, 2, Flavor::Linear);
    MarkovOperator w = grassmann_containment_walk(p, 1, 0);
    REQUIRE(w.row_sum_error() < 1e-12);
    REQUIRE(w.marginal_error() < 1e-12);
    REQUIRE_THAT(bipartite_norm(w).lambda_bip, WithinAbs(dense_second_singular(w), 1e-10));
    REQUIRE(error_kind([&] { grassmann_containment_walk(p, 0, 1); }) != std::nullopt);
}

TEST_CASE("conditioned complement walk", "[grassmann]")
{
    GrassmannPoset p(2, 5, 3, Flavor::Linear);
    MarkovOperator plain = conditioned_complement_walk(p, 0, 0, p.trivial());
    REQUIRE(plain.rows() == p.level(0).size());
    REQUIRE(plain.row_sum_error() < 1e-12);
    MarkovOperator cond = conditioned_complement_walk(p, 0, 0, p.level(0).front());
    REQUIRE(cond.row_sum_error() < 1e-12);
    REQUIRE(square_spectrum(cond).lambda_bip <= 4.0 / 8.0 + 1e-9);
    REQUIRE(error_kind([&] { conditioned_complement_walk(p, 2, 2, p.trivial()); }) ==
            ErrorKind::DimensionArithmetic);
}

TEST_CASE("Grassmann test distribution", "[grassmann]")
{
    GrassmannPoset p(2, 4, 3, Flavor::Affine);
    StsDistribution d = grassmann_distribution(p, 2, 1);
    double total = 0.0;
    d.for_each([&](std::size_t s1, std::size_t t, std::size_t s2, double pr) {
        total += pr;
        REQUIRE(is_subset(d.faces->content[t], d.sets->content[s1]));
        REQUIRE(is_subset(d.faces->content[t], d.sets->content[s2]));
    });
    REQUIRE_THAT(total, WithinAbs(1.0, 1e-12));
    REQUIRE(error_kind([&] { grassmann_distribution(p, 1, 1); }) == ErrorKind::LevelOutOfRange);
}

TEST_CASE("Grassmann STAV satisfies the invariants", "[grassmann]")
{
    GrassmannPoset p(2, 6, 6, Flavor::Affine);
    StavInstance x = grassmann_stav(p, 6, 1);
    REQUIRE(x.kind == StavKind::Grassmann);
    StavValidation v = validate(x);
    REQUIRE(v.pass);
    REQUIRE(error_kind([&] { grassmann_stav(p, 4, 1); }) == ErrorKind::ParameterRange);
}
