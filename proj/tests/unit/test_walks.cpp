#include <cmath>
#include <sstream>

#include "catch_amalgamated.hpp"

#include "hdx/complex.hpp"
#include "hdx/spectra.hpp"
#include "hdx/walks.hpp"
#include "support.hpp"

using namespace hdx;
using Catch::Matchers::WithinAbs;
using hdx::testing::dense_eigenvalues;
using hdx::testing::error_kind;

namespace {

void require_stochastic(const MarkovOperator& op)
{
    REQUIRE(op.row_sum_error() < 1e-12);
    REQUIRE(op.marginal_error() < 1e-12);
}

void require_reversible(const MarkovOperator& op)
{
    SparseMat j = op.joint();
    SparseMat jt = j.transpose();
    REQUIRE((j - jt).norm() < 1e-12);
}

Complex small_weighted()
{
    return build_from_top_faces(6, {{{0, 1, 2}, 1.0},
                                    {{0, 2, 3}, 2.0},
                                    {{1, 2, 4}, 0.5},
                                    {{2, 3, 5}, 1.5},
                                    {{0, 4, 5}, 1.0},
                                    {{1, 3, 5}, 3.0}});
}

}  // namespace

TEST_CASE("up and down operators are stochastic and adjoint", "[walks]")
{
    Complex c = small_weighted();
    for (int k = 0; k <= 1; ++k) {
        MarkovOperator up = up_operator(c, k);
        MarkovOperator down = down_operator(c, k);
        require_stochastic(up);
        require_stochastic(down);
        REQUIRE(up.rows() == c.level(k).size());
        REQUIRE(up.cols() == c.level(k + 1).size());
        SparseMat diff = SparseMat(up.joint().transpose()) - down.joint();
        REQUIRE(diff.norm() < 1e-12);
    }
    REQUIRE(error_kind([&] { up_operator(c, 2); }) == ErrorKind::LevelOutOfRange);
    REQUIRE(error_kind([&] { containment_operator(c, 1, 1); }) == ErrorKind::LevelOutOfRange);
}

TEST_CASE("square walks are reversible", "[walks]")
{
    Complex c = small_weighted();
    for (bool lazy : {true, false}) {
        MarkovOperator up = upper_walk(c, 0, lazy);
        require_stochastic(up);
        require_reversible(up);
    }
    MarkovOperator low = lower_walk(c, 1, 0);
    require_stochastic(low);
    require_reversible(low);
    MarkovOperator comp = complement_walk(complete_complex(7, 3), 1, 1);
    require_stochastic(comp);
    require_reversible(comp);
    MarkovOperator fu = fixed_union_walk(complete_complex(8, 4), 1, 1);
    require_stochastic(fu);
    require_reversible(fu);
}

TEST_CASE("non-lazy upper walk on a complete graph", "[walks]")
{
    for (int n : {4, 7, 11}) {
        std::vector<double> ev = dense_eigenvalues(upper_walk(complete_complex(n, 1), 0, false));
        REQUIRE_THAT(ev[0], WithinAbs(1.0, 1e-12));
        for (std::size_t i = 1; i < ev.size(); ++i)
            REQUIRE_THAT(ev[i], WithinAbs(-1.0 / (n - 1), 1e-12));
    }
}

TEST_CASE("complement walk on a complete complex is the Kneser graph", "[walks]")
{
    // Kneser K(n, m): eigenvalues (-1)^j C(n-m-j, m-j) / C(n-m, m).
    const int n = 10;
    for (int l : {0, 1, 2}) {
        const int m = l + 1;
        std::vector<double> ev = dense_eigenvalues(complement_walk(complete_complex(n, 2 * l + 1), l, l));
        std::vector<double> expected;
        for (int j = 0; j <= m; ++j) {
            double val = (j % 2 ? -1.0 : 1.0) * binomial_d(n - m - j, m - j) / binomial_d(n - m, m);
            double mult = binomial_d(n, j) - (j > 0 ? binomial_d(n, j - 1) : 0.0);
            for (int r = 0; r < static_cast<int>(mult); ++r)
                expected.push_back(val);
        }
        std::sort(expected.rbegin(), expected.rend());
        REQUIRE(ev.size() == expected.size());
        for (std::size_t i = 0; i < ev.size(); ++i)
            REQUIRE_THAT(ev[i], WithinAbs(expected[i], 1e-10));
    }
}

TEST_CASE("lower walk spectrum is the squared containment spectrum", "[walks]")
{
    Complex c = small_weighted();
    const double sigma = bipartite_norm(containment_operator(c, 2, 0)).lambda_bip;
    const double lambda = square_spectrum(lower_walk(c, 2, 0)).lambda2;
    REQUIRE_THAT(lambda, WithinAbs(sigma * sigma, 1e-10));
}

TEST_CASE("colored walk on a partite complex", "[walks]")
{
    Complex c = partite_complete_complex({2, 3, 4});
    MarkovOperator w = colored_walk(c, {0}, {1, 2});
    REQUIRE(w.rows() == 2);
    REQUIRE(w.cols() == 12);
    require_stochastic(w);
    // A complete partite complex gives a product distribution: a rank-one walk.
    REQUIRE(bipartite_norm(w).lambda_bip < 1e-10);
    REQUIRE(colored_level(c, {1, 2}).size() == 12);
    REQUIRE(error_kind([&] { colored_walk(c, {0}, {0, 1}); }) == ErrorKind::OverlappingColors);
    REQUIRE(error_kind([&] { colored_walk(complete_complex(5, 2), {0}, {1}); }) == ErrorKind::NotPartite);
    REQUIRE(error_kind([&] { colored_walk(c, {}, {1}); }) == ErrorKind::ParameterRange);
}

TEST_CASE("neighborhood system lists link vertices", "[walks]")
{
    Complex c = build_from_top_faces(5, {{{0, 1, 2}, 1.0}, {{1, 2, 3}, 1.0}, {{2, 3, 4}, 1.0}});
    std::vector<Face> balls = neighborhood_system(c, 0);
    REQUIRE(balls.size() == 5);
    REQUIRE(balls[0] == Face{1, 2});
    REQUIRE(balls[2] == Face{0, 1, 3, 4});
    std::vector<Face> edge_balls = neighborhood_system(c, 1);
    REQUIRE(edge_balls[static_cast<std::size_t>(c.level(1).find(Face{1, 2}))] == Face{0, 3});
    REQUIRE(error_kind([&] { neighborhood_system(c, 2); }) == ErrorKind::LevelOutOfRange);
}

TEST_CASE("graph construction and CSV export", "[walks]")
{
    BipartiteGraph g = graph_from_weights(2, 3, {{0, 0, 1.0}, {0, 2, 1.0}, {1, 1, 2.0}}, false);
    REQUIRE_THAT(g.left[1], WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(g.right[2], WithinAbs(0.25, 1e-15));
    BipartiteGraph t = transpose(g);
    REQUIRE(t.n_left() == 3);
    REQUIRE(error_kind([] { graph_from_weights(2, 2, {{0, 1, 1.0}}, true); }) ==
            ErrorKind::InconsistentMarginals);
    REQUIRE(error_kind([] { graph_from_weights(2, 2, {}, false); }) == ErrorKind::EmptyWalk);

    std::ostringstream out;
    write_csv(up_operator(complete_complex(3, 1), 0), out);
    const std::string csv = out.str();
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') >= 6);
}
