#include <set>

#include "catch_amalgamated.hpp"

#include "hdx/combinatorics.hpp"
#include "support.hpp"

using namespace hdx;
using hdx::testing::error_kind;

TEST_CASE("binomial matches Pascal's rule", "[combinatorics]")
{
    for (int n = 1; n <= 40; ++n)
        for (int k = 1; k < n; ++k)
            REQUIRE(binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k));
    REQUIRE(binomial(30, 9) == 14307150u);
    REQUIRE(binomial(5, 7) == 0u);
    REQUIRE(binomial_d(30, 9) == 14307150.0);
}

TEST_CASE("binomial overflow is reported", "[combinatorics]")
{
    REQUIRE(error_kind([] { binomial(200, 100); }) == ErrorKind::TooLarge);
}

TEST_CASE("combinations are enumerated lexicographically", "[combinatorics]")
{
    std::vector<Face> seen;
    for_each_combination(6, 3, [&](const int* c) { seen.push_back({c[0], c[1], c[2]}); });
    REQUIRE(seen.size() == 20);
    REQUIRE(std::is_sorted(seen.begin(), seen.end()));
    REQUIRE(seen.front() == Face{0, 1, 2});
    REQUIRE(seen.back() == Face{3, 4, 5});

    std::vector<int> items{2, 5, 9, 11};
    std::set<Face> subsets;
    for_each_subset(items, 2, [&](const Face& f) { subsets.insert(f); });
    REQUIRE(subsets.size() == 6);
    REQUIRE(subsets.count({5, 11}) == 1);
}

TEST_CASE("face set operations", "[combinatorics]")
{
    Face a{1, 3, 5, 7}, b{3, 4, 7};
    REQUIRE(face_union(a, b) == Face{1, 3, 4, 5, 7});
    REQUIRE(face_intersection(a, b) == Face{3, 7});
    REQUIRE(face_difference(a, b) == Face{1, 5});
    REQUIRE(face_insert(b, 5) == Face{3, 4, 5, 7});
    REQUIRE(is_subset(Face{3, 7}, a));
    REQUIRE_FALSE(is_subset(b, a));
    REQUIRE(is_disjoint(Face{0, 2}, a));
    REQUIRE(is_sorted_face(a));
    REQUIRE_FALSE(is_sorted_face(Face{2, 2}));
}

TEST_CASE("face table indexes faces densely", "[combinatorics]")
{
    FaceTable t(2);
    std::vector<Face> faces;
    for_each_combination(12, 2, [&](const int* c) { faces.push_back({c[0], c[1]}); });
    for (std::size_t i = 0; i < faces.size(); ++i)
        REQUIRE(t.insert(faces[i]) == i);
    REQUIRE(t.insert(faces[7]) == 7);
    REQUIRE(t.size() == faces.size());
    for (std::size_t i = 0; i < faces.size(); ++i) {
        REQUIRE(t.find(faces[i]) == static_cast<long long>(i));
        auto f = t.face(i);
        REQUIRE(Face(f.begin(), f.end()) == faces[i]);
    }
    REQUIRE(t.find(Face{20, 21}) == -1);
    REQUIRE(hash_face(Face{1, 2}) == hash_face(Face{1, 2}));
}
