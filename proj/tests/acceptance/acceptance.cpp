// Acceptance suite: one pass/fail line per criterion. Tolerances and fixture
// constants are pinned below; fixtures were frozen from pilot runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hdx/agreement.hpp"
#include "hdx/combinatorics.hpp"
#include "hdx/complex.hpp"
#include "hdx/decoder.hpp"
#include "hdx/error.hpp"
#include "hdx/grassmann.hpp"
#include "hdx/spectra.hpp"
#include "hdx/stav.hpp"
#include "hdx/walks.hpp"

using namespace hdx;

namespace {

// Tolerances.
constexpr double kEigTol = 1e-9;
constexpr double kBoundTol = 1e-9;
constexpr double kExactTol = 1e-12;
constexpr double kStavTol = 1e-12;
constexpr double kStsAvLambdaMax = 1e-10;

// Runtime budgets in seconds.
constexpr double kBudget1 = 10.0;
constexpr double kBudget2 = 60.0;
constexpr double kBudget9 = 300.0;
constexpr double kBudget11 = 30.0;

// Fixture constants (frozen from pilot runs).
constexpr double kMixingFactor = 5.0;
constexpr double kGoodnessC = 1.0;
constexpr double kSurpriseRandomFixture = 1.0;
constexpr double kSurpriseDeltaFixture = 1.0;
constexpr double kDecoderC = 2.0;
constexpr double kSandwich = 6.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// Random weighted 3-partite complex with the given part sizes; every triple
// gets a weight in [1 - spread, 1 + spread] and is dropped with probability `drop`.
Complex random_partite(std::mt19937_64& rng, std::vector<int> parts, double spread, double drop)
{
    std::uniform_real_distribution<double> weight(1.0 - spread, 1.0 + spread);
    std::bernoulli_distribution dropped(drop);
    std::vector<int> offset{0};
    std::vector<int> coloring;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        offset.push_back(offset.back() + parts[i]);
        coloring.insert(coloring.end(), static_cast<std::size_t>(parts[i]), static_cast<int>(i));
    }
    for (int attempt = 0;; ++attempt) {
        std::vector<TopFace> tops;
        for (int a = 0; a < parts[0]; ++a)
            for (int b = 0; b < parts[1]; ++b)
                for (int c = 0; c < parts[2]; ++c) {
                    if (attempt < 50 && dropped(rng))
                        continue;
                    tops.push_back({{offset[0] + a, offset[1] + b, offset[2] + c}, weight(rng)});
                }
        double total = 0.0;
        for (const auto& t : tops)
            total += t.second;
        for (auto& t : tops)
            t.second /= total;
        try {
            return build_from_top_faces(offset.back(), std::move(tops), coloring);
        } catch (const Error&) {
        }
    }
}

std::vector<int> random_parts(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> size(4, 6);
    return {size(rng), size(rng), size(rng)};
}

// Union of `degree` random permutation matchings; square graphs are symmetrized.
BipartiteGraph random_expander(std::mt19937_64& rng, std::size_t n, int degree, bool square)
{
    std::vector<Triplet> w;
    std::vector<std::size_t> perm(n);
    for (int r = 0; r < degree; ++r) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            auto a = static_cast<int>(i), b = static_cast<int>(perm[i]);
            w.emplace_back(a, b, 1.0);
            if (square)
                w.emplace_back(b, a, 1.0);
        }
    }
    return graph_from_weights(n, n, w, square);
}

// Dense random bipartite graph: each edge kept with probability p, random weight in [0.5, 1.5].
BipartiteGraph random_dense_bipartite(std::mt19937_64& rng, std::size_t n, double p)
{
    std::bernoulli_distribution keep(p);
    std::uniform_real_distribution<double> weight(0.5, 1.5);
    for (;;) {
        std::vector<Triplet> w;
        std::vector<char> lhit(n, 0), rhit(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (keep(rng)) {
                    w.emplace_back(static_cast<int>(i), static_cast<int>(j), weight(rng));
                    lhit[i] = rhit[j] = 1;
                }
        if (std::count(lhit.begin(), lhit.end(), 0) == 0 && std::count(rhit.begin(), rhit.end(), 0) == 0)
            return graph_from_weights(n, n, w, false);
    }
}

// 1. Complement walk on complete_complex(30, 5).
Outcome criterion_complement()
{
    const auto t0 = Clock::now();
    Complex c = complete_complex(30, 5);
    BoundCheck b = verify_complement_bound(c, 1, 1);
    SpectralReport dense = square_spectrum(complement_walk(c, 1, 1), linalg::Method::Dense);
    const double expected = 2.0 / 28.0;
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = b.pass && b.applicable && std::abs(b.lhs - expected) <= kEigTol &&
             std::abs(dense.lambda_bip - expected) <= kEigTol && secs < kBudget1;
    o.detail = "lambda=" + fmt(b.lhs) + " dense=" + fmt(dense.lambda_bip) + " rhs=" + fmt(b.rhs) +
               " time=" + fmt(secs) + "s";
    return o;
}

// 2. Colored walk bound on random weighted 3-partite complexes.
Outcome criterion_colored()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2002);
    const std::vector<std::pair<std::vector<int>, std::vector<int>>> choices = {
        {{0}, {1}}, {{0}, {2}}, {{1}, {2}}, {{0}, {1, 2}}, {{2}, {0, 1}}};
    std::size_t applicable = 0, violations = 0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        // Full support with growing weight spread, so the link hypothesis holds on part of the sample.
        Complex c = random_partite(rng, random_parts(rng), 0.5 * i / 99.0, 0.0);
        const auto& [ci, cj] = choices[static_cast<std::size_t>(i) % choices.size()];
        BoundCheck b = verify_colored_bound(c, ci, cj);
        if (!b.applicable)
            continue;
        ++applicable;
        if (!b.pass)
            ++violations;
        if (b.rhs > 1e-6)
            worst = std::max(worst, b.lhs / b.rhs);
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = violations == 0 && applicable > 0 && secs < kBudget2;
    o.detail = "applicable=" + std::to_string(applicable) + "/100 violations=" + std::to_string(violations) +
               " max_ratio=" + fmt(worst) + " time=" + fmt(secs) + "s";
    return o;
}

// 3. Trickling inequality on random 3-partite complexes.
Outcome criterion_trickling()
{
    std::mt19937_64 rng(3003);
    std::size_t violations = 0;
    double slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        Complex y = random_partite(rng, random_parts(rng), 0.5, 0.15);
        BoundCheck b = verify_trickling(y);
        if (!(b.lhs <= b.rhs + kBoundTol))
            ++violations;
        slack = std::min(slack, b.rhs - b.lhs);
    }
    Outcome o;
    o.pass = violations == 0;
    o.detail = "violations=" + std::to_string(violations) + "/100 min_slack=" + fmt(slack);
    return o;
}

// 4. Fixed-union bound on complete_complex(15, 6), l = 2.
Outcome criterion_fixed_union()
{
    Complex c = complete_complex(15, 6);
    Outcome o;
    o.pass = true;
    for (int j = 1; j <= 3; ++j) {
        BoundCheck b = verify_fixed_union_bound(c, 2, j);
        o.pass = o.pass && b.lhs <= b.rhs + kBoundTol;
        o.detail += "j=" + std::to_string(j) + ":" + fmt(b.lhs) + "<=" + fmt(b.rhs) + " ";
    }
    return o;
}

// 5. Mixing lemma on complete_complex(n, 3) with three disjoint vertex sets of density 0.3.
Outcome criterion_mixing()
{
    std::mt19937_64 rng(5005);
    std::vector<double> deviations;
    MixingReport last;
    for (int n : {10, 15, 20}) {
        Complex c = complete_complex(n, 3);
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto size = static_cast<std::size_t>(std::lround(0.3 * n));
        std::vector<MixingSet> sets(3);
        for (std::size_t i = 0; i < 3; ++i) {
            sets[i].dim = 0;
            for (std::size_t j = 0; j < size; ++j)
                sets[i].faces.push_back({perm[i * size + j]});
        }
        last = mixing_check(c, sets);
        deviations.push_back(last.deviation);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < deviations.size(); ++i)
        monotone = monotone && deviations[i] <= deviations[i - 1] + kExactTol;
    const double rhs = kMixingFactor * last.bound_rhs;
    Outcome o;
    o.pass = monotone && last.deviation <= rhs;
    o.detail = "deviation n=10,15,20: " + fmt(deviations[0]) + "," + fmt(deviations[1]) + "," + fmt(deviations[2]) +
               " bound(n=20)=" + fmt(rhs) + " constant=" + fmt(last.constant);
    return o;
}

// 6. Sampler, almost-cut (square and bipartite) and partition property on random expanders.
Outcome criterion_sampler_cut()
{
    std::mt19937_64 rng(6006);
    std::uniform_int_distribution<std::size_t> size(12, 24);
    std::uniform_int_distribution<int> degree(3, 6);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t v_sampler = 0, v_cut = 0, v_cut_bip = 0, v_part = 0;
    std::size_t app_cut_bip = 0, app_part = 0;
    auto random_labels = [&](std::size_t n, int k) {
        std::uniform_int_distribution<int> lab(0, k - 1);
        std::vector<int> l(n);
        for (auto& x : l)
            x = lab(rng);
        return l;
    };
    auto order_ab = [](std::vector<int>& labels, double pa, double pb) {
        if (pa > pb)
            for (auto& x : labels)
                x = x == 0 ? 1 : x == 1 ? 0 : x;
    };
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = size(rng);
        BipartiteGraph bip = random_expander(rng, n, degree(rng), false);
        BipartiteGraph sq = random_expander(rng, n, degree(rng), true);

        std::vector<std::size_t> s;
        const double density = unit(rng);
        for (std::size_t w = 0; w < n; ++w)
            if (unit(rng) < density)
                s.push_back(w);
        if (!sampler_check(bip, s, 0.05 + 0.45 * unit(rng)).pass)
            ++v_sampler;

        std::vector<int> labels = random_labels(n, 3);
        double pa = 0.0, pb = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (labels[v] == 0)
                pa += sq.left[v];
            else if (labels[v] == 1)
                pb += sq.left[v];
        }
        order_ab(labels, pa, pb);
        if (!almost_cut_check(sq, labels).pass)
            ++v_cut;

        BipartiteGraph dense = random_dense_bipartite(rng, n, 0.5 + 0.4 * unit(rng));
        std::vector<int> blabels = random_labels(2 * n, 3);
        pa = pb = 0.0;
        for (std::size_t v = 0; v < 2 * n; ++v) {
            const double p = v < n ? dense.left[v] : dense.right[v - n];
            if (blabels[v] == 0)
                pa += p;
            else if (blabels[v] == 1)
                pb += p;
        }
        order_ab(blabels, pa, pb);
        BoundCheck cb = almost_cut_check(dense, blabels);
        if (cb.applicable) {
            ++app_cut_bip;
            if (!cb.pass)
                ++v_cut_bip;
        }

        // Skewed partition: one large part and a few small ones.
        std::vector<int> parts(n, 0);
        for (auto& p : parts)
            if (unit(rng) < 0.3)
                p = 1 + static_cast<int>(unit(rng) * 3.0);
        const double phi = edge_expansion_exact(sq).phi;
        BoundCheck pp = partition_property_check(sq, parts, phi);
        if (pp.applicable) {
            ++app_part;
            if (!pp.pass)
                ++v_part;
        }
    }
    Outcome o;
    o.pass = v_sampler == 0 && v_cut == 0 && v_cut_bip == 0 && v_part == 0;
    o.detail = "violations sampler=" + std::to_string(v_sampler) + " almost_cut=" + std::to_string(v_cut) +
               " almost_cut_bipartite=" + std::to_string(v_cut_bip) + "/" + std::to_string(app_cut_bip) +
               " partition=" + std::to_string(v_part) + "/" + std::to_string(app_part);
    return o;
}

// 7. STAV invariants and goodness on complete_complex(30, 8), l = 3.
Outcome criterion_stav()
{
    const int l = 3;
    StavInstance x = hdx_stav(complete_complex(30, 8), 8, l);
    StavValidation v = validate(x, kStavTol);
    GoodnessOptions opts;
    opts.gamma = kGoodnessC / l;
    GoodnessReport g = goodness_check(x, opts);
    Outcome o;
    o.pass = v.pass && v.v_uniform && v.conditional_independence && v.sts_ok && v.vasa_ok && g.pass &&
             g.a2b_max_lambda <= kStsAvLambdaMax;
    o.detail = "validate=" + std::string(v.pass ? "ok" : "fail") + "(" + v.route + ") goodness(gamma=" +
               fmt(opts.gamma) + ")=" + (g.pass ? "ok" : "fail") + " inferred_gamma=" + fmt(g.inferred_gamma) +
               " sts_av_lambda=" + fmt(g.a2b_max_lambda);
    return o;
}

// 8. Surprise of random ensembles and of constructed delta-ensembles.
Outcome criterion_surprise()
{
    const int l = 1;
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, l);
    double max_random = 0.0;
    for (std::uint64_t seed = 1; seed <= 500; ++seed)
        max_random = std::max(max_random, surprise(x, random_ensemble(x.S, 2, seed)).xi);

    double eta = 0.0;
    for (std::size_t t = 0; t < x.T->size(); ++t) {
        StavGraph tg = derive_graph(x, StavGraphQuery{StavGraphKind::TLower, 0, t, 0, 0});
        eta = std::max(eta, bipartite_norm(tg.graph).lambda_bip);
    }

    // Each set follows one of two global functions that differ on a random vertex set D.
    std::mt19937_64 rng(8008);
    double worst = 0.0;
    std::size_t built = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int dsize = 3 + trial % 7;
        std::vector<int> perm(9);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        GlobalFunction g0(9), g1(9);
        std::bernoulli_distribution coin(0.5);
        for (int v = 0; v < 9; ++v)
            g0[static_cast<std::size_t>(v)] = coin(rng);
        g1 = g0;
        for (int i = 0; i < dsize; ++i)
            g1[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] ^= 1;
        Ensemble f0 = perfect_ensemble(x, g0, 2), f1 = perfect_ensemble(x, g1, 2);
        Ensemble f = f0;
        for (std::size_t s = 0; s < f.size(); ++s)
            if (coin(rng))
                f.values[s] = f1.values[s];
        DeltaEnsembleResult de = delta_ensemble_check(x.sts, f, 0.0);
        const double delta = de.min_distance * (1.0 - 1e-9);
        if (!de.pass || !delta_ensemble_check(x.sts, f, delta).pass || !(delta > 0.0))
            continue;
        ++built;
        const double xi = surprise(x, f).xi;
        worst = std::max(worst, xi * delta / (eta * eta));
    }
    const double random_bound = kSurpriseRandomFixture / (l + 1);
    Outcome o;
    o.pass = max_random <= random_bound && built > 0 && worst <= kSurpriseDeltaFixture;
    o.detail = "max_random=" + fmt(max_random) + "<=" + fmt(random_bound) + " eta=" + fmt(eta) +
               " delta_ensembles=" + std::to_string(built) + " max xi*delta/eta^2=" + fmt(worst) +
               "<=" + fmt(kSurpriseDeltaFixture);
    return o;
}

// 9. Decoder soundness sweep on complete_complex(9, 5), l = 1, binary alphabet.
Outcome criterion_decoder()
{
    const auto t0 = Clock::now();
    StavInstance x = hdx_stav(complete_complex(9, 5), 5, 1);
    std::size_t runs = 0, exact_fail = 0, ratio_fail = 0, optimal_fail = 0;
    double max_ratio = 0.0, max_gap = 0.0;
    for (double alpha : {0.0, 0.05, 0.1, 0.2}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            ++runs;
            GlobalFunction g = random_global(x, 2, seed);
            CorruptionMode mode = seed % 2 ? CorruptionMode::ResampleSet : CorruptionMode::FlipOne;
            Ensemble f = corrupt(perfect_ensemble(x, g, 2), alpha, mode, seed * 7919);
            DecodeOutput out = global_decode(x, f);
            const double eps = out.diagnostics.epsilon;
            const double dist = out.diagnostics.distance;
            if (alpha == 0.0 && (out.G != g || eps != 0.0))
                ++exact_fail;
            if (eps > 0.0)
                max_ratio = std::max(max_ratio, dist / eps);
            if (dist > kDecoderC * eps + kExactTol)
                ++ratio_fail;
            BruteForceResult brute = dist_to_perfect_bruteforce(x, f, 0.0);
            max_gap = std::max(max_gap, dist - brute.distance);
            if (dist > brute.distance + kExactTol)
                ++optimal_fail;
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = exact_fail == 0 && ratio_fail == 0 && optimal_fail == 0 && secs < kBudget9;
    o.detail = "runs=" + std::to_string(runs) + " exact_fail=" + std::to_string(exact_fail) +
               " max dist/eps=" + fmt(max_ratio) + "<=" + fmt(kDecoderC) + " max gap to optimum=" + fmt(max_gap) +
               " time=" + fmt(secs) + "s";
    return o;
}

// 10. Independent versus expanding STS_t rejection on X(2) of complete_complex(9, 5).
Outcome criterion_sandwich()
{
    Complex c = complete_complex(9, 5);
    StsDistribution d1 = dl_distribution(c, 2, 0);
    StsDistribution d2 = up2k_distribution(c, 2, 0);
    std::mt19937_64 rng(1010);
    std::bernoulli_distribution coin(0.5);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::size_t violations = 0;
    for (int i = 0; i < 20; ++i) {
        GlobalFunction g(9);
        for (auto& v : g)
            v = coin(rng);
        const double alpha = 0.05 + 0.015 * i;
        CorruptionMode mode = i % 2 ? CorruptionMode::ResampleSet : CorruptionMode::FlipOne;
        Ensemble f1 = corrupt(perfect_ensemble(d1.sets, g, 2), alpha, mode, 100 + static_cast<std::uint64_t>(i));
        Ensemble f2 = restrict_ensemble(f1, d2.sets);
        const double e1 = rejection(d1, f1).epsilon;
        const double e2 = rejection(d2, f2).epsilon;
        if (e1 > 0.0) {
            lo = std::min(lo, e2 / e1);
            hi = std::max(hi, e2 / e1);
        }
        if (!(e1 / kSandwich <= e2 + kExactTol && e2 <= kSandwich * e1 + kExactTol))
            ++violations;
    }
    Outcome o;
    o.pass = violations == 0;
    o.detail = "ratio eps2/eps1 in [" + fmt(lo) + ", " + fmt(hi) + "] violations=" + std::to_string(violations);
    return o;
}

// Product formula for the Gaussian binomial, independent of the library.
double gaussian_oracle(int n, int k, int q)
{
    double num = 1.0, den = 1.0;
    for (int i = 0; i < k; ++i) {
        num *= std::pow(q, n - i) - 1.0;
        den *= std::pow(q, i + 1) - 1.0;
    }
    return num / den;
}

// 11. Linear Grassmann poset over F_2^5.
Outcome criterion_grassmann()
{
    const auto t0 = Clock::now();
    GrassmannPoset p(2, 5, 3, Flavor::Linear);
    bool counts = true;
    for (int k = 0; k <= 3; ++k)
        counts = counts && static_cast<double>(p.level(k).size()) == gaussian_oracle(5, k + 1, 2);
    const double contain = bipartite_norm(grassmann_containment_walk(p, 1, 0)).lambda_bip;
    const Subspace u0 = p.level(0).front();
    const double comp = square_spectrum(conditioned_complement_walk(p, 0, 0, u0)).lambda_bip;
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = counts && contain <= 1.0 / std::sqrt(2.0) + kEigTol && comp <= 0.5 + kEigTol && secs < kBudget11;
    o.detail = std::string("counts=") + (counts ? "ok" : "mismatch") + " containment=" + fmt(contain) +
               " conditioned_complement=" + fmt(comp) + " time=" + fmt(secs) + "s";
    return o;
}

// 12. NID and NCD rejections: zero on perfect ensembles, weak <= full on corrupted ones.
Outcome criterion_neighborhood()
{
    Complex c = complete_complex(9, 5);
    StavInstance nid = neighborhood_stav(c, 1, 0, NeighborhoodMode::Independent);
    StavInstance ncd = neighborhood_stav(c, 1, 0, NeighborhoodMode::Complement);
    std::mt19937_64 rng(1212);
    std::bernoulli_distribution coin(0.5);
    GlobalFunction g(9);
    for (auto& v : g)
        v = coin(rng);
    double perfect = 0.0;
    for (const StavInstance* x : {&nid, &ncd}) {
        NeighborhoodTestResult r = weak_neighborhood_tests(*x, perfect_ensemble(*x, g, 2));
        perfect = std::max({perfect, r.weak.epsilon, r.full.epsilon});
    }
    std::size_t violations = 0;
    for (int i = 0; i < 50; ++i) {
        const StavInstance& x = i % 2 ? ncd : nid;
        CorruptionMode mode = (i / 2) % 2 ? CorruptionMode::ResampleSet : CorruptionMode::FlipOne;
        Ensemble f = corrupt(perfect_ensemble(x, g, 2), 0.1 + 0.01 * i, mode, 5000 + static_cast<std::uint64_t>(i));
        NeighborhoodTestResult r = weak_neighborhood_tests(x, f);
        if (r.weak.epsilon > r.full.epsilon + kExactTol)
            ++violations;
    }
    Outcome o;
    o.pass = perfect == 0.0 && violations == 0;
    o.detail = "perfect_rejection=" + fmt(perfect) + " monotonicity_violations=" + std::to_string(violations) + "/50";
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> criteria = {
        {1, "complement-walk bound", criterion_complement},
        {2, "colored-walk bound", criterion_colored},
        {3, "trickling inequality", criterion_trickling},
        {4, "fixed-union bound", criterion_fixed_union},
        {5, "mixing lemma", criterion_mixing},
        {6, "sampler and almost-cut lemmas", criterion_sampler_cut},
        {7, "STAV invariants and goodness", criterion_stav},
        {8, "surprise", criterion_surprise},
        {9, "decoder soundness sweep", criterion_decoder},
        {10, "rejection sandwich", criterion_sandwich},
        {11, "Grassmann poset", criterion_grassmann},
        {12, "neighborhood tests", criterion_neighborhood},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id))
            continue;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass)
            ++failed;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << ": " << o.detail << " ("
                  << fmt(seconds_since(t0)) << "s)" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
