#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hdx/stav.hpp"

namespace hdx {

using Symbol = int;

/** Global assignment V -> Sigma; -1 marks vertices outside the ground set. */
using GlobalFunction = std::vector<Symbol>;

/**
 * Ensemble of local functions: for every set s of a layer, values[s][i] is
 * the symbol of the i-th vertex of s (in sorted vertex order).
 */
struct Ensemble {
    int alphabet = 2;
    SetLayerPtr sets;
    std::vector<std::vector<Symbol>> values;

    std::size_t size() const { return values.size(); }
    /** Value of f_s at vertex v; v must belong to s. */
    Symbol value(std::size_t s, int v) const;
    /** Values of f_s on the sorted vertex list `part`, which must lie inside s. */
    std::vector<Symbol> restrict_to(std::size_t s, std::span<const int> part) const;
};

Ensemble perfect_ensemble(const SetLayerPtr& sets, const GlobalFunction& g, int alphabet);
Ensemble perfect_ensemble(const StavInstance& x, const GlobalFunction& g, int alphabet);

/** Uniformly random global function on the ground set of x. */
GlobalFunction random_global(const StavInstance& x, int alphabet, std::uint64_t seed);

enum class CorruptionMode { FlipOne, ResampleSet };

/** Corrupt each set independently with probability alpha. */
Ensemble corrupt(const Ensemble& f, double alpha, CorruptionMode mode, std::uint64_t seed);

/** Ensemble with every f_s drawn uniformly at random. */
Ensemble random_ensemble(const SetLayerPtr& sets, int alphabet, std::uint64_t seed);

/** Re-index an ensemble onto another layer by matching set contents. */
Ensemble restrict_ensemble(const Ensemble& f, const SetLayerPtr& sets);

nlohmann::json ensemble_to_json(const Ensemble& f);
/** Sets are matched by position against `sets`; mismatched contents raise SupportMismatch. */
Ensemble ensemble_from_json(const nlohmann::json& j, const SetLayerPtr& sets);

enum class RejectionMode { Exact, MonteCarlo };

struct RejectionOptions {
    RejectionMode mode = RejectionMode::Exact;
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    /** Compare on the whole intersection of the two sets instead of t. */
    bool full_intersection = false;
    /** Record the conditional rejection per t (exact mode). */
    bool per_t = false;
};

struct TestResult {
    double epsilon = 0.0;
    std::string method = "exact";
    std::size_t samples = 0;
    double std_error = 0.0;
    bool full_intersection = false;
    /** Pr[reject | t] per t when requested. */
    std::vector<double> per_t;
};

nlohmann::json to_json(const TestResult& r);

/** Support size above which exact pairwise enumeration is refused. */
inline constexpr std::size_t kExactSupportCap = 10'000'000;

TestResult rejection(const StsDistribution& d, const Ensemble& f, const RejectionOptions& opts = {});
TestResult rejection(const StavInstance& x, const Ensemble& f, const RejectionOptions& opts = {});

/** Normalized Hamming distance between f_s and g restricted to s. */
double set_distance(const Ensemble& f, std::size_t s, const GlobalFunction& g);

/** S-measure of the sets whose distance to g exceeds gamma. */
double dist_gamma(const std::vector<double>& s_measure, const Ensemble& f, const GlobalFunction& g, double gamma);
double dist_gamma(const StavInstance& x, const Ensemble& f, const GlobalFunction& g, double gamma);

struct BruteForceResult {
    double distance = 0.0;
    GlobalFunction best;
    std::size_t candidates = 0;
};

/** Exact minimum of dist_gamma over every global function on the covered vertices. */
BruteForceResult dist_to_perfect_bruteforce(const StavInstance& x, const Ensemble& f, double gamma);

struct DeltaEnsembleResult {
    bool pass = true;
    std::optional<StsEntry> witness;
    std::size_t checked = 0;
    /** Smallest relative distance over disagreeing triples (1 when none). */
    double min_distance = 1.0;
};

DeltaEnsembleResult delta_ensemble_check(const StsDistribution& d, const Ensemble& f, double delta);

struct SurpriseResult {
    double xi = 0.0;
    /** Pr[f_{s1}|t != f_{s2}|t]. */
    double differ_probability = 0.0;
    /** True when the conditioning event has probability zero (xi reported as 0). */
    bool empty_conditioning = false;
};

nlohmann::json to_json(const SurpriseResult& r);

SurpriseResult surprise(const StavInstance& x, const Ensemble& f);

struct NeighborhoodTestResult {
    TestResult weak;
    TestResult full;
};

/** Weak (compare on t) and full-intersection rejections of the NID or NCD test. */
NeighborhoodTestResult weak_neighborhood_tests(const StavInstance& x, const Ensemble& f);
NeighborhoodTestResult weak_neighborhood_tests(const Complex& c, int l, int k, const Ensemble& f,
                                               NeighborhoodMode mode);

/**
 * UP_{2k} test on X(k): r in X(2k), t in X(t_level) inside r, then s1, s2 in
 * X(k) with t inside s1, s2 inside r, independently. t_level = -1 gives the
 * unconditioned variant with s1, s2 inside r and t = s1 n s2.
 */
StsDistribution up2k_distribution(const Complex& c, int k, int t_level);

}  // namespace hdx
