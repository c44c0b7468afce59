#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "hdx/agreement.hpp"

namespace hdx {

struct DecoderConfig {
    /** Globally bad: Pr[bad triple | a1 = a] >= tau_global. */
    double tau_global = 1.0 / 40.0;
    /** Locally bad for v: Pr[bad triple | v, a1 = a] > tau_local. */
    double tau_local = 1.0 / 20.0;

    /** Throws ParameterRange unless 0 < tau_global <= tau_local < 1. */
    void validate() const;
};

/** h_a per a: plurality restriction of f_s to a (lexicographically smallest on ties). */
using LocalPopularity = std::vector<std::vector<Symbol>>;

/** g_a per a: sorted (v, symbol) pairs over the reach of a; symbol -1 when no set qualifies. */
using ReachFunctions = std::vector<std::vector<std::pair<std::size_t, Symbol>>>;

LocalPopularity local_popularity(const StavInstance& x, const Ensemble& f);
ReachFunctions reach_functions(const StavInstance& x, const Ensemble& f, const LocalPopularity& h);

struct BadSets {
    /** Membership in A*. */
    std::vector<char> a_star;
    /** Pr[(a, s, a2) is bad | a1 = a] under the VASA distribution. */
    std::vector<double> bad_probability;
    /** A*_v: globally bad or locally bad elements of the reach of v, sorted. */
    std::vector<std::vector<std::size_t>> a_star_v;
};

BadSets bad_sets(const StavInstance& x, const Ensemble& f, const LocalPopularity& h, const DecoderConfig& cfg);

/** Exact probabilities of the events bounded along the decoding argument. */
struct DecodeDiagnostics {
    double epsilon = 0.0;
    /** Pr_{(s, a)}[f_s|a != h_a]. */
    double h_disagreement = 0.0;
    /** Pr_a[a in A*]. */
    double a_star_probability = 0.0;
    /** Pr_{(a, v, s)}[f_s(v) != g_a(v), f_s|a = h_a, a not in A*_v]. */
    double g_disagreement = 0.0;
    /** Pr_{(a, v)}[a in A*_v, a not in A*]. */
    double local_not_global = 0.0;
    /** Pr_{(a, v)}[g_a(v) != G(v), a not in A*_v]. */
    double global_link_disagreement = 0.0;
    /** Pr_s[f_s != G|s]. */
    double distance = 0.0;
    std::size_t fallback_vertices = 0;
};

nlohmann::json to_json(const DecodeDiagnostics& d);

struct DecodeOutput {
    GlobalFunction G;
    BadSets bad;
    LocalPopularity h;
    ReachFunctions g;
    DecodeDiagnostics diagnostics;
    /** True when some vertex had an empty filtered vote and used the unfiltered plurality. */
    bool fallback = false;
};

nlohmann::json to_json(const DecodeOutput& out, bool include_functions = false);

DecodeOutput global_decode(const StavInstance& x, const Ensemble& f, const DecoderConfig& cfg = {});

/** One entry of a (v, b, a, s) distribution with v in b inside s and the reach of a. */
struct SubsetSample {
    std::size_t v = 0;
    Face b;
    std::size_t a = 0;
    std::size_t s = 0;
    double p = 0.0;
};

/** b = {v} for every (v, a, s) of D_stav. */
std::vector<SubsetSample> singleton_sampler(const StavInstance& x);
/** b = the part of s outside a that a reaches. */
std::vector<SubsetSample> complement_sampler(const StavInstance& x);

/**
 * Pr[dist(f_s|b, G|b) > r_gamma] over the sampler, after checking that its
 * (v, a, s) marginal equals the D_stav marginal (MarginalMismatch otherwise).
 */
double subset_agreement(const StavInstance& x, const Ensemble& f, const GlobalFunction& G,
                        const std::vector<SubsetSample>& sampler, double r_gamma);

struct PartiteDecodeOptions {
    DecoderConfig decoder;
    /** Accept a tuple when each I,J rejection is at most this multiple of the D_{k,l} rejection. */
    double rejection_factor = 4.0;
    /** Absolute ceiling on the I,J and in-one-set rejections. */
    double max_rejection = 0.25;
    /** Accept when each I,J surprise is at most surprise_constant / l. */
    double surprise_constant = 1.0;
    /** Accept when each in-one-set rejection is at most this multiple of the D_{k,l} rejection. */
    double one_set_factor = 4.0;
    std::size_t max_tuples = 32;
    std::uint64_t seed = 1;
};

struct ColorTupleReport {
    std::vector<int> I1, J1, I2, J2;
    double epsilon_ij[2] = {0.0, 0.0};
    double surprise_ij[2] = {0.0, 0.0};
    double epsilon_one_set[2] = {0.0, 0.0};
    bool accepted = false;
};

nlohmann::json to_json(const ColorTupleReport& r);

struct PartiteDecodeOutput {
    GlobalFunction G;
    ColorTupleReport tuple;
    std::vector<ColorTupleReport> tried;
    double epsilon = 0.0;
    /** Pr_s[f_s != G|s] over the D_{k,l} set measure. */
    double distance = 0.0;
    DecodeOutput first;
    DecodeOutput second;
};

/**
 * Decode an ensemble on X(k) of a partite complex: search color 4-tuples
 * I1, J1, I2, J2, decode the two I,J-STAVs and glue. Throws NoGoodColors
 * (with the best candidate in the message) when no tuple is accepted.
 */
PartiteDecodeOutput partite_decode(const Complex& c, int k, int l, const Ensemble& f,
                                   const PartiteDecodeOptions& opts = {});

}  // namespace hdx
