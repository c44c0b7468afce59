#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hdx/complex.hpp"
#include "hdx/spectra.hpp"
#include "hdx/walks.hpp"

namespace hdx {

/** Indexed family of finite subsets of the ground set V = {0, ..., n-1}. */
struct SetLayer {
    /** Sorted vertex ids of each element. */
    std::vector<Face> content;
    /** Optional display labels; when empty the content is the label. */
    std::vector<std::string> labels;

    std::size_t size() const { return content.size(); }
    std::string label(std::size_t i) const;
};

using SetLayerPtr = std::shared_ptr<const SetLayer>;

/** Conditional table: row i lists (column, probability) pairs. */
using CondTable = std::vector<std::vector<std::pair<std::size_t, double>>>;

struct StsEntry {
    std::size_t s1 = 0;
    std::size_t t = 0;
    std::size_t s2 = 0;
    double p = 0.0;
};

/**
 * Test distribution over triples (s1, t, s2) with t inside s1 and s2. Either
 * s1 and s2 are drawn independently from P(s | t), or the joint is an
 * explicit sparse table.
 */
struct StsDistribution {
    std::size_t n_vertices = 0;
    SetLayerPtr sets;
    SetLayerPtr faces;
    bool independent = true;
    /** Independent form: P(t) and P(s | t). */
    std::vector<double> t_prob;
    CondTable t_to_s;
    /** Explicit form. */
    std::vector<StsEntry> entries;

    std::size_t support_size() const;
    void for_each(const std::function<void(std::size_t s1, std::size_t t, std::size_t s2, double p)>& fn) const;
    /** Explicit copy of the joint table. */
    std::vector<StsEntry> table() const;
};

struct TavEntry {
    std::size_t a = 0;
    std::size_t v = 0;
    double p = 0.0;
};

struct VasaEntry {
    std::size_t v = 0;
    std::size_t a1 = 0;
    std::size_t s = 0;
    std::size_t a2 = 0;
    double p = 0.0;
};

enum class StavKind { Hdx, PartiteIJ, Neighborhood, Grassmann, Custom };

const char* to_string(StavKind kind);

/**
 * Parameters of the simplicial STAV with S = X(d), T = X(l), A = X(l-1),
 * V = X(0). Used by the reduced route, which evaluates every quantity from
 * face weights without materializing the joint tables.
 */
struct HdxModel {
    std::shared_ptr<const Complex> complex;
    int d = 0;
    int l = 0;
};

/**
 * STAV structure over the ground set V = {0, ..., n_vertices-1}.
 *
 * D_stav is stored factored as P(s), P(t | s) and P(a, v | t), so the
 * conditional independence of (a, v) from s given t holds by construction.
 */
struct StavInstance {
    StavKind kind = StavKind::Custom;
    std::size_t n_vertices = 0;
    /** Ground-set mask over 0..n_vertices-1; empty means every vertex belongs to V. */
    std::vector<char> ground;
    SetLayerPtr S;
    SetLayerPtr T;
    SetLayerPtr A;
    std::vector<double> s_prob;
    CondTable s_to_t;
    std::vector<std::vector<TavEntry>> t_to_av;
    StsDistribution sts;
    std::vector<VasaEntry> vasa;
    bool has_vasa = false;
    /** Largest deviation of the input joint from its factored form (custom input only). */
    double factorization_error = 0.0;
    /** False when only the reduced route is available. */
    bool materialized = true;
    std::optional<HdxModel> model;
    nlohmann::json params = nlohmann::json::object();
};

/** Marginals and conditionals of D_stav used by the derived graphs. */
struct StavMarginals {
    std::vector<double> t_prob;
    std::vector<double> a_prob;
    std::vector<double> v_prob;
    /** P(s | t). */
    CondTable t_to_s;
    /** P(a | t) = sum over v of P(a, v | t). */
    CondTable t_to_a;
    /** Reach lists: (v, P(a, v)) per a and (a, P(a, v)) per v. */
    CondTable a_reach;
    CondTable v_reach;
};

StavMarginals compute_marginals(const StavInstance& x);

/** Default cap on the number of joint-table entries a builder materializes. */
inline constexpr std::size_t kStavTableCap = 20'000'000;

/**
 * Simplicial STAV on X(d), X(l), X(l-1), X(0) with the D_{d,l} test
 * distribution and the VASA distribution that picks disjoint a1, a2, v inside
 * s. Requires 1 <= l and 2l+2 <= d <= dim. Complete complexes whose tables
 * exceed the cap yield a reduced-route-only instance.
 */
StavInstance hdx_stav(const Complex& c, int d, int l);

/** D_{d,l}: t in X(l), then s1, s2 in X(d) containing t, independently. */
StsDistribution dl_distribution(const Complex& c, int d, int l);

/** I,J-STAV on a partite complex; |I| = |J| = l and k >= 4l+4. */
StavInstance partite_ij_stav(const Complex& c, const std::vector<int>& colors_i, const std::vector<int>& colors_j,
                             int k);

/**
 * (I,J)-in-one-set test: t in X(l) unconditioned, s1 containing t with
 * color set containing I and J, s2 containing t unconditioned. Sets are all
 * of X(k).
 */
StsDistribution partite_in_one_set(const Complex& c, const std::vector<int>& colors_i,
                                   const std::vector<int>& colors_j, int k);

enum class NeighborhoodMode { Independent, Complement };

/**
 * Neighborhood STAV with S = {Ball_z : z in X(k)}, T = X(l), A = X(l-1).
 * The STS is NID (independent) or NCD (complement walk in the link of t).
 * The VASA distribution needs 2l+k+1 <= d and is omitted otherwise.
 */
StavInstance neighborhood_stav(const Complex& c, int l, int k, NeighborhoodMode mode);

/** Result of checking the STAV invariants. */
struct StavValidation {
    double v_marginal_error = 0.0;
    double factorization_error = 0.0;
    double sts_symmetry_error = 0.0;
    double sts_marginal_error = 0.0;
    double vasa_symmetry_error = 0.0;
    double vasa_marginal_error = 0.0;
    double min_probability = 0.0;
    bool v_uniform = false;
    bool conditional_independence = false;
    bool sts_ok = false;
    bool vasa_ok = false;
    bool positive = false;
    bool pass = false;
    std::string route = "explicit";
};

nlohmann::json to_json(const StavValidation& r);

/** Check every invariant by exact summation with absolute tolerance `tol`. */
StavValidation validate(const StavInstance& x, double tol = 1e-12, bool reduced_route = false);

enum class StavGraphKind { Reach, LocalReach, StsA, StsAV, VasaV, VasA, TLower };

const char* to_string(StavGraphKind kind);

struct StavGraphQuery {
    StavGraphKind kind = StavGraphKind::Reach;
    std::size_t s = 0;
    std::size_t t = 0;
    std::size_t a = 0;
    std::size_t v = 0;
};

/** Derived graph with display labels for both sides (equal for square graphs). */
struct StavGraph {
    BipartiteGraph graph;
    std::vector<std::string> left;
    std::vector<std::string> right;
};

/**
 * Local graph of a STAV. Reach: A x V. LocalReach(s): a in s vs v in s.
 * StsA(a), StsAV(a, v): square graphs on S. VasaV(v): square graph on A.
 * VasA(a): v vs (a', s). TLower(t): v in t vs a inside t.
 */
StavGraph derive_graph(const StavInstance& x, const StavGraphQuery& q);
StavGraph derive_graph(const StavInstance& x, const StavMarginals& m, const StavGraphQuery& q);

/** STS_t graph of an STS distribution: square graph on the sets containing t. */
StavGraph sts_t_graph(const StsDistribution& d, std::size_t t);

struct GoodnessOptions {
    double gamma = 0.5;
    double r = 1.0;
    /** Edge expansion required of STS_a graphs. */
    double edge_expansion = 1.0 / 3.0;
    /** Lower bound on Pr[v in reach(a) | v in s]. */
    double reach_fraction = 0.5;
    std::size_t spot_checks = 1000;
    std::uint64_t seed = 1;
    /** Use the reduced route even when tables are materialized. */
    bool reduced_route = false;
};

struct GoodnessReport {
    std::string route = "explicit";
    double gamma = 0.0;
    double r = 0.0;
    double a1_lambda = 0.0;
    bool a1_pass = false;
    double a2a_min_phi = 1.0;
    double a2a_max_lambda2 = 0.0;
    std::string a2a_method = "exact";
    bool a2a_pass = false;
    double a2b_max_lambda = 0.0;
    bool a2b_pass = false;
    /** Max over v of the better of the two readings of vASA_v. */
    double a3a_max_lambda = 0.0;
    double a3a_max_two_sided = 0.0;
    std::size_t a3a_bipartite_graphs = 0;
    bool a3a_pass = false;
    double a3b_max_lambda = 0.0;
    bool a3b_pass = false;
    double a4_max_lambda = 0.0;
    /** Smallest delta for which the sampler lemma certifies the sampling property: 27 lambda^2 / 8. */
    double a4_sampler_parameter = 0.0;
    std::size_t a4_spot_checks = 0;
    std::size_t a4_spot_violations = 0;
    bool a4_pass = false;
    double a5_min = 1.0;
    bool a5_pass = false;
    /** Smallest gamma for which A1-A3 hold given the measured values. */
    double inferred_gamma = 0.0;
    bool pass = false;
    std::size_t a_checked = 0;
    std::size_t v_checked = 0;
    std::size_t s_checked = 0;
};

nlohmann::json to_json(const GoodnessReport& r);

GoodnessReport goodness_check(const StavInstance& x, const GoodnessOptions& opts);

/** Sampler-lemma certificate: 27 lambda^2 / 8 <= delta implies the delta-sampling property. */
double sampler_parameter(double lambda);

/**
 * Randomized check of the delta-sampling property on a bipartite graph
 * (left = A side, right = V side). Returns the number of violating subsets.
 */
std::size_t sampler_spot_check(const BipartiteGraph& g, double delta, std::size_t trials, std::uint64_t seed,
                               std::size_t* performed = nullptr);

nlohmann::json stav_to_json(const StavInstance& x);
StavInstance stav_from_json(const nlohmann::json& j);

namespace detail {
/** Reduced route for the simplicial STAV. */
GoodnessReport hdx_reduced_goodness(const HdxModel& m, const GoodnessOptions& opts);
StavValidation hdx_reduced_validate(const HdxModel& m, double tol);
/** Combine the per-assumption values into pass flags and the inferred gamma. */
void finalize_goodness(GoodnessReport& r, const GoodnessOptions& opts);
/** Edge expansion of a square graph: exact up to 24 vertices, Cheeger lower bound otherwise. */
double edge_expansion_lower(const BipartiteGraph& g, double* lambda2, bool* exact);
/** Two-sided lambda and, when the graph is 2-colorable, lambda_bip across the coloring. */
std::pair<double, std::optional<double>> vasa_v_lambdas(const BipartiteGraph& g);
}  // namespace detail

}  // namespace hdx
