#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hdx/linalg.hpp"
#include "hdx/walks.hpp"

namespace hdx {

/**
 * Spectrum summary of a walk on the complement of the constants.
 *
 * For square operators lambda2/lambda_min are the extreme eigenvalues of the
 * measure-symmetrized operator and lambda_bip = max(|lambda2|, |lambda_min|).
 * For bipartite operators lambda_bip is the second singular value and
 * lambda2 = lambda_bip, lambda_min = -lambda_bip (the double cover spectrum).
 */
struct SpectralReport {
    double lambda2 = 0.0;
    double lambda_min = 0.0;
    double lambda_bip = 0.0;
    std::string method = "dense";
    double residual = 0.0;
    std::size_t dimension = 0;
};

nlohmann::json to_json(const SpectralReport& r);

SpectralReport square_spectrum(const MarkovOperator& op, linalg::Method method = linalg::Method::Auto);
SpectralReport square_spectrum(const BipartiteGraph& g, linalg::Method method = linalg::Method::Auto);
SpectralReport bipartite_norm(const MarkovOperator& op, linalg::Method method = linalg::Method::Auto);
SpectralReport bipartite_norm(const BipartiteGraph& g, linalg::Method method = linalg::Method::Auto);

/** Measure-symmetrized matrix D_s^{1/2} P D_t^{-1/2}. */
SparseMat symmetrized(const MarkovOperator& op);

/** Underlying graph of the link of `s`; `vertices` receives the original ids of the graph's vertices. */
BipartiteGraph link_graph(const Complex& c, std::span<const int> s, std::vector<int>* vertices = nullptr);

struct LinkExpansion {
    double value = 0.0;
    bool two_sided = true;
    int worst_level = -1;
    Face worst_face;
    std::size_t links_checked = 0;
    std::size_t disconnected = 0;
    /** Maximum per level k = -1, ..., d-2. */
    std::vector<double> per_level;
};

nlohmann::json to_json(const LinkExpansion& r);

/**
 * Maximum over faces s in X(k), -1 <= k <= d-2, of the expansion of the
 * underlying graph of the link of s: lambda2 (one-sided) or
 * max(|lambda2|, |lambda_min|) (two-sided). Disconnected links count as 1.
 */
LinkExpansion link_expansion(const Complex& c, bool two_sided);

/** Outcome of checking one inequality lhs <= rhs on an instance. */
struct BoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = true;
    /** False when the hypothesis of the inequality does not hold on the instance. */
    bool applicable = true;
    nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const BoundCheck& r);

/** Slack added to every right-hand side. */
inline constexpr double kBoundSlack = 1e-9;

/** lambda(comp_{l1,l2}) <= (l1+1)(l2+1) lambda_link, with two-sided link expansion. */
BoundCheck verify_complement_bound(const Complex& c, int l1, int l2, std::optional<double> lambda_link = {});

/**
 * lambda(comp_{I,J}) <= |I||J| lambda where the measured one-sided link
 * expansion lambda' equals lambda / ((d+1) lambda + 1). Not applicable unless
 * lambda' < 1/(d+1) and the resulting lambda < 1/2.
 */
BoundCheck verify_colored_bound(const Complex& c, const std::vector<int>& colors_i, const std::vector<int>& colors_j,
                                std::optional<double> lambda_one_sided = {});

/** lambda(A^{2,3}) <= eta + lambda(A^{1,2}) lambda(A^{1,3}) on a 2-dimensional 3-partite complex. */
BoundCheck verify_trickling(const Complex& y);

/** ||A - L|| <= j^2 lambda_link for the l,j fixed union walk A and the l,l-j lower walk L. */
BoundCheck verify_fixed_union_bound(const Complex& c, int l, int j, std::optional<double> lambda_link = {});

/**
 * Heuristic containment check: lambda(D_{k+1,k}) against
 * sqrt((k+1)/(k+2)) + 10 k lambda with one-sided link expansion lambda.
 * Only gross violations fail.
 */
BoundCheck verify_containment(const Complex& c, int k, std::optional<double> lambda_one_sided = {});

struct MixingSet {
    int dim = 0;
    std::vector<Face> faces;
};

struct ColoredSet {
    std::vector<int> colors;
    std::vector<Face> faces;
};

struct MixingReport {
    double measured = 0.0;
    /** Product of the set probabilities. */
    double predicted = 0.0;
    double multinomial = 1.0;
    double deviation = 0.0;
    double lambda = 0.0;
    /** lambda * (product of probabilities)^(1/m). */
    double bound_rhs = 0.0;
    /** Empirical constant deviation / bound_rhs (0 when bound_rhs = 0). */
    double constant = 0.0;
};

nlohmann::json to_json(const MixingReport& r);

/**
 * Exact evaluation of Pr[F(A_1..A_m)] over X(k), k = sum(j_i + 1) - 1,
 * against multinomial * prod Pr[A_i]. The vertex sets spanned by different
 * A_i must be pairwise disjoint (HypothesisViolated otherwise).
 */
MixingReport mixing_check(const Complex& c, const std::vector<MixingSet>& sets, std::optional<double> lambda = {});

/** Partite version with conditional probabilities inside the colored levels. */
MixingReport partite_mixing_check(const Complex& c, const std::vector<ColoredSet>& sets,
                                  std::optional<double> lambda = {});

/**
 * Sampler inequality Pr[T] <= lambda^2 / c^2 * Pr[S] where T collects left
 * vertices whose neighborhood sees S with bias above c.
 */
BoundCheck sampler_check(const BipartiteGraph& g, const std::vector<std::size_t>& s_right, double c,
                         std::optional<double> lambda = {});

/**
 * Almost-cut inequality for a partition given by labels 0 (A), 1 (B), 2 (C).
 * Square graphs: one label per vertex. Bipartite graphs: left vertices first,
 * then right vertices, with probabilities averaged over both sides.
 */
BoundCheck almost_cut_check(const BipartiteGraph& g, const std::vector<int>& labels, std::optional<double> lambda = {});

struct EdgeExpansion {
    double phi = 0.0;
    double lambda2 = 0.0;
    double cheeger_lower = 0.0;
    double cheeger_upper = 0.0;
    bool sandwich_holds = true;
    std::vector<std::size_t> witness;
};

nlohmann::json to_json(const EdgeExpansion& r);

/** Largest vertex count accepted by edge_expansion_exact. */
inline constexpr std::size_t kEdgeExpansionMaxVertices = 24;

/** Exact edge expansion by enumeration of vertex subsets (square graphs, at most 24 vertices). */
EdgeExpansion edge_expansion_exact(const BipartiteGraph& g);

/** Cheeger interval for the edge expansion from lambda2 alone. */
EdgeExpansion cheeger_bounds(const BipartiteGraph& g);

/**
 * Partition property: if half the total cut mass is below c/2 then some part
 * has probability at least 1/2. lhs is the half cut mass, rhs = c/2.
 */
BoundCheck partition_property_check(const BipartiteGraph& g, const std::vector<int>& parts, double c);

}  // namespace hdx
