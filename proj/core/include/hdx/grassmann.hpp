#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "hdx/stav.hpp"
#include "hdx/walks.hpp"

namespace hdx {

enum class Flavor { Linear, Affine };

const char* to_string(Flavor f);

/**
 * Vector-space dimension of the subspaces in level `level`. Linear levels
 * Y(k) hold subspaces of dimension k+1; affine levels X(k) hold flats of
 * dimension k. Level -1 is the zero space (linear) or the empty flat (affine).
 */
int level_dimension(Flavor f, int level);
int dimension_level(Flavor f, int dim);

/** Finite field GF(q) for q in {2, 3, 4, 5, 7, 8, 9}, elements 0..q-1. */
class GaloisField {
public:
    explicit GaloisField(int q);

    int q() const { return q_; }
    int characteristic() const { return p_; }
    std::uint8_t add(std::uint8_t a, std::uint8_t b) const { return add_[a * q_ + b]; }
    std::uint8_t sub(std::uint8_t a, std::uint8_t b) const { return add_[a * q_ + neg_[b]]; }
    std::uint8_t mul(std::uint8_t a, std::uint8_t b) const { return mul_[a * q_ + b]; }
    std::uint8_t neg(std::uint8_t a) const { return neg_[a]; }
    /** Multiplicative inverse; a must be nonzero. */
    std::uint8_t inv(std::uint8_t a) const { return inv_[a]; }

private:
    int q_;
    int p_;
    std::vector<std::uint8_t> add_;
    std::vector<std::uint8_t> mul_;
    std::vector<std::uint8_t> neg_;
    std::vector<std::uint8_t> inv_;
};

using FqVec = std::vector<std::uint8_t>;

/**
 * Linear subspace or affine flat of F_q^n in canonical form. `basis` holds
 * `rank` rows of the reduced row echelon form (the direction space for
 * flats); `offset` is the coset representative with zeros at the pivot
 * columns. The empty flat has rank 0 and an empty offset.
 */
struct Subspace {
    Flavor flavor = Flavor::Linear;
    int n = 0;
    int rank = 0;
    std::vector<std::uint8_t> basis;
    FqVec offset;

    /** Linear dimension for subspaces, affine dimension for flats (-1 when empty). */
    int dim() const;
    int level() const { return dimension_level(flavor, dim()); }
    bool is_empty_flat() const { return flavor == Flavor::Affine && offset.empty(); }
    std::string key() const;
    bool operator==(const Subspace& o) const = default;
};

/** Canonical linear span of the given rows (each of length n). */
Subspace linear_span(const GaloisField& f, int n, const std::vector<FqVec>& rows);
/** Canonical affine flat through `point` with the given direction rows. */
Subspace affine_flat(const GaloisField& f, int n, const FqVec& point, const std::vector<FqVec>& directions);
/** Smallest subspace (linear sum or affine join) containing both. */
Subspace join(const GaloisField& f, const Subspace& x, const Subspace& y);
bool contains(const GaloisField& f, const Subspace& big, const Subspace& small);
bool contains_vector(const GaloisField& f, const Subspace& s, const FqVec& v);
std::string to_string(const Subspace& s);

/** Gaussian binomial [n choose k]_q as a double. */
double gaussian_binomial(int n, int k, int q);

/** Closed-form size of a level: [n, k+1]_q (linear) or q^(n-k) [n, k]_q (affine). */
double level_count(Flavor f, int q, int n, int level);

/**
 * Linear or affine Grassmann poset of F_q^n truncated at level d. Levels are
 * enumerated on first use (thread-safe) and immutable afterwards.
 */
class GrassmannPoset {
public:
    GrassmannPoset(int q, int n, int d, Flavor flavor);

    const GaloisField& field() const { return field_; }
    int q() const { return field_.q(); }
    int n() const { return n_; }
    int d() const { return d_; }
    Flavor flavor() const { return flavor_; }

    /** Canonical enumeration of level k, -1 <= k <= d. */
    const std::vector<Subspace>& level(int k) const;
    /** Position of a subspace in its level; throws NotAFace when absent. */
    std::size_t index_of(const Subspace& s) const;
    /** Zero space (linear) or empty flat (affine). */
    Subspace trivial() const;
    /** Vectors of F_q^n in lexicographic order (affine points). */
    FqVec vector_of(std::size_t code) const;
    std::size_t code_of(const FqVec& v) const;

private:
    struct LevelData {
        std::vector<Subspace> items;
        std::unordered_map<std::string, std::size_t> index;
    };
    const LevelData& data(int k) const;

    GaloisField field_;
    int n_;
    int d_;
    Flavor flavor_;
    mutable std::mutex mutex_;
    mutable std::vector<std::unique_ptr<LevelData>> levels_;
};

/** Walk from X(k) down to X(l), l < k, uniform over containments. */
MarkovOperator grassmann_containment_walk(const GrassmannPoset& p, int k, int l);

/**
 * u0-conditioned l1,l2 complement walk with edges chosen uniformly. Affine:
 * dim span(v, w, u0) = l1 + l2 + l3 + 2; linear: v + w + u0 is direct.
 * Passing trivial() gives the unconditioned complement walk.
 */
MarkovOperator conditioned_complement_walk(const GrassmannPoset& p, int l1, int l2, const Subspace& u0);

/** Points (affine) or lines (linear) inside a subspace, as level-0 positions. */
std::vector<std::size_t> points_of(const GrassmannPoset& p, const Subspace& s);

/**
 * Grassmann d,l test distribution: t uniform in level l, then s1, s2 in level
 * d containing t, independently. Sets are described by their level-0 points.
 */
StsDistribution grassmann_distribution(const GrassmannPoset& p, int d, int l);

/**
 * Grassmann STAV with S = level d, T = level l, A = level l-1, V = level 0.
 * Requires 1 <= l and 3l+2 < d <= top level.
 */
StavInstance grassmann_stav(const GrassmannPoset& p, int d, int l);

}  // namespace hdx
