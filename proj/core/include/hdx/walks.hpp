#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "hdx/complex.hpp"

namespace hdx {

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

/** Indexed state space with a probability measure and optional labels. */
struct Space {
    std::vector<double> measure;
    std::function<std::string(std::size_t)> label;

    std::size_t size() const { return measure.size(); }
    std::string label_of(std::size_t i) const { return label ? label(i) : std::to_string(i); }
};

/** Space over the faces of a level (or of a subset given by `members`). */
Space level_space(std::shared_ptr<const LevelIndex> level, std::vector<std::size_t> members = {});
std::string face_label(std::span<const int> f);

/**
 * Weighted graph given by a joint distribution on left x right. Square graphs
 * have left == right as vertex sets and a symmetric joint.
 */
struct BipartiteGraph {
    std::vector<double> left;
    std::vector<double> right;
    SparseMat joint;
    bool square = false;

    std::size_t n_left() const { return left.size(); }
    std::size_t n_right() const { return right.size(); }
};

/**
 * Build a graph from unnormalized joint weights; duplicates are summed, the
 * total is normalized to 1 and the side measures are the marginals. For
 * square graphs the weights must already be symmetric.
 */
BipartiteGraph graph_from_weights(std::size_t n_left, std::size_t n_right, const std::vector<Triplet>& weights,
                                  bool square);

/** Same graph viewed from the right side. */
BipartiteGraph transpose(const BipartiteGraph& g);

/** Row-stochastic transition operator between two spaces. */
class MarkovOperator {
public:
    MarkovOperator(Space source, Space target, SparseMat transition, bool square);

    /** Operator whose joint distribution is proportional to `weights`; measures are the marginals. */
    static MarkovOperator from_joint(Space source, Space target, const std::vector<Triplet>& weights, bool square);

    const Space& source() const { return source_; }
    const Space& target() const { return target_; }
    const SparseMat& matrix() const { return p_; }
    bool is_square() const { return square_; }
    std::size_t rows() const { return static_cast<std::size_t>(p_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(p_.cols()); }

    /** Reverse operator P*(v,u) = pi_s(u) P(u,v) / pi_t(v). */
    MarkovOperator reverse() const;
    /** Two-step operator: this, then `next`. */
    MarkovOperator then(const MarkovOperator& next, bool square) const;
    /** Joint distribution diag(pi_s) P. */
    SparseMat joint() const;
    BipartiteGraph graph() const;

    /** Largest deviation of a row sum from 1. */
    double row_sum_error() const;
    /** Largest deviation between pi_s P and pi_t (target marginal consistency). */
    double marginal_error() const;

private:
    Space source_;
    Space target_;
    SparseMat p_;
    bool square_;
};

/** Write (row_face, col_face, prob) triplets as CSV. */
void write_csv(const MarkovOperator& op, std::ostream& out);

MarkovOperator up_operator(const Complex& c, int k);
MarkovOperator down_operator(const Complex& c, int k);
MarkovOperator containment_operator(const Complex& c, int k, int l);
MarkovOperator lower_walk(const Complex& c, int k, int l);
/** Upper walk on X(l) through X(l+1); the non-lazy version never stays put. */
MarkovOperator upper_walk(const Complex& c, int l, bool lazy);
MarkovOperator complement_walk(const Complex& c, int l1, int l2);
MarkovOperator colored_walk(const Complex& c, const std::vector<int>& colors_i, const std::vector<int>& colors_j);
MarkovOperator fixed_union_walk(const Complex& c, int l, int j);

/** Faces of X(|colors|-1) whose color set is exactly `colors`, as positions in that level. */
std::vector<std::size_t> colored_level(const Complex& c, const std::vector<int>& colors);
std::uint64_t color_set_mask(const std::vector<int>& colors);

/** Ball_z = vertex set of the link of z, for every z in X(k) (level order). */
std::vector<Face> neighborhood_system(const Complex& c, int k);

}  // namespace hdx
