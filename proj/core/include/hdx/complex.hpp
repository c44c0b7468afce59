#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hdx/combinatorics.hpp"

namespace hdx {

/**
 * Enumeration of one level X(k) of a complex together with the chain measure
 * measure(s) = sum over top faces t containing s of weight(t) / C(d+1, k+1).
 */
class LevelIndex {
public:
    LevelIndex(int k, FaceTable table, std::vector<double> measure);

    int k() const { return k_; }
    std::size_t size() const { return measure_.size(); }
    std::span<const int> face(std::size_t i) const { return table_.face(i); }
    Face face_vec(std::size_t i) const;
    /** Position of `f` in the level, or -1. */
    long long find(std::span<const int> f) const { return table_.find(f); }
    double measure(std::size_t i) const { return measure_[i]; }
    const std::vector<double>& measures() const { return measure_; }

private:
    int k_;
    FaceTable table_;
    std::vector<double> measure_;
};

using TopFace = std::pair<Face, double>;

namespace detail {
struct ComplexBuilder;
}

/**
 * Pure d-dimensional weighted simplicial complex on vertices 0..n-1.
 *
 * Complete complexes built by complete_complex() are implicit: their top
 * faces are generated on demand and face measures have a closed form, which
 * keeps large instances such as complete_complex(30, 8) cheap to query.
 * Lower levels are enumerated lazily and cached; copies share the cache.
 */
class Complex {
public:
    int n_vertices() const { return n_; }
    int dim() const { return d_; }
    std::size_t top_count() const;
    bool is_complete() const { return complete_; }

    void for_each_top(const std::function<void(std::span<const int>, double)>& fn) const;
    std::vector<TopFace> top_faces() const;

    bool has_coloring() const { return !coloring_.empty(); }
    const std::vector<int>& coloring() const { return coloring_; }
    int color(int v) const { return coloring_.at(static_cast<std::size_t>(v)); }
    /** Bit mask of the colors of a face; requires a coloring. */
    std::uint64_t color_mask(std::span<const int> f) const;

    /** Original vertex ids (identity unless this complex is a link). */
    const std::vector<int>& labels() const { return labels_; }

    /** Level X(k) for -1 <= k <= d. */
    const LevelIndex& level(int k) const;
    std::shared_ptr<const LevelIndex> level_ptr(int k) const;

    /** Chain measure of a face at its own level; 0 for non-faces. */
    double measure(std::span<const int> f) const;
    /** Total top weight of faces containing f, i.e. Pr[f is inside the sampled top face]. */
    double containing_weight(std::span<const int> f) const;
    bool is_face(std::span<const int> f) const { return containing_weight(f) > 0.0; }

private:
    friend struct detail::ComplexBuilder;

    struct Cache;

    Complex();
    std::shared_ptr<const LevelIndex> build_level(int k) const;

    int n_ = 0;
    int d_ = -1;
    bool complete_ = false;
    std::vector<int> tops_;
    std::vector<double> weights_;
    std::vector<int> coloring_;
    std::vector<int> labels_;
    std::shared_ptr<Cache> cache_;
};

/**
 * Validate and normalize a list of weighted top faces. Vertex lists are
 * sorted; weights are renormalized to sum to 1 (warning when the drift exceeds
 * 1e-9). An optional coloring must put exactly one vertex of each color
 * 0..d in every top face.
 */
Complex build_from_top_faces(int n_vertices, std::vector<TopFace> tops,
                             std::optional<std::vector<int>> coloring = std::nullopt);

Complex complete_complex(int n, int d);
Complex partite_complete_complex(const std::vector<int>& part_sizes);

/**
 * Independence complex of a graphic matroid truncated at dimension
 * `truncation`: vertices are edge indices and top faces are the forests with
 * truncation+1 edges, uniformly weighted.
 */
Complex graphic_matroid_complex(const std::vector<std::pair<int, int>>& edges, int truncation);

/** Link of a face, with vertices relabeled densely; labels() keeps the original ids. */
Complex link(const Complex& c, std::span<const int> s);
Complex skeleton(const Complex& c, int k);

/** Inverse of labels(): original id to local id, -1 when absent. */
std::vector<int> label_lookup(const Complex& c, int original_n);

Complex complex_from_json(const nlohmann::json& j);
nlohmann::json complex_to_json(const Complex& c);

}  // namespace hdx
