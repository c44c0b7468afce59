#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace hdx {

/** A face is a strictly increasing list of vertex ids. */
using Face = std::vector<int>;

/** Exact binomial coefficient; throws TooLarge on 64-bit overflow. */
std::uint64_t binomial(int n, int k);

/** Binomial coefficient as a double (no overflow check, for measures). */
double binomial_d(int n, int k);

/**
 * Visit all k-subsets of {0,...,n-1} in lexicographic order. The callback
 * receives a pointer to k increasing indices.
 */
void for_each_combination(int n, int k, const std::function<void(const int*)>& fn);

/** Visit all k-subsets of `items` (kept in the order of `items`). */
void for_each_subset(std::span<const int> items, int k, const std::function<void(const Face&)>& fn);

bool is_sorted_face(std::span<const int> f);
bool is_subset(std::span<const int> small, std::span<const int> big);
bool is_disjoint(std::span<const int> x, std::span<const int> y);
Face face_union(std::span<const int> x, std::span<const int> y);
Face face_difference(std::span<const int> x, std::span<const int> y);
Face face_intersection(std::span<const int> x, std::span<const int> y);
Face face_insert(std::span<const int> x, int v);

std::uint64_t hash_face(std::span<const int> f);

/**
 * Open-addressing index from faces to dense positions. Faces are stored flat
 * with a fixed size per table.
 */
class FaceTable {
public:
    explicit FaceTable(int face_size = 0);

    int face_size() const { return face_size_; }
    std::size_t size() const { return count_; }

    /** Insert if absent; returns the position of the face. */
    std::size_t insert(std::span<const int> f);
    /** Position of `f`, or -1 if absent. */
    long long find(std::span<const int> f) const;
    std::span<const int> face(std::size_t i) const;
    const std::vector<int>& flat() const { return verts_; }
    void reserve(std::size_t n);

private:
    void rehash(std::size_t capacity);
    bool equal_at(std::size_t i, std::span<const int> f) const;

    int face_size_;
    std::size_t count_ = 0;
    std::vector<int> verts_;
    std::vector<std::uint32_t> slots_;
};

}  // namespace hdx
