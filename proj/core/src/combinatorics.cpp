#include "hdx/combinatorics.hpp"

#include <algorithm>
#include <cmath>

#include "hdx/error.hpp"

namespace hdx {

std::uint64_t binomial(int n, int k)
{
    if (k < 0 || n < 0 || k > n)
        return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
        if (r > static_cast<unsigned __int128>(UINT64_MAX))
            fail(ErrorKind::TooLarge, "binomial overflow");
    }
    return static_cast<std::uint64_t>(r);
}

double binomial_d(int n, int k)
{
    if (k < 0 || n < 0 || k > n)
        return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r < 9e15 ? std::round(r) : r;
}

void for_each_combination(int n, int k, const std::function<void(const int*)>& fn)
{
    if (k < 0 || k > n)
        return;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i)
        idx[i] = i;
    while (true) {
        fn(idx.data());
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i)
            --i;
        if (i < 0)
            return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

void for_each_subset(std::span<const int> items, int k, const std::function<void(const Face&)>& fn)
{
    Face sub(k > 0 ? k : 0);
    for_each_combination(static_cast<int>(items.size()), k, [&](const int* idx) {
        for (int i = 0; i < k; ++i)
            sub[i] = items[idx[i]];
        fn(sub);
    });
}

bool is_sorted_face(std::span<const int> f)
{
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f[i - 1] >= f[i])
            return false;
    return true;
}

bool is_subset(std::span<const int> small, std::span<const int> big)
{
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

bool is_disjoint(std::span<const int> x, std::span<const int> y)
{
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] == y[j])
            return false;
        if (x[i] < y[j])
            ++i;
        else
            ++j;
    }
    return true;
}

Face face_union(std::span<const int> x, std::span<const int> y)
{
    Face out;
    out.reserve(x.size() + y.size());
    std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
    return out;
}

Face face_difference(std::span<const int> x, std::span<const int> y)
{
    Face out;
    std::set_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
    return out;
}

Face face_intersection(std::span<const int> x, std::span<const int> y)
{
    Face out;
    std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
    return out;
}

Face face_insert(std::span<const int> x, int v)
{
    Face out(x.begin(), x.end());
    out.insert(std::lower_bound(out.begin(), out.end(), v), v);
    return out;
}

std::uint64_t hash_face(std::span<const int> f)
{
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ f.size();
    for (int v : f) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
    }
    return h;
}

FaceTable::FaceTable(int face_size) : face_size_(face_size)
{
    slots_.assign(16, 0);
}

void FaceTable::reserve(std::size_t n)
{
    verts_.reserve(n * static_cast<std::size_t>(face_size_));
    std::size_t cap = 16;
    while (cap < 2 * n)
        cap <<= 1;
    if (cap > slots_.size())
        rehash(cap);
}

std::span<const int> FaceTable::face(std::size_t i) const
{
    return {verts_.data() + i * static_cast<std::size_t>(face_size_), static_cast<std::size_t>(face_size_)};
}

bool FaceTable::equal_at(std::size_t i, std::span<const int> f) const
{
    const int* p = verts_.data() + i * static_cast<std::size_t>(face_size_);
    for (int j = 0; j < face_size_; ++j)
        if (p[j] != f[j])
            return false;
    return true;
}

void FaceTable::rehash(std::size_t capacity)
{
    std::vector<std::uint32_t> fresh(capacity, 0);
    std::size_t mask = capacity - 1;
    for (std::size_t i = 0; i < count_; ++i) {
        std::size_t h = hash_face(face(i)) & mask;
        while (fresh[h] != 0)
            h = (h + 1) & mask;
        fresh[h] = static_cast<std::uint32_t>(i + 1);
    }
    slots_.swap(fresh);
}

long long FaceTable::find(std::span<const int> f) const
{
    if (static_cast<int>(f.size()) != face_size_)
        return -1;
    std::size_t mask = slots_.size() - 1;
    std::size_t h = hash_face(f) & mask;
    while (slots_[h] != 0) {
        std::size_t i = slots_[h] - 1;
        if (equal_at(i, f))
            return static_cast<long long>(i);
        h = (h + 1) & mask;
    }
    return -1;
}

std::size_t FaceTable::insert(std::span<const int> f)
{
    long long found = find(f);
    if (found >= 0)
        return static_cast<std::size_t>(found);
    if (2 * (count_ + 1) > slots_.size())
        rehash(slots_.size() * 2);
    if (count_ >= UINT32_MAX - 1)
        fail(ErrorKind::TooLarge, "face table exceeds 2^32 entries");
    verts_.insert(verts_.end(), f.begin(), f.end());
    std::size_t mask = slots_.size() - 1;
    std::size_t h = hash_face(f) & mask;
    while (slots_[h] != 0)
        h = (h + 1) & mask;
    slots_[h] = static_cast<std::uint32_t>(count_ + 1);
    return count_++;
}

}  // namespace hdx
