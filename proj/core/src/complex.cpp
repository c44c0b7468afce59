#include "hdx/complex.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "hdx/error.hpp"

namespace hdx {

namespace {

constexpr std::size_t kLevelCap = 20'000'000;

Face sorted_copy(std::span<const int> f)
{
    Face out(f.begin(), f.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

LevelIndex::LevelIndex(int k, FaceTable table, std::vector<double> measure)
    : k_(k), table_(std::move(table)), measure_(std::move(measure))
{
}

Face LevelIndex::face_vec(std::size_t i) const
{
    auto f = face(i);
    return Face(f.begin(), f.end());
}

struct Complex::Cache {
    std::mutex mu;
    std::vector<std::shared_ptr<const LevelIndex>> levels;
};

Complex::Complex() : cache_(std::make_shared<Cache>()) {}

std::size_t Complex::top_count() const
{
    if (complete_)
        return static_cast<std::size_t>(binomial(n_, d_ + 1));
    return weights_.size();
}

void Complex::for_each_top(const std::function<void(std::span<const int>, double)>& fn) const
{
    if (complete_) {
        double w = 1.0 / binomial_d(n_, d_ + 1);
        for_each_combination(n_, d_ + 1, [&](const int* idx) {
            fn(std::span<const int>(idx, static_cast<std::size_t>(d_ + 1)), w);
        });
        return;
    }
    const std::size_t m = static_cast<std::size_t>(d_ + 1);
    for (std::size_t i = 0; i < weights_.size(); ++i)
        fn(std::span<const int>(tops_.data() + i * m, m), weights_[i]);
}

std::vector<TopFace> Complex::top_faces() const
{
    std::vector<TopFace> out;
    out.reserve(top_count());
    for_each_top([&](std::span<const int> f, double w) { out.emplace_back(Face(f.begin(), f.end()), w); });
    return out;
}

std::uint64_t Complex::color_mask(std::span<const int> f) const
{
    if (coloring_.empty())
        fail(ErrorKind::NotPartite, "complex has no coloring");
    std::uint64_t mask = 0;
    for (int v : f)
        mask |= std::uint64_t{1} << coloring_[static_cast<std::size_t>(v)];
    return mask;
}

const LevelIndex& Complex::level(int k) const
{
    return *level_ptr(k);
}

std::shared_ptr<const LevelIndex> Complex::level_ptr(int k) const
{
    if (k < -1 || k > d_)
        fail(ErrorKind::LevelOutOfRange, "level " + std::to_string(k) + " outside [-1, " + std::to_string(d_) + "]");
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto& levels = cache_->levels;
    if (levels.size() < static_cast<std::size_t>(d_ + 2))
        levels.resize(static_cast<std::size_t>(d_ + 2));
    auto& slot = levels[static_cast<std::size_t>(k + 1)];
    if (!slot)
        slot = build_level(k);
    return slot;
}

std::shared_ptr<const LevelIndex> Complex::build_level(int k) const
{
    const int size = k + 1;
    if (k == -1) {
        FaceTable table(0);
        table.insert(std::span<const int>());
        return std::make_shared<LevelIndex>(-1, std::move(table), std::vector<double>{1.0});
    }
    if (complete_) {
        double count = binomial_d(n_, size);
        check_size_cap(count, kLevelCap, "level X(" + std::to_string(k) + ")");
        FaceTable table(size);
        table.reserve(static_cast<std::size_t>(count));
        for_each_combination(n_, size, [&](const int* idx) {
            table.insert(std::span<const int>(idx, static_cast<std::size_t>(size)));
        });
        std::vector<double> measure(table.size(), 1.0 / count);
        return std::make_shared<LevelIndex>(k, std::move(table), std::move(measure));
    }

    double estimate = static_cast<double>(weights_.size()) * binomial_d(d_ + 1, size);
    check_size_cap(std::min(estimate, binomial_d(n_, size)), kLevelCap, "level X(" + std::to_string(k) + ")");
    FaceTable raw(size);
    std::vector<double> acc;
    const double norm = binomial_d(d_ + 1, size);
    for_each_top([&](std::span<const int> top, double w) {
        for_each_combination(d_ + 1, size, [&](const int* idx) {
            int buf[64];
            for (int i = 0; i < size; ++i)
                buf[i] = top[static_cast<std::size_t>(idx[i])];
            std::size_t pos = raw.insert(std::span<const int>(buf, static_cast<std::size_t>(size)));
            if (pos == acc.size())
                acc.push_back(0.0);
            acc[pos] += w / norm;
        });
    });

    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto fa = raw.face(a), fb = raw.face(b);
        return std::lexicographical_compare(fa.begin(), fa.end(), fb.begin(), fb.end());
    });
    FaceTable table(size);
    table.reserve(raw.size());
    std::vector<double> measure;
    measure.reserve(raw.size());
    for (std::size_t i : order) {
        table.insert(raw.face(i));
        measure.push_back(acc[i]);
    }
    return std::make_shared<LevelIndex>(k, std::move(table), std::move(measure));
}

double Complex::containing_weight(std::span<const int> f) const
{
    if (!is_sorted_face(f)) {
        Face s = sorted_copy(f);
        if (!is_sorted_face(s))
            return 0.0;
        return containing_weight(s);
    }
    const int m = static_cast<int>(f.size());
    if (m > d_ + 1)
        return 0.0;
    if (m == 0)
        return 1.0;
    if (f.front() < 0 || f.back() >= n_)
        return 0.0;
    if (complete_)
        return binomial_d(d_ + 1, m) / binomial_d(n_, m);
    const LevelIndex& lev = level(m - 1);
    long long pos = lev.find(f);
    if (pos < 0)
        return 0.0;
    return lev.measure(static_cast<std::size_t>(pos)) * binomial_d(d_ + 1, m);
}

double Complex::measure(std::span<const int> f) const
{
    const int m = static_cast<int>(f.size());
    if (m > d_ + 1)
        return 0.0;
    return containing_weight(f) / binomial_d(d_ + 1, m);
}

namespace detail {

struct ComplexBuilder {
    static Complex explicit_complex(int n, int d, std::vector<int> tops, std::vector<double> weights,
                                    std::vector<int> coloring, std::vector<int> labels)
    {
        Complex c;
        c.n_ = n;
        c.d_ = d;
        c.tops_ = std::move(tops);
        c.weights_ = std::move(weights);
        c.coloring_ = std::move(coloring);
        c.labels_ = std::move(labels);
        if (c.labels_.empty()) {
            c.labels_.resize(static_cast<std::size_t>(n));
            std::iota(c.labels_.begin(), c.labels_.end(), 0);
        }
        if (d >= 0 && c.weights_.size() == static_cast<std::size_t>(binomial(n, d + 1))) {
            double w0 = c.weights_.front();
            bool uniform = std::all_of(c.weights_.begin(), c.weights_.end(),
                                       [&](double w) { return std::abs(w - w0) <= 1e-15 * w0; });
            c.complete_ = uniform && c.coloring_.empty();
        }
        return c;
    }

    static Complex implicit_complete(int n, int d, std::vector<int> labels)
    {
        Complex c;
        c.n_ = n;
        c.d_ = d;
        c.complete_ = true;
        c.labels_ = std::move(labels);
        if (c.labels_.empty()) {
            c.labels_.resize(static_cast<std::size_t>(n));
            std::iota(c.labels_.begin(), c.labels_.end(), 0);
        }
        return c;
    }

    static Complex empty_top(std::vector<int> labels)
    {
        Complex c;
        c.n_ = 0;
        c.d_ = -1;
        c.weights_ = {1.0};
        c.labels_ = std::move(labels);
        return c;
    }

    static const std::vector<int>& raw_tops(const Complex& c) { return c.tops_; }
    static const std::vector<double>& raw_weights(const Complex& c) { return c.weights_; }
};

}  // namespace detail

using detail::ComplexBuilder;

Complex build_from_top_faces(int n_vertices, std::vector<TopFace> tops, std::optional<std::vector<int>> coloring)
{
    if (n_vertices < 0)
        fail(ErrorKind::InvalidInput, "negative vertex count");
    if (tops.empty())
        fail(ErrorKind::InvalidInput, "no top faces");
    const std::size_t m = tops.front().first.size();
    if (m == 0)
        fail(ErrorKind::InvalidInput, "top faces must be nonempty");
    if (m > 64)
        fail(ErrorKind::DimensionTooLarge, "top dimension above 63 is unsupported");
    double total = 0.0;
    for (auto& [face, w] : tops) {
        if (face.size() != m)
            fail(ErrorKind::MixedDimension, "top faces of sizes " + std::to_string(m) + " and " +
                                                std::to_string(face.size()));
        if (!(w > 0.0) || !std::isfinite(w))
            fail(ErrorKind::ZeroWeight, "top face weight must be positive and finite");
        std::sort(face.begin(), face.end());
        if (!is_sorted_face(face))
            fail(ErrorKind::InvalidInput, "repeated vertex inside a top face");
        if (face.front() < 0 || face.back() >= n_vertices)
            fail(ErrorKind::InvalidInput, "vertex id outside [0, n_vertices)");
        total += w;
    }
    std::sort(tops.begin(), tops.end(), [](const TopFace& a, const TopFace& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < tops.size(); ++i)
        if (tops[i].first == tops[i - 1].first)
            fail(ErrorKind::DuplicateTopFace, "top face listed twice");
    std::vector<char> seen(static_cast<std::size_t>(n_vertices), 0);
    for (const auto& [face, w] : tops)
        for (int v : face)
            seen[static_cast<std::size_t>(v)] = 1;
    for (int v = 0; v < n_vertices; ++v)
        if (!seen[static_cast<std::size_t>(v)])
            fail(ErrorKind::IsolatedVertex, "vertex " + std::to_string(v) + " lies in no top face");
    if (std::abs(total - 1.0) > 1e-9)
        spdlog::warn("top-face weights sum to {:.12g}; renormalizing", total);

    const int d = static_cast<int>(m) - 1;
    std::vector<int> colors;
    if (coloring) {
        colors = std::move(*coloring);
        if (colors.size() != static_cast<std::size_t>(n_vertices))
            fail(ErrorKind::NotPartite, "coloring length differs from vertex count");
        for (int col : colors)
            if (col < 0 || col > d)
                fail(ErrorKind::NotPartite, "color outside [0, d]");
        const std::uint64_t full = (d == 63) ? ~std::uint64_t{0} : ((std::uint64_t{1} << (d + 1)) - 1);
        for (const auto& [face, w] : tops) {
            std::uint64_t mask = 0;
            for (int v : face)
                mask |= std::uint64_t{1} << colors[static_cast<std::size_t>(v)];
            if (mask != full)
                fail(ErrorKind::NotPartite, "a top face does not have one vertex of each color");
        }
    }

    std::vector<int> flat;
    flat.reserve(tops.size() * m);
    std::vector<double> weights;
    weights.reserve(tops.size());
    for (const auto& [face, w] : tops) {
        flat.insert(flat.end(), face.begin(), face.end());
        weights.push_back(w / total);
    }
    return ComplexBuilder::explicit_complex(n_vertices, d, std::move(flat), std::move(weights), std::move(colors), {});
}

Complex complete_complex(int n, int d)
{
    if (d < 0)
        fail(ErrorKind::LevelOutOfRange, "dimension must be nonnegative");
    if (n < d + 1)
        fail(ErrorKind::DimensionTooLarge, "complete_complex needs n >= d+1");
    if (d + 1 > 64)
        fail(ErrorKind::DimensionTooLarge, "top dimension above 63 is unsupported");
    return ComplexBuilder::implicit_complete(n, d, {});
}

Complex partite_complete_complex(const std::vector<int>& part_sizes)
{
    if (part_sizes.empty())
        fail(ErrorKind::EmptyPart, "no parts");
    double count = 1.0;
    for (int p : part_sizes) {
        if (p < 1)
            fail(ErrorKind::EmptyPart, "every part needs at least one vertex");
        count *= p;
    }
    check_size_cap(count, kLevelCap, "partite complete complex");
    std::vector<int> coloring;
    std::vector<int> offset;
    for (std::size_t i = 0; i < part_sizes.size(); ++i) {
        offset.push_back(static_cast<int>(coloring.size()));
        coloring.insert(coloring.end(), static_cast<std::size_t>(part_sizes[i]), static_cast<int>(i));
    }
    const std::size_t parts = part_sizes.size();
    std::vector<TopFace> tops;
    tops.reserve(static_cast<std::size_t>(count));
    std::vector<int> digit(parts, 0);
    const double w = 1.0 / count;
    while (true) {
        Face f(parts);
        for (std::size_t i = 0; i < parts; ++i)
            f[i] = offset[i] + digit[i];
        tops.emplace_back(std::move(f), w);
        std::size_t i = parts;
        while (i > 0) {
            --i;
            if (++digit[i] < part_sizes[i])
                break;
            digit[i] = 0;
            if (i == 0) {
                i = parts + 1;
                break;
            }
        }
        if (i == parts + 1)
            break;
    }
    const int n = static_cast<int>(coloring.size());
    return build_from_top_faces(n, std::move(tops), std::move(coloring));
}

namespace {

int find_root(std::vector<int>& parent, int x)
{
    while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
    }
    return x;
}

}  // namespace

Complex graphic_matroid_complex(const std::vector<std::pair<int, int>>& edges, int truncation)
{
    if (truncation < 0)
        fail(ErrorKind::LevelOutOfRange, "truncation must be nonnegative");
    int graph_n = 0;
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0)
            fail(ErrorKind::InvalidInput, "negative graph vertex");
        graph_n = std::max({graph_n, u + 1, v + 1});
    }
    std::vector<int> parent(static_cast<std::size_t>(graph_n));
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<char> used(static_cast<std::size_t>(graph_n), 0);
    int rank = 0;
    for (auto [u, v] : edges) {
        used[static_cast<std::size_t>(u)] = used[static_cast<std::size_t>(v)] = 1;
        int ru = find_root(parent, u), rv = find_root(parent, v);
        if (ru != rv) {
            parent[static_cast<std::size_t>(ru)] = rv;
            ++rank;
        }
    }
    if (truncation + 1 > rank)
        fail(ErrorKind::TruncationExceedsRank, "truncation+1 = " + std::to_string(truncation + 1) +
                                                   " exceeds matroid rank " + std::to_string(rank));
    const int m = static_cast<int>(edges.size());
    check_size_cap(binomial_d(m, truncation + 1), kLevelCap, "graphic matroid complex");
    std::vector<Face> forests;
    for_each_combination(m, truncation + 1, [&](const int* idx) {
        std::vector<int> p(static_cast<std::size_t>(graph_n));
        std::iota(p.begin(), p.end(), 0);
        for (int i = 0; i <= truncation; ++i) {
            auto [u, v] = edges[static_cast<std::size_t>(idx[i])];
            int ru = find_root(p, u), rv = find_root(p, v);
            if (ru == rv)
                return;
            p[static_cast<std::size_t>(ru)] = rv;
        }
        forests.emplace_back(idx, idx + truncation + 1);
    });
    std::vector<TopFace> tops;
    tops.reserve(forests.size());
    const double w = 1.0 / static_cast<double>(forests.size());
    for (auto& f : forests)
        tops.emplace_back(std::move(f), w);
    return build_from_top_faces(m, std::move(tops));
}

Complex link(const Complex& c, std::span<const int> s_in)
{
    Face s = sorted_copy(s_in);
    if (!is_sorted_face(s) || c.containing_weight(s) <= 0.0)
        fail(ErrorKind::NotAFace, "link requested for a set that is not a face");
    const int d = c.dim();
    const int new_d = d - static_cast<int>(s.size());
    std::vector<int> keep;
    for (int v = 0; v < c.n_vertices(); ++v)
        if (!std::binary_search(s.begin(), s.end(), v))
            keep.push_back(v);

    if (new_d < 0)
        return ComplexBuilder::empty_top({});

    if (c.is_complete()) {
        std::vector<int> labels;
        for (int v : keep)
            labels.push_back(c.labels()[static_cast<std::size_t>(v)]);
        return ComplexBuilder::implicit_complete(static_cast<int>(keep.size()), new_d, std::move(labels));
    }

    std::vector<std::pair<Face, double>> raw;
    std::vector<int> local(static_cast<std::size_t>(c.n_vertices()), -1);
    double total = 0.0;
    c.for_each_top([&](std::span<const int> top, double w) {
        if (!is_subset(s, top))
            return;
        Face rest = face_difference(top, s);
        for (int v : rest)
            local[static_cast<std::size_t>(v)] = 0;
        raw.emplace_back(std::move(rest), w);
        total += w;
    });
    std::vector<int> labels;
    int next = 0;
    for (int v = 0; v < c.n_vertices(); ++v)
        if (local[static_cast<std::size_t>(v)] == 0) {
            local[static_cast<std::size_t>(v)] = next++;
            labels.push_back(c.labels()[static_cast<std::size_t>(v)]);
        }
    std::vector<int> colors;
    if (c.has_coloring()) {
        std::uint64_t smask = c.color_mask(s);
        std::vector<int> remap(static_cast<std::size_t>(d + 1), -1);
        int nc = 0;
        for (int col = 0; col <= d; ++col)
            if (!(smask >> col & 1))
                remap[static_cast<std::size_t>(col)] = nc++;
        colors.resize(static_cast<std::size_t>(next));
        for (int v = 0; v < c.n_vertices(); ++v)
            if (local[static_cast<std::size_t>(v)] >= 0)
                colors[static_cast<std::size_t>(local[static_cast<std::size_t>(v)])] =
                    remap[static_cast<std::size_t>(c.color(v))];
    }
    std::vector<int> flat;
    std::vector<double> weights;
    std::sort(raw.begin(), raw.end());
    for (auto& [f, w] : raw) {
        for (int v : f)
            flat.push_back(local[static_cast<std::size_t>(v)]);
        weights.push_back(w / total);
    }
    return ComplexBuilder::explicit_complex(next, new_d, std::move(flat), std::move(weights), std::move(colors),
                                            std::move(labels));
}

Complex skeleton(const Complex& c, int k)
{
    if (k < 0 || k > c.dim())
        fail(ErrorKind::LevelOutOfRange, "skeleton dimension outside [0, d]");
    if (k == c.dim())
        return c;
    if (c.is_complete())
        return ComplexBuilder::implicit_complete(c.n_vertices(), k, c.labels());
    const LevelIndex& lev = c.level(k);
    std::vector<int> flat;
    std::vector<double> weights;
    flat.reserve(lev.size() * static_cast<std::size_t>(k + 1));
    for (std::size_t i = 0; i < lev.size(); ++i) {
        auto f = lev.face(i);
        flat.insert(flat.end(), f.begin(), f.end());
        weights.push_back(lev.measure(i));
    }
    return ComplexBuilder::explicit_complex(c.n_vertices(), k, std::move(flat), std::move(weights), {}, c.labels());
}

std::vector<int> label_lookup(const Complex& c, int original_n)
{
    std::vector<int> out(static_cast<std::size_t>(original_n), -1);
    for (std::size_t i = 0; i < c.labels().size(); ++i) {
        int lab = c.labels()[i];
        if (lab >= 0 && lab < original_n)
            out[static_cast<std::size_t>(lab)] = static_cast<int>(i);
    }
    return out;
}

Complex complex_from_json(const nlohmann::json& j)
{
    try {
        int n = j.at("n_vertices").get<int>();
        int d = j.at("d").get<int>();
        std::vector<TopFace> tops;
        for (const auto& t : j.at("top_faces")) {
            Face f = t.at("verts").get<Face>();
            double w = t.at("weight").get<double>();
            if (static_cast<int>(f.size()) != d + 1)
                fail(ErrorKind::MixedDimension, "top face size differs from d+1");
            tops.emplace_back(std::move(f), w);
        }
        std::optional<std::vector<int>> coloring;
        if (j.contains("coloring") && !j.at("coloring").is_null())
            coloring = j.at("coloring").get<std::vector<int>>();
        return build_from_top_faces(n, std::move(tops), std::move(coloring));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidInput, std::string("malformed complex JSON: ") + e.what());
    }
}

nlohmann::json complex_to_json(const Complex& c)
{
    check_size_cap(static_cast<double>(c.top_count()), kLevelCap, "complex JSON top faces");
    nlohmann::json j;
    j["n_vertices"] = c.n_vertices();
    j["d"] = c.dim();
    j["coloring"] = c.has_coloring() ? nlohmann::json(c.coloring()) : nlohmann::json(nullptr);
    nlohmann::json tops = nlohmann::json::array();
    c.for_each_top([&](std::span<const int> f, double w) {
        tops.push_back({{"verts", std::vector<int>(f.begin(), f.end())}, {"weight", w}});
    });
    j["top_faces"] = std::move(tops);
    return j;
}

}  // namespace hdx
