#include "hdx/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "hdx/error.hpp"

namespace hdx {

namespace {

constexpr double kSymmetryTol = 1e-8;
constexpr double kMarginalTol = 1e-8;
constexpr double kDisconnected = 1.0 - 1e-9;

nlohmann::json finite_or_null(double x)
{
    if (std::isfinite(x))
        return x;
    return nullptr;
}

Eigen::VectorXd sqrt_vec(const std::vector<double>& p)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = std::sqrt(std::max(0.0, p[i]));
    return v;
}

double inv_sqrt(double x)
{
    return x > 0.0 ? 1.0 / std::sqrt(x) : 0.0;
}

/** D_l^{-1/2} J D_r^{-1/2}. */
SparseMat normalized_joint(const BipartiteGraph& g)
{
    SparseMat m = g.joint;
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
        double a = inv_sqrt(g.left[static_cast<std::size_t>(r)]);
        for (SparseMat::InnerIterator it(m, r); it; ++it)
            it.valueRef() *= a * inv_sqrt(g.right[static_cast<std::size_t>(it.col())]);
    }
    return m;
}

SpectralReport square_from_symmetric(SparseMat s, const std::vector<double>& measure, linalg::Method method)
{
    SparseMat st = SparseMat(s.transpose());
    SparseMat diff = s - st;
    double asym = 0.0;
    for (Eigen::Index k = 0; k < diff.nonZeros(); ++k)
        asym = std::max(asym, std::abs(diff.valuePtr()[k]));
    if (asym > kSymmetryTol)
        fail(ErrorKind::NotReversible, "symmetrized operator deviates from symmetry by " + std::to_string(asym));
    s = 0.5 * (s + st);
    Eigen::VectorXd u = sqrt_vec(measure);
    double un = u.norm();
    if (!(un > 0.0))
        fail(ErrorKind::InvalidInput, "measure is zero");
    u /= un;
    linalg::Extremes ex = linalg::deflated_extremes(s, u, method);
    SpectralReport r;
    r.dimension = measure.size();
    r.lambda2 = ex.top;
    r.lambda_min = ex.bottom;
    r.lambda_bip = std::max(std::abs(ex.top), std::abs(ex.bottom));
    r.method = ex.iterative ? "iterative" : "dense";
    r.residual = std::max(ex.residual, asym);
    return r;
}

SpectralReport bipartite_from_normalized(const SparseMat& m, const std::vector<double>& left,
                                         const std::vector<double>& right, linalg::Method method)
{
    Eigen::VectorXd u = sqrt_vec(left), v = sqrt_vec(right);
    u.normalize();
    v.normalize();
    double res = 0.0;
    bool iterative = false;
    double s2 = linalg::deflated_top_singular(m, u, v, method, &res, &iterative);
    SpectralReport r;
    r.dimension = left.size() + right.size();
    r.lambda_bip = s2;
    r.lambda2 = s2;
    r.lambda_min = -s2;
    r.method = iterative ? "iterative" : "dense";
    r.residual = res;
    return r;
}

double two_sided(const SpectralReport& r)
{
    return std::max(std::abs(r.lambda2), std::abs(r.lambda_min));
}

double lambda_link_two_sided(const Complex& c, std::optional<double> given)
{
    return given ? *given : link_expansion(c, true).value;
}

double lambda_link_one_sided(const Complex& c, std::optional<double> given)
{
    return given ? *given : link_expansion(c, false).value;
}

}  // namespace

nlohmann::json to_json(const SpectralReport& r)
{
    return {{"lambda2", r.lambda2},   {"lambda_min", r.lambda_min}, {"lambda_bip", r.lambda_bip},
            {"method", r.method},     {"residual", r.residual},     {"dimension", r.dimension}};
}

SparseMat symmetrized(const MarkovOperator& op)
{
    SparseMat s = op.matrix();
    const auto& ps = op.source().measure;
    const auto& pt = op.target().measure;
    for (Eigen::Index r = 0; r < s.outerSize(); ++r) {
        double a = std::sqrt(std::max(0.0, ps[static_cast<std::size_t>(r)]));
        for (SparseMat::InnerIterator it(s, r); it; ++it)
            it.valueRef() *= a * inv_sqrt(pt[static_cast<std::size_t>(it.col())]);
    }
    return s;
}

SpectralReport square_spectrum(const MarkovOperator& op, linalg::Method method)
{
    if (op.rows() != op.cols())
        fail(ErrorKind::InvalidInput, "square_spectrum needs a square operator");
    return square_from_symmetric(symmetrized(op), op.source().measure, method);
}

SpectralReport square_spectrum(const BipartiteGraph& g, linalg::Method method)
{
    if (!g.square || g.n_left() != g.n_right())
        fail(ErrorKind::InvalidInput, "square_spectrum needs a square graph");
    return square_from_symmetric(normalized_joint(g), g.left, method);
}

SpectralReport bipartite_norm(const MarkovOperator& op, linalg::Method method)
{
    double err = op.marginal_error();
    if (err > kMarginalTol)
        fail(ErrorKind::InconsistentMarginals, "target measure differs from the pushed source measure by " +
                                                   std::to_string(err));
    return bipartite_from_normalized(symmetrized(op), op.source().measure, op.target().measure, method);
}

SpectralReport bipartite_norm(const BipartiteGraph& g, linalg::Method method)
{
    return bipartite_from_normalized(normalized_joint(g), g.left, g.right, method);
}

BipartiteGraph link_graph(const Complex& c, std::span<const int> s, std::vector<int>* vertices)
{
    Face sf(s.begin(), s.end());
    std::sort(sf.begin(), sf.end());
    const int k = static_cast<int>(sf.size()) - 1;
    if (k + 2 > c.dim())
        fail(ErrorKind::LevelOutOfRange, "link of a face above level d-2 has no edges");
    if (c.containing_weight(sf) <= 0.0)
        fail(ErrorKind::NotAFace, "link_graph of a non-face " + face_label(sf));
    std::vector<int> local(static_cast<std::size_t>(c.n_vertices()), -1);
    std::vector<int> ids;
    std::vector<std::tuple<int, int, double>> edges;
    if (c.is_complete()) {
        for (int v = 0; v < c.n_vertices(); ++v)
            if (!std::binary_search(sf.begin(), sf.end(), v))
                ids.push_back(v);
        // Every (k+3)-set is a face of a complete complex, all with the same weight.
        const double w = ids.size() >= 2 ? c.containing_weight(face_insert(face_insert(sf, ids[0]), ids[1])) : 0.0;
        for (std::size_t a = 0; a < ids.size(); ++a)
            for (std::size_t b = a + 1; b < ids.size(); ++b)
                edges.emplace_back(static_cast<int>(a), static_cast<int>(b), w);
    } else {
        const LevelIndex& hi = c.level(k + 2);
        for (std::size_t i = 0; i < hi.size(); ++i) {
            auto f = hi.face(i);
            if (!is_subset(sf, f))
                continue;
            Face e = face_difference(f, sf);
            for (int v : e)
                if (local[static_cast<std::size_t>(v)] < 0) {
                    local[static_cast<std::size_t>(v)] = 0;
                }
            edges.emplace_back(e[0], e[1], hi.measure(i));
        }
        for (int v = 0; v < c.n_vertices(); ++v)
            if (local[static_cast<std::size_t>(v)] == 0) {
                local[static_cast<std::size_t>(v)] = static_cast<int>(ids.size());
                ids.push_back(v);
            }
        for (auto& [a, b, w] : edges) {
            a = local[static_cast<std::size_t>(a)];
            b = local[static_cast<std::size_t>(b)];
        }
    }
    std::vector<Triplet> w;
    w.reserve(edges.size() * 2);
    for (auto& [a, b, x] : edges) {
        w.emplace_back(a, b, x);
        w.emplace_back(b, a, x);
    }
    if (vertices)
        *vertices = ids;
    return graph_from_weights(ids.size(), ids.size(), w, true);
}

nlohmann::json to_json(const LinkExpansion& r)
{
    return {{"value", r.value},
            {"two_sided", r.two_sided},
            {"worst_level", r.worst_level},
            {"worst_face", r.worst_face},
            {"links_checked", r.links_checked},
            {"disconnected", r.disconnected},
            {"per_level", r.per_level}};
}

LinkExpansion link_expansion(const Complex& c, bool two_sided_flag)
{
    if (c.dim() < 1)
        fail(ErrorKind::LevelOutOfRange, "link expansion needs d >= 1");
    LinkExpansion out;
    out.two_sided = two_sided_flag;
    out.value = -std::numeric_limits<double>::infinity();

    auto record = [&](int k, std::span<const int> s, const BipartiteGraph& g) {
        SpectralReport r = square_spectrum(g, linalg::Method::Dense);
        double val = two_sided_flag ? two_sided(r) : r.lambda2;
        if (r.lambda2 > kDisconnected && g.n_left() > 1) {
            ++out.disconnected;
            val = std::max(val, 1.0);
        }
        ++out.links_checked;
        double& lvl = out.per_level[static_cast<std::size_t>(k + 1)];
        lvl = std::max(lvl, val);
        if (val > out.value) {
            out.value = val;
            out.worst_level = k;
            out.worst_face.assign(s.begin(), s.end());
        }
    };

    for (int k = -1; k <= c.dim() - 2; ++k) {
        out.per_level.push_back(-std::numeric_limits<double>::infinity());
        const LevelIndex& lev = c.level(k);
        if (c.is_complete()) {
            for (std::size_t i = 0; i < lev.size(); ++i)
                record(k, lev.face(i), link_graph(c, lev.face(i)));
            continue;
        }
        // Bucket the edges of every link by scanning X(k+2) once.
        const LevelIndex& hi = c.level(k + 2);
        std::vector<std::vector<std::tuple<int, int, double>>> buckets(lev.size());
        for (std::size_t i = 0; i < hi.size(); ++i) {
            auto f = hi.face(i);
            const int m = static_cast<int>(f.size());
            for (int a = 0; a < m; ++a)
                for (int b = a + 1; b < m; ++b) {
                    Face s;
                    s.reserve(static_cast<std::size_t>(m - 2));
                    for (int x = 0; x < m; ++x)
                        if (x != a && x != b)
                            s.push_back(f[static_cast<std::size_t>(x)]);
                    long long pos = lev.find(s);
                    buckets[static_cast<std::size_t>(pos)].emplace_back(f[static_cast<std::size_t>(a)],
                                                                        f[static_cast<std::size_t>(b)], hi.measure(i));
                }
        }
        std::vector<int> local(static_cast<std::size_t>(c.n_vertices()), -1);
        for (std::size_t i = 0; i < lev.size(); ++i) {
            auto& edges = buckets[i];
            std::vector<int> ids;
            for (auto& [a, b, w] : edges)
                for (int v : {a, b})
                    if (local[static_cast<std::size_t>(v)] < 0) {
                        local[static_cast<std::size_t>(v)] = static_cast<int>(ids.size());
                        ids.push_back(v);
                    }
            std::vector<Triplet> w;
            w.reserve(edges.size() * 2);
            for (auto& [a, b, x] : edges) {
                int la = local[static_cast<std::size_t>(a)], lb = local[static_cast<std::size_t>(b)];
                w.emplace_back(la, lb, x);
                w.emplace_back(lb, la, x);
            }
            for (int v : ids)
                local[static_cast<std::size_t>(v)] = -1;
            record(k, lev.face(i), graph_from_weights(ids.size(), ids.size(), w, true));
            edges.clear();
            edges.shrink_to_fit();
        }
    }
    if (out.disconnected > 0)
        spdlog::warn("{} disconnected link(s); their expansion counts as 1", out.disconnected);
    return out;
}

nlohmann::json to_json(const BoundCheck& r)
{
    return {{"lhs", finite_or_null(r.lhs)},
            {"rhs", finite_or_null(r.rhs)},
            {"pass", r.pass},
            {"applicable", r.applicable},
            {"details", r.details}};
}

BoundCheck verify_complement_bound(const Complex& c, int l1, int l2, std::optional<double> lambda_link)
{
    MarkovOperator op = complement_walk(c, l1, l2);
    SpectralReport rep = bipartite_norm(op);
    double lam = lambda_link_two_sided(c, lambda_link);
    BoundCheck out;
    out.lhs = rep.lambda_bip;
    out.rhs = static_cast<double>((l1 + 1) * (l2 + 1)) * lam;
    out.pass = out.lhs <= out.rhs + kBoundSlack;
    out.details = {{"lambda_link", lam}, {"l1", l1}, {"l2", l2}, {"spectrum", to_json(rep)}};
    return out;
}

BoundCheck verify_colored_bound(const Complex& c, const std::vector<int>& colors_i, const std::vector<int>& colors_j,
                                std::optional<double> lambda_one_sided)
{
    MarkovOperator op = colored_walk(c, colors_i, colors_j);
    SpectralReport rep = bipartite_norm(op);
    double lp = lambda_link_one_sided(c, lambda_one_sided);
    const double d1 = static_cast<double>(c.dim() + 1);
    BoundCheck out;
    out.lhs = rep.lambda_bip;
    double lam = std::numeric_limits<double>::infinity();
    if (lp < 1.0 / d1)
        lam = std::max(0.0, lp) / (1.0 - d1 * std::max(0.0, lp));
    out.applicable = lam < 0.5;
    out.rhs = static_cast<double>(colors_i.size() * colors_j.size()) * lam;
    out.pass = !out.applicable || out.lhs <= out.rhs + kBoundSlack;
    out.details = {{"lambda_one_sided", lp}, {"lambda", finite_or_null(lam)}, {"spectrum", to_json(rep)}};
    return out;
}

BoundCheck verify_trickling(const Complex& y)
{
    if (!y.has_coloring() || y.dim() != 2)
        fail(ErrorKind::NotPartite, "trickling check needs a 2-dimensional 3-partite complex");
    double l12 = bipartite_norm(colored_walk(y, {0}, {1})).lambda_bip;
    double l13 = bipartite_norm(colored_walk(y, {0}, {2})).lambda_bip;
    double l23 = bipartite_norm(colored_walk(y, {1}, {2})).lambda_bip;

    // Links of color-0 vertices are bipartite graphs between colors 1 and 2.
    const int n = y.n_vertices();
    std::vector<std::vector<std::tuple<int, int, double>>> links(static_cast<std::size_t>(n));
    y.for_each_top([&](std::span<const int> t, double w) {
        int v[3];
        for (int x : t)
            v[y.color(x)] = x;
        links[static_cast<std::size_t>(v[0])].emplace_back(v[1], v[2], w);
    });
    double eta = 0.0;
    std::vector<int> local(static_cast<std::size_t>(n), -1);
    for (int v = 0; v < n; ++v) {
        auto& edges = links[static_cast<std::size_t>(v)];
        if (edges.empty())
            continue;
        std::vector<int> left, right;
        for (auto& [a, b, w] : edges) {
            if (local[static_cast<std::size_t>(a)] < 0) {
                local[static_cast<std::size_t>(a)] = static_cast<int>(left.size());
                left.push_back(a);
            }
            if (local[static_cast<std::size_t>(b)] < 0) {
                local[static_cast<std::size_t>(b)] = static_cast<int>(right.size());
                right.push_back(b);
            }
        }
        std::vector<Triplet> trip;
        for (auto& [a, b, w] : edges)
            trip.emplace_back(local[static_cast<std::size_t>(a)], local[static_cast<std::size_t>(b)], w);
        for (int x : left)
            local[static_cast<std::size_t>(x)] = -1;
        for (int x : right)
            local[static_cast<std::size_t>(x)] = -1;
        eta = std::max(eta, bipartite_norm(graph_from_weights(left.size(), right.size(), trip, false)).lambda_bip);
    }
    BoundCheck out;
    out.lhs = l23;
    out.rhs = eta + l12 * l13;
    out.pass = out.lhs <= out.rhs + kBoundSlack;
    out.details = {{"eta", eta}, {"lambda12", l12}, {"lambda13", l13}, {"lambda23", l23}};
    return out;
}

BoundCheck verify_fixed_union_bound(const Complex& c, int l, int j, std::optional<double> lambda_link)
{
    MarkovOperator a = fixed_union_walk(c, l, j);
    MarkovOperator low = lower_walk(c, l, l - j);
    SparseMat sa = symmetrized(a), sl = symmetrized(low);
    SparseMat diff = 0.5 * (sa + SparseMat(sa.transpose())) - 0.5 * (sl + SparseMat(sl.transpose()));
    linalg::Extremes ex = linalg::extremes(diff);
    double lam = lambda_link_two_sided(c, lambda_link);
    BoundCheck out;
    out.lhs = std::max(std::abs(ex.top), std::abs(ex.bottom));
    out.rhs = static_cast<double>(j * j) * lam;
    out.pass = out.lhs <= out.rhs + kBoundSlack;
    out.details = {{"lambda_link", lam}, {"l", l}, {"j", j}, {"residual", ex.residual}};
    return out;
}

BoundCheck verify_containment(const Complex& c, int k, std::optional<double> lambda_one_sided)
{
    SpectralReport rep = bipartite_norm(containment_operator(c, k + 1, k));
    double lam = lambda_link_one_sided(c, lambda_one_sided);
    double main = std::sqrt(static_cast<double>(k + 1) / static_cast<double>(k + 2));
    BoundCheck out;
    out.lhs = rep.lambda_bip;
    out.rhs = main + 10.0 * k * std::max(lam, 0.0);
    out.pass = out.lhs <= out.rhs + kBoundSlack;
    out.details = {{"sqrt_term", main}, {"lambda_one_sided", lam}, {"heuristic", true}};
    return out;
}

nlohmann::json to_json(const MixingReport& r)
{
    return {{"measured", r.measured},   {"predicted", r.predicted}, {"multinomial", r.multinomial},
            {"deviation", r.deviation}, {"lambda", r.lambda},       {"bound_rhs", r.bound_rhs},
            {"constant", r.constant}};
}

namespace {

struct FaceSet {
    std::unordered_set<std::uint64_t> hashes;
    std::vector<Face> faces;

    bool contains(const Face& f) const
    {
        if (!hashes.count(hash_face(f)))
            return false;
        return std::binary_search(faces.begin(), faces.end(), f);
    }
};

FaceSet make_face_set(std::vector<Face> faces)
{
    FaceSet fs;
    for (auto& f : faces)
        std::sort(f.begin(), f.end());
    std::sort(faces.begin(), faces.end());
    faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
    for (const auto& f : faces)
        fs.hashes.insert(hash_face(f));
    fs.faces = std::move(faces);
    return fs;
}

void finish_mixing(MixingReport& r, const std::vector<double>& probs)
{
    r.deviation = std::abs(r.measured - r.multinomial * r.predicted);
    double gm = 1.0;
    for (double p : probs)
        gm *= p;
    gm = std::pow(gm, 1.0 / static_cast<double>(probs.size()));
    r.bound_rhs = r.lambda * gm;
    r.constant = r.bound_rhs > 0.0 ? r.deviation / r.bound_rhs : 0.0;
}

}  // namespace

MixingReport mixing_check(const Complex& c, const std::vector<MixingSet>& sets, std::optional<double> lambda)
{
    if (sets.empty())
        fail(ErrorKind::HypothesisViolated, "mixing check needs at least one set");
    const int n = c.n_vertices();
    std::vector<int> owner(static_cast<std::size_t>(n), -1);
    std::vector<FaceSet> fsets;
    std::vector<double> probs;
    int total = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto& st = sets[i];
        if (st.dim < 0 || st.dim > c.dim())
            fail(ErrorKind::HypothesisViolated, "set dimension outside [0, d]");
        total += st.dim + 1;
        FaceSet fs = make_face_set(st.faces);
        double p = 0.0;
        for (const auto& f : fs.faces) {
            if (static_cast<int>(f.size()) != st.dim + 1)
                fail(ErrorKind::HypothesisViolated, "face " + face_label(f) + " has the wrong dimension");
            for (int v : f) {
                if (v < 0 || v >= n)
                    fail(ErrorKind::HypothesisViolated, "vertex out of range");
                int& o = owner[static_cast<std::size_t>(v)];
                if (o >= 0 && o != static_cast<int>(i))
                    fail(ErrorKind::HypothesisViolated, "faces of different sets share vertex " + std::to_string(v));
                o = static_cast<int>(i);
            }
            p += c.measure(f);
        }
        probs.push_back(p);
        fsets.push_back(std::move(fs));
    }
    const int k = total - 1;
    if (k > c.dim())
        fail(ErrorKind::HypothesisViolated, "sum of set sizes exceeds d+1");

    MixingReport r;
    r.lambda = lambda_link_two_sided(c, lambda);
    r.predicted = 1.0;
    for (double p : probs)
        r.predicted *= p;
    double mult = std::tgamma(static_cast<double>(k + 2));
    for (const auto& st : sets)
        mult /= std::tgamma(static_cast<double>(st.dim + 2));
    r.multinomial = std::round(mult);

    const LevelIndex& lev = c.level(k);
    std::vector<Face> parts(sets.size());
    for (std::size_t i = 0; i < lev.size(); ++i) {
        auto f = lev.face(i);
        for (auto& p : parts)
            p.clear();
        bool ok = true;
        for (int v : f) {
            int o = owner[static_cast<std::size_t>(v)];
            if (o < 0) {
                ok = false;
                break;
            }
            parts[static_cast<std::size_t>(o)].push_back(v);
        }
        for (std::size_t s = 0; ok && s < sets.size(); ++s)
            ok = static_cast<int>(parts[s].size()) == sets[s].dim + 1 && fsets[s].contains(parts[s]);
        if (ok)
            r.measured += lev.measure(i);
    }
    finish_mixing(r, probs);
    return r;
}

MixingReport partite_mixing_check(const Complex& c, const std::vector<ColoredSet>& sets, std::optional<double> lambda)
{
    if (!c.has_coloring())
        fail(ErrorKind::NotPartite, "partite mixing check needs a coloring");
    if (sets.empty())
        fail(ErrorKind::HypothesisViolated, "mixing check needs at least one set");
    std::uint64_t all = 0;
    std::vector<std::uint64_t> masks;
    std::vector<FaceSet> fsets;
    std::vector<double> probs;
    std::vector<int> all_colors;
    for (const auto& st : sets) {
        std::uint64_t m = color_set_mask(st.colors);
        if (m == 0 || (all & m))
            fail(ErrorKind::HypothesisViolated, "color sets must be nonempty and pairwise disjoint");
        all |= m;
        masks.push_back(m);
        all_colors.insert(all_colors.end(), st.colors.begin(), st.colors.end());
        FaceSet fs = make_face_set(st.faces);
        double p = 0.0;
        for (const auto& f : fs.faces) {
            if (c.color_mask(f) != m || static_cast<int>(f.size()) != static_cast<int>(st.colors.size()))
                fail(ErrorKind::HypothesisViolated, "face " + face_label(f) + " does not have the set's colors");
            p += c.measure(f);
        }
        const LevelIndex& lev = c.level(static_cast<int>(st.colors.size()) - 1);
        double level_mass = 0.0;
        for (std::size_t idx : colored_level(c, st.colors))
            level_mass += lev.measure(idx);
        if (!(level_mass > 0.0))
            fail(ErrorKind::HypothesisViolated, "empty colored level");
        probs.push_back(p / level_mass);
        fsets.push_back(std::move(fs));
    }
    std::sort(all_colors.begin(), all_colors.end());

    MixingReport r;
    r.lambda = lambda_link_one_sided(c, lambda);
    r.predicted = 1.0;
    for (double p : probs)
        r.predicted *= p;
    r.multinomial = 1.0;

    const LevelIndex& lev = c.level(static_cast<int>(all_colors.size()) - 1);
    double mass = 0.0, hit = 0.0;
    for (std::size_t idx : colored_level(c, all_colors)) {
        auto f = lev.face(idx);
        mass += lev.measure(idx);
        bool ok = true;
        for (std::size_t s = 0; ok && s < sets.size(); ++s) {
            Face part;
            for (int v : f)
                if (masks[s] >> c.color(v) & 1)
                    part.push_back(v);
            ok = fsets[s].contains(part);
        }
        if (ok)
            hit += lev.measure(idx);
    }
    r.measured = mass > 0.0 ? hit / mass : 0.0;
    finish_mixing(r, probs);
    return r;
}

BoundCheck sampler_check(const BipartiteGraph& g, const std::vector<std::size_t>& s_right, double c,
                         std::optional<double> lambda)
{
    if (!(c > 0.0))
        fail(ErrorKind::ParameterRange, "sampler threshold must be positive");
    std::vector<char> in_s(g.n_right(), 0);
    double pr_s = 0.0;
    for (std::size_t w : s_right) {
        if (w >= g.n_right())
            fail(ErrorKind::InvalidInput, "sampler set vertex out of range");
        if (!in_s[w]) {
            in_s[w] = 1;
            pr_s += g.right[w];
        }
    }
    double lam = lambda ? *lambda : bipartite_norm(g).lambda_bip;
    std::vector<double> hit(g.n_left(), 0.0);
    for (Eigen::Index r = 0; r < g.joint.outerSize(); ++r)
        for (SparseMat::InnerIterator it(g.joint, r); it; ++it)
            if (in_s[static_cast<std::size_t>(it.col())])
                hit[static_cast<std::size_t>(r)] += it.value();
    double pr_t = 0.0;
    std::size_t count_t = 0;
    for (std::size_t v = 0; v < g.n_left(); ++v) {
        if (!(g.left[v] > 0.0))
            continue;
        if (std::abs(hit[v] / g.left[v] - pr_s) > c) {
            pr_t += g.left[v];
            ++count_t;
        }
    }
    BoundCheck out;
    out.lhs = pr_t;
    out.rhs = lam * lam / (c * c) * pr_s;
    out.pass = out.lhs <= out.rhs + kBoundSlack;
    out.details = {{"lambda", lam}, {"pr_s", pr_s}, {"c", c}, {"t_size", count_t}};
    return out;
}

BoundCheck almost_cut_check(const BipartiteGraph& g, const std::vector<int>& labels, std::optional<double> lambda)
{
    const std::size_t nl = g.n_left(), nr = g.n_right();
    const bool square = g.square;
    const std::size_t nv = square ? nl : nl + nr;
    if (labels.size() != nv)
        fail(ErrorKind::InvalidInput, "almost-cut labels must cover every vertex");
    for (int x : labels)
        if (x < 0 || x > 2)
            fail(ErrorKind::InvalidInput, "almost-cut labels must be 0 (A), 1 (B) or 2 (C)");
    auto label_right = [&](std::size_t w) { return labels[square ? w : nl + w]; };

    double pa = 0.0, pb = 0.0, pc = 0.0;
    auto add = [&](int lab, double p) { (lab == 0 ? pa : lab == 1 ? pb : pc) += p; };
    const double side = square ? 1.0 : 0.5;
    for (std::size_t v = 0; v < nl; ++v)
        add(labels[v], side * g.left[v]);
    if (!square)
        for (std::size_t w = 0; w < nr; ++w)
            add(labels[nl + w], side * g.right[w]);
    if (pa > pb + 1e-15)
        fail(ErrorKind::OrderingViolated, "almost-cut check needs Pr[A] <= Pr[B]");

    double e_ab = 0.0;
    for (Eigen::Index r = 0; r < g.joint.outerSize(); ++r)
        for (SparseMat::InnerIterator it(g.joint, r); it; ++it) {
            int lu = labels[static_cast<std::size_t>(r)];
            int lv = label_right(static_cast<std::size_t>(it.col()));
            if (square ? (lu == 0 && lv == 1) : ((lu == 0 && lv == 1) || (lu == 1 && lv == 0)))
                e_ab += it.value();
        }

    BoundCheck out;
    out.lhs = pa;
    double lam;
    if (square) {
        lam = lambda ? *lambda : square_spectrum(g).lambda_bip;
        out.rhs = pb > 0.0 && lam < 1.0 ? (e_ab + lam * pc) / ((1.0 - lam) * pb)
                                        : std::numeric_limits<double>::infinity();
    } else {
        lam = lambda ? *lambda : bipartite_norm(g).lambda_bip;
        out.applicable = lam < 0.5;
        out.rhs = pb > 0.0 && out.applicable ? (e_ab + 4.0 * lam * pc) / (2.0 * (1.0 - 2.0 * lam) * pb)
                                             : std::numeric_limits<double>::infinity();
    }
    out.pass = !out.applicable || out.lhs <= out.rhs + kBoundSlack;
    out.details = {{"lambda", lam}, {"pr_a", pa}, {"pr_b", pb}, {"pr_c", pc}, {"pr_e_ab", e_ab}, {"square", square}};
    return out;
}

nlohmann::json to_json(const EdgeExpansion& r)
{
    return {{"phi", r.phi},
            {"lambda2", r.lambda2},
            {"cheeger_lower", r.cheeger_lower},
            {"cheeger_upper", r.cheeger_upper},
            {"sandwich_holds", r.sandwich_holds},
            {"witness", r.witness}};
}

EdgeExpansion cheeger_bounds(const BipartiteGraph& g)
{
    EdgeExpansion out;
    out.lambda2 = square_spectrum(g, linalg::Method::Dense).lambda2;
    double gap = std::max(0.0, 1.0 - out.lambda2);
    out.cheeger_lower = gap / 2.0;
    out.cheeger_upper = std::sqrt(2.0 * gap);
    out.phi = std::numeric_limits<double>::quiet_NaN();
    return out;
}

EdgeExpansion edge_expansion_exact(const BipartiteGraph& g)
{
    if (!g.square)
        fail(ErrorKind::InvalidInput, "edge expansion needs a square graph");
    const std::size_t n = g.n_left();
    if (n > kEdgeExpansionMaxVertices)
        fail(ErrorKind::TooLarge, "edge expansion brute force is limited to 24 vertices");
    EdgeExpansion out = cheeger_bounds(g);
    Eigen::MatrixXd j = Eigen::MatrixXd(g.joint);
    const std::vector<double>& pi = g.left;

    // Gray-code walk over subsets; inner[v] = joint mass between v and S.
    std::vector<double> inner(n, 0.0);
    std::vector<char> in(n, 0);
    double cut = 0.0, mass = 0.0;
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0, mask = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t step = 1; step < total; ++step) {
        const int x = __builtin_ctzll(step);
        const std::size_t xs = static_cast<std::size_t>(x);
        const double self = j(x, x);
        if (!in[xs]) {
            cut += (pi[xs] - self - inner[xs]) - inner[xs];
            mass += pi[xs];
            in[xs] = 1;
            mask |= 1u << x;
            for (std::size_t v = 0; v < n; ++v)
                inner[v] += j(static_cast<Eigen::Index>(v), x);
        } else {
            for (std::size_t v = 0; v < n; ++v)
                inner[v] -= j(static_cast<Eigen::Index>(v), x);
            cut -= (pi[xs] - self - inner[xs]) - inner[xs];
            mass -= pi[xs];
            in[xs] = 0;
            mask &= ~(1u << x);
        }
        if (mass > 1e-15 && mass <= 0.5 + 1e-12) {
            double ratio = std::max(0.0, cut) / mass;
            if (ratio < best) {
                best = ratio;
                best_mask = mask;
            }
        }
    }
    out.phi = std::isfinite(best) ? best : 0.0;
    for (std::size_t v = 0; v < n; ++v)
        if (best_mask >> v & 1)
            out.witness.push_back(v);
    out.sandwich_holds = out.cheeger_lower <= out.phi + kBoundSlack && out.phi <= out.cheeger_upper + kBoundSlack;
    return out;
}

BoundCheck partition_property_check(const BipartiteGraph& g, const std::vector<int>& parts, double c)
{
    if (!g.square)
        fail(ErrorKind::InvalidInput, "partition property needs a square graph");
    if (parts.size() != g.n_left())
        fail(ErrorKind::InvalidInput, "partition must label every vertex");
    int np = 0;
    for (int p : parts) {
        if (p < 0)
            fail(ErrorKind::InvalidInput, "partition labels must be nonnegative");
        np = std::max(np, p + 1);
    }
    std::vector<double> mass(static_cast<std::size_t>(np), 0.0);
    for (std::size_t v = 0; v < parts.size(); ++v)
        mass[static_cast<std::size_t>(parts[v])] += g.left[v];
    double cross = 0.0;
    for (Eigen::Index r = 0; r < g.joint.outerSize(); ++r)
        for (SparseMat::InnerIterator it(g.joint, r); it; ++it)
            if (parts[static_cast<std::size_t>(r)] != parts[static_cast<std::size_t>(it.col())])
                cross += it.value();
    const double largest = np > 0 ? *std::max_element(mass.begin(), mass.end()) : 0.0;
    BoundCheck out;
    out.lhs = 0.5 * cross;
    out.rhs = 0.5 * c;
    out.applicable = out.lhs < out.rhs;
    out.pass = !out.applicable || largest >= 0.5 - 1e-12;
    out.details = {{"largest_part", largest}, {"parts", np}, {"c", c}};
    return out;
}

}  // namespace hdx
