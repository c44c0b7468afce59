#include "hdx/stav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <random>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "hdx/error.hpp"

namespace hdx {

namespace {

/** Mixed-radix packing of index tuples into one 64-bit key. */
class KeyPacker {
public:
    explicit KeyPacker(std::vector<std::size_t> radix) : radix_(std::move(radix))
    {
        double prod = 1.0;
        for (auto r : radix_)
            prod *= static_cast<double>(std::max<std::size_t>(r, 1));
        if (prod > 9.0e18)
            fail(ErrorKind::SizeCap, "index space too large for table keys");
    }

    template <class... I>
    std::uint64_t operator()(I... idx) const
    {
        const std::array<std::size_t, sizeof...(I)> v{static_cast<std::size_t>(idx)...};
        std::uint64_t k = 0;
        for (std::size_t i = 0; i < v.size(); ++i)
            k = k * std::max<std::size_t>(radix_[i], 1) + v[i];
        return k;
    }

private:
    std::vector<std::size_t> radix_;
};

using Table = std::unordered_map<std::uint64_t, double>;

double max_table_diff(const Table& x, const Table& y)
{
    double err = 0.0;
    for (const auto& [k, p] : x) {
        auto it = y.find(k);
        err = std::max(err, std::abs(p - (it == y.end() ? 0.0 : it->second)));
    }
    for (const auto& [k, p] : y)
        if (!x.count(k))
            err = std::max(err, std::abs(p));
    return err;
}

/** Dense renumbering of the ids that occur, in increasing id order. */
class Compressor {
public:
    explicit Compressor(std::size_t universe) : map_(universe, -1) {}
    void add(std::size_t id) { map_.at(id) = 0; }
    void finish()
    {
        int next = 0;
        for (std::size_t i = 0; i < map_.size(); ++i)
            if (map_[i] >= 0) {
                map_[i] = next++;
                ids_.push_back(i);
            }
    }
    int operator[](std::size_t id) const { return map_[id]; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::size_t>& ids() const { return ids_; }

private:
    std::vector<int> map_;
    std::vector<std::size_t> ids_;
};

std::vector<std::string> layer_labels(const SetLayer& layer, const std::vector<std::size_t>& ids)
{
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (auto i : ids)
        out.push_back(layer.label(i));
    return out;
}

std::vector<std::string> vertex_labels(const std::vector<std::size_t>& ids)
{
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (auto i : ids)
        out.push_back(std::to_string(i));
    return out;
}

void require_tables(const StavInstance& x)
{
    if (!x.materialized)
        fail(ErrorKind::SizeCap, "STAV tables were not materialized; only the reduced route is available");
}

bool contains_id(const Face& f, std::size_t v)
{
    return std::binary_search(f.begin(), f.end(), static_cast<int>(v));
}

}  // namespace

std::string SetLayer::label(std::size_t i) const
{
    if (i < labels.size() && !labels[i].empty())
        return labels[i];
    return face_label(content.at(i));
}

std::size_t StsDistribution::support_size() const
{
    if (!independent)
        return entries.size();
    std::size_t n = 0;
    for (std::size_t t = 0; t < t_to_s.size(); ++t)
        if (t_prob[t] > 0.0)
            n += t_to_s[t].size() * t_to_s[t].size();
    return n;
}

void StsDistribution::for_each(const std::function<void(std::size_t, std::size_t, std::size_t, double)>& fn) const
{
    if (!independent) {
        for (const auto& e : entries)
            fn(e.s1, e.t, e.s2, e.p);
        return;
    }
    for (std::size_t t = 0; t < t_to_s.size(); ++t) {
        if (!(t_prob[t] > 0.0))
            continue;
        for (const auto& [s1, p1] : t_to_s[t])
            for (const auto& [s2, p2] : t_to_s[t])
                fn(s1, t, s2, t_prob[t] * p1 * p2);
    }
}

std::vector<StsEntry> StsDistribution::table() const
{
    check_size_cap(static_cast<double>(support_size()), kStavTableCap, "STS table");
    std::vector<StsEntry> out;
    out.reserve(support_size());
    for_each([&](std::size_t s1, std::size_t t, std::size_t s2, double p) { out.push_back({s1, t, s2, p}); });
    return out;
}

const char* to_string(StavKind kind)
{
    switch (kind) {
    case StavKind::Hdx: return "hdx";
    case StavKind::PartiteIJ: return "partite_ij";
    case StavKind::Neighborhood: return "neighborhood";
    case StavKind::Grassmann: return "grassmann";
    case StavKind::Custom: return "custom";
    }
    return "custom";
}

const char* to_string(StavGraphKind kind)
{
    switch (kind) {
    case StavGraphKind::Reach: return "reach";
    case StavGraphKind::LocalReach: return "local_reach";
    case StavGraphKind::StsA: return "sts_a";
    case StavGraphKind::StsAV: return "sts_av";
    case StavGraphKind::VasaV: return "vasa_v";
    case StavGraphKind::VasA: return "vas_a";
    case StavGraphKind::TLower: return "t_lower";
    }
    return "reach";
}

StavMarginals compute_marginals(const StavInstance& x)
{
    require_tables(x);
    StavMarginals m;
    const std::size_t ns = x.S->size(), nt = x.T->size(), na = x.A->size(), nv = x.n_vertices;
    m.t_prob.assign(nt, 0.0);
    m.t_to_s.assign(nt, {});
    for (std::size_t s = 0; s < ns; ++s)
        for (const auto& [t, p] : x.s_to_t[s]) {
            const double w = x.s_prob[s] * p;
            m.t_prob[t] += w;
            m.t_to_s[t].emplace_back(s, w);
        }
    for (std::size_t t = 0; t < nt; ++t)
        for (auto& e : m.t_to_s[t])
            e.second /= m.t_prob[t];

    m.t_to_a.assign(nt, {});
    m.a_prob.assign(na, 0.0);
    m.v_prob.assign(nv, 0.0);
    Table av;
    const KeyPacker key({na, nv});
    for (std::size_t t = 0; t < nt; ++t) {
        std::map<std::size_t, double> pa;
        for (const auto& e : x.t_to_av[t]) {
            pa[e.a] += e.p;
            const double w = m.t_prob[t] * e.p;
            m.a_prob[e.a] += w;
            m.v_prob[e.v] += w;
            av[key(e.a, e.v)] += w;
        }
        for (const auto& [a, p] : pa)
            m.t_to_a[t].emplace_back(a, p);
    }
    m.a_reach.assign(na, {});
    m.v_reach.assign(nv, {});
    for (const auto& [k, p] : av) {
        const std::size_t a = k / std::max<std::size_t>(nv, 1), v = k % std::max<std::size_t>(nv, 1);
        if (p > 0.0) {
            m.a_reach[a].emplace_back(v, p);
            m.v_reach[v].emplace_back(a, p);
        }
    }
    for (auto& r : m.a_reach)
        std::sort(r.begin(), r.end());
    for (auto& r : m.v_reach)
        std::sort(r.begin(), r.end());
    return m;
}

nlohmann::json to_json(const StavValidation& r)
{
    return {{"route", r.route},
            {"v_marginal_error", r.v_marginal_error},
            {"factorization_error", r.factorization_error},
            {"sts_symmetry_error", r.sts_symmetry_error},
            {"sts_marginal_error", r.sts_marginal_error},
            {"vasa_symmetry_error", r.vasa_symmetry_error},
            {"vasa_marginal_error", r.vasa_marginal_error},
            {"min_probability", r.min_probability},
            {"v_uniform", r.v_uniform},
            {"conditional_independence", r.conditional_independence},
            {"sts_ok", r.sts_ok},
            {"vasa_ok", r.vasa_ok},
            {"positive", r.positive},
            {"pass", r.pass}};
}

StavValidation validate(const StavInstance& x, double tol, bool reduced_route)
{
    if (!x.materialized || reduced_route) {
        if (!x.model)
            fail(ErrorKind::SizeCap, "no reduced route for this STAV instance");
        return detail::hdx_reduced_validate(*x.model, tol);
    }
    StavValidation r;
    const StavMarginals m = compute_marginals(x);
    const std::size_t ns = x.S->size(), nt = x.T->size(), na = x.A->size(), nv = x.n_vertices;

    auto in_ground = [&](std::size_t v) { return x.ground.empty() || x.ground[v]; };
    std::size_t n_ground = 0;
    for (std::size_t v = 0; v < nv; ++v)
        n_ground += in_ground(v) ? 1 : 0;
    const double uniform = n_ground ? 1.0 / static_cast<double>(n_ground) : 0.0;
    for (std::size_t v = 0; v < nv; ++v)
        r.v_marginal_error = std::max(r.v_marginal_error, std::abs(m.v_prob[v] - (in_ground(v) ? uniform : 0.0)));
    r.v_uniform = r.v_marginal_error <= tol;

    r.factorization_error = x.factorization_error;
    r.conditional_independence = r.factorization_error <= tol;

    // d_stav (s, t) marginal against both (s_i, t) marginals of the STS.
    const KeyPacker st({ns, nt});
    Table dst;
    for (std::size_t s = 0; s < ns; ++s)
        for (const auto& [t, p] : x.s_to_t[s])
            dst[st(s, t)] += x.s_prob[s] * p;
    Table m1, m2, sym;
    const KeyPacker sts_key({ns, nt, ns});
    if (x.sts.independent) {
        for (std::size_t t = 0; t < x.sts.t_to_s.size(); ++t) {
            double mass = 0.0;
            for (const auto& e : x.sts.t_to_s[t])
                mass += e.second;
            for (const auto& [s, p] : x.sts.t_to_s[t]) {
                m1[st(s, t)] += x.sts.t_prob[t] * p * mass;
                m2[st(s, t)] += x.sts.t_prob[t] * p * mass;
            }
        }
    } else {
        for (const auto& e : x.sts.entries) {
            m1[st(e.s1, e.t)] += e.p;
            m2[st(e.s2, e.t)] += e.p;
            sym[sts_key(e.s1, e.t, e.s2)] += e.p;
        }
        Table flipped;
        for (const auto& e : x.sts.entries)
            flipped[sts_key(e.s2, e.t, e.s1)] += e.p;
        r.sts_symmetry_error = max_table_diff(sym, flipped);
    }
    r.sts_marginal_error = std::max(max_table_diff(dst, m1), max_table_diff(dst, m2));
    r.sts_ok = r.sts_symmetry_error <= tol && r.sts_marginal_error <= tol;

    if (x.has_vasa) {
        const KeyPacker vas({nv, na, ns});
        Table dvas, vm1, vm2;
        for (std::size_t s = 0; s < ns; ++s)
            for (const auto& [t, p] : x.s_to_t[s])
                for (const auto& e : x.t_to_av[t])
                    dvas[vas(e.v, e.a, s)] += x.s_prob[s] * p * e.p;
        const KeyPacker quad({nv, na, ns, na});
        Table q1, q2;
        for (const auto& e : x.vasa) {
            vm1[vas(e.v, e.a1, e.s)] += e.p;
            vm2[vas(e.v, e.a2, e.s)] += e.p;
            q1[quad(e.v, e.a1, e.s, e.a2)] += e.p;
            q2[quad(e.v, e.a2, e.s, e.a1)] += e.p;
        }
        r.vasa_symmetry_error = max_table_diff(q1, q2);
        r.vasa_marginal_error = std::max(max_table_diff(dvas, vm1), max_table_diff(dvas, vm2));
        r.vasa_ok = r.vasa_symmetry_error <= tol && r.vasa_marginal_error <= tol;
    } else {
        r.vasa_symmetry_error = r.vasa_marginal_error = std::numeric_limits<double>::infinity();
        r.vasa_ok = false;
    }

    double mn = std::numeric_limits<double>::infinity();
    for (double p : x.s_prob)
        mn = std::min(mn, p);
    for (double p : m.t_prob)
        mn = std::min(mn, p);
    for (double p : m.a_prob)
        mn = std::min(mn, p);
    for (std::size_t v = 0; v < nv; ++v)
        if (in_ground(v))
            mn = std::min(mn, m.v_prob[v]);
    r.min_probability = std::isfinite(mn) ? mn : 0.0;
    r.positive = r.min_probability > 0.0;
    r.pass = r.v_uniform && r.conditional_independence && r.sts_ok && r.vasa_ok && r.positive;
    return r;
}

StavGraph derive_graph(const StavInstance& x, const StavGraphQuery& q)
{
    return derive_graph(x, compute_marginals(x), q);
}

StavGraph derive_graph(const StavInstance& x, const StavMarginals& m, const StavGraphQuery& q)
{
    require_tables(x);
    const std::size_t ns = x.S->size(), nt = x.T->size(), na = x.A->size(), nv = x.n_vertices;
    auto check_index = [](std::size_t i, std::size_t n, const char* what) {
        if (i >= n)
            fail(ErrorKind::InvalidInput, std::string(what) + " index out of range");
    };
    StavGraph out;
    std::vector<Triplet> w;

    switch (q.kind) {
    case StavGraphKind::Reach: {
        Compressor ca(na), cv(nv);
        for (std::size_t a = 0; a < na; ++a)
            for (const auto& [v, p] : m.a_reach[a]) {
                ca.add(a);
                cv.add(v);
            }
        ca.finish();
        cv.finish();
        for (std::size_t a = 0; a < na; ++a)
            for (const auto& [v, p] : m.a_reach[a])
                w.emplace_back(ca[a], cv[v], p);
        if (w.empty())
            fail(ErrorKind::ZeroConditioning, "reach graph is empty");
        out.graph = graph_from_weights(ca.size(), cv.size(), w, false);
        out.left = layer_labels(*x.A, ca.ids());
        out.right = vertex_labels(cv.ids());
        return out;
    }
    case StavGraphKind::LocalReach: {
        check_index(q.s, ns, "s");
        if (!(x.s_prob[q.s] > 0.0))
            fail(ErrorKind::ZeroConditioning, "s has zero probability");
        std::map<std::pair<std::size_t, std::size_t>, double> pav;
        for (const auto& [t, p] : x.s_to_t[q.s])
            for (const auto& e : x.t_to_av[t])
                pav[{e.a, e.v}] += p * e.p;
        Compressor ca(na), cv(nv);
        for (const auto& [k, p] : pav) {
            ca.add(k.first);
            cv.add(k.second);
        }
        ca.finish();
        cv.finish();
        for (const auto& [k, p] : pav)
            w.emplace_back(ca[k.first], cv[k.second], p);
        out.graph = graph_from_weights(ca.size(), cv.size(), w, false);
        out.left = layer_labels(*x.A, ca.ids());
        out.right = vertex_labels(cv.ids());
        return out;
    }
    case StavGraphKind::StsA:
    case StavGraphKind::StsAV: {
        check_index(q.a, na, "a");
        const bool with_v = q.kind == StavGraphKind::StsAV;
        if (with_v)
            check_index(q.v, nv, "v");
        std::vector<char> use_t(nt, 0);
        for (std::size_t t = 0; t < nt; ++t)
            for (const auto& e : x.t_to_av[t])
                if (e.a == q.a && e.p > 0.0 && (!with_v || e.v == q.v))
                    use_t[t] = 1;
        std::map<std::pair<std::size_t, std::size_t>, double> pss;
        x.sts.for_each([&](std::size_t s1, std::size_t t, std::size_t s2, double p) {
            if (use_t[t] && p > 0.0)
                pss[{s1, s2}] += p;
        });
        if (pss.empty())
            fail(ErrorKind::ZeroConditioning, "conditioning event has zero probability");
        Compressor cs(ns);
        for (const auto& [k, p] : pss) {
            cs.add(k.first);
            cs.add(k.second);
        }
        cs.finish();
        for (const auto& [k, p] : pss)
            w.emplace_back(cs[k.first], cs[k.second], p);
        out.graph = graph_from_weights(cs.size(), cs.size(), w, true);
        out.left = out.right = layer_labels(*x.S, cs.ids());
        return out;
    }
    case StavGraphKind::VasaV: {
        check_index(q.v, nv, "v");
        std::map<std::pair<std::size_t, std::size_t>, double> paa;
        for (const auto& e : x.vasa)
            if (e.v == q.v && e.p > 0.0)
                paa[{e.a1, e.a2}] += e.p;
        if (paa.empty())
            fail(ErrorKind::ZeroConditioning, "v does not occur in the VASA distribution");
        Compressor ca(na);
        for (const auto& [k, p] : paa) {
            ca.add(k.first);
            ca.add(k.second);
        }
        ca.finish();
        for (const auto& [k, p] : paa)
            w.emplace_back(ca[k.first], ca[k.second], p);
        out.graph = graph_from_weights(ca.size(), ca.size(), w, true);
        out.left = out.right = layer_labels(*x.A, ca.ids());
        return out;
    }
    case StavGraphKind::VasA: {
        check_index(q.a, na, "a");
        std::map<std::pair<std::size_t, std::size_t>, int> right;
        std::vector<std::tuple<std::size_t, int, double>> edges;
        Compressor cv(nv);
        for (const auto& e : x.vasa) {
            if (e.a1 != q.a || !(e.p > 0.0))
                continue;
            auto [it, fresh] = right.emplace(std::make_pair(e.a2, e.s), static_cast<int>(right.size()));
            (void)fresh;
            edges.emplace_back(e.v, it->second, e.p);
            cv.add(e.v);
        }
        if (edges.empty())
            fail(ErrorKind::ZeroConditioning, "a does not occur in the VASA distribution");
        cv.finish();
        for (const auto& [v, rid, p] : edges)
            w.emplace_back(cv[v], rid, p);
        out.graph = graph_from_weights(cv.size(), right.size(), w, false);
        out.left = vertex_labels(cv.ids());
        out.right.resize(right.size());
        for (const auto& [k, id] : right)
            out.right[static_cast<std::size_t>(id)] = x.A->label(k.first) + "@" + x.S->label(k.second);
        return out;
    }
    case StavGraphKind::TLower: {
        check_index(q.t, nt, "t");
        if (!(m.t_prob[q.t] > 0.0))
            fail(ErrorKind::ZeroConditioning, "t has zero probability");
        const Face& tc = x.T->content[q.t];
        Compressor ca(na);
        for (const auto& [a, p] : m.t_to_a[q.t])
            ca.add(a);
        ca.finish();
        for (const auto& [a, p] : m.t_to_a[q.t]) {
            const Face& ac = x.A->content[a];
            if (ac.empty())
                continue;
            for (int v : ac) {
                auto pos = std::lower_bound(tc.begin(), tc.end(), v);
                if (pos == tc.end() || *pos != v)
                    fail(ErrorKind::InvalidInput, "element of A is not inside t");
                w.emplace_back(static_cast<int>(pos - tc.begin()), ca[a], p / static_cast<double>(ac.size()));
            }
        }
        if (w.empty())
            fail(ErrorKind::ZeroConditioning, "T-lower graph is empty");
        out.graph = graph_from_weights(tc.size(), ca.size(), w, false);
        std::vector<std::size_t> tv(tc.begin(), tc.end());
        out.left = vertex_labels(tv);
        out.right = layer_labels(*x.A, ca.ids());
        return out;
    }
    }
    fail(ErrorKind::InvalidInput, "unknown graph kind");
}

StavGraph sts_t_graph(const StsDistribution& d, std::size_t t)
{
    if (t >= d.faces->size())
        fail(ErrorKind::InvalidInput, "t index out of range");
    std::map<std::pair<std::size_t, std::size_t>, double> pss;
    if (d.independent) {
        for (const auto& [s1, p1] : d.t_to_s[t])
            for (const auto& [s2, p2] : d.t_to_s[t])
                pss[{s1, s2}] += p1 * p2;
    } else {
        for (const auto& e : d.entries)
            if (e.t == t && e.p > 0.0)
                pss[{e.s1, e.s2}] += e.p;
    }
    if (pss.empty())
        fail(ErrorKind::ZeroConditioning, "t has zero probability");
    Compressor cs(d.sets->size());
    for (const auto& [k, p] : pss) {
        cs.add(k.first);
        cs.add(k.second);
    }
    cs.finish();
    std::vector<Triplet> w;
    for (const auto& [k, p] : pss)
        w.emplace_back(cs[k.first], cs[k.second], p);
    StavGraph out;
    out.graph = graph_from_weights(cs.size(), cs.size(), w, true);
    out.left = out.right = layer_labels(*d.sets, cs.ids());
    return out;
}

double sampler_parameter(double lambda)
{
    return 27.0 * lambda * lambda / 8.0;
}

std::size_t sampler_spot_check(const BipartiteGraph& g, double delta, std::size_t trials, std::uint64_t seed,
                               std::size_t* performed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t nl = g.n_left(), nr = g.n_right();
    std::size_t violations = 0, done = 0;
    std::vector<char> in(nr);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        double mass = 0.0;
        for (int attempt = 0; attempt < 20 && mass < delta; ++attempt) {
            const double rate = unif(rng);
            mass = 0.0;
            for (std::size_t j = 0; j < nr; ++j) {
                in[j] = unif(rng) < rate;
                if (in[j])
                    mass += g.right[j];
            }
        }
        if (mass < delta)
            continue;
        ++done;
        double t_mass = 0.0;
        for (std::size_t i = 0; i < nl; ++i) {
            if (!(g.left[i] > 0.0))
                continue;
            double hit = 0.0;
            for (SparseMat::InnerIterator it(g.joint, static_cast<Eigen::Index>(i)); it; ++it)
                if (in[static_cast<std::size_t>(it.col())])
                    hit += it.value();
            if (hit / g.left[i] >= delta / 3.0)
                t_mass += g.left[i];
        }
        if (t_mass < 1.0 / 3.0 - 1e-12)
            ++violations;
    }
    if (performed)
        *performed = done;
    return violations;
}

namespace detail {

double edge_expansion_lower(const BipartiteGraph& g, double* lambda2, bool* exact)
{
    if (g.n_left() <= kEdgeExpansionMaxVertices) {
        EdgeExpansion e = edge_expansion_exact(g);
        if (lambda2)
            *lambda2 = e.lambda2;
        if (exact)
            *exact = true;
        return e.phi;
    }
    const double l2 = square_spectrum(g).lambda2;
    if (lambda2)
        *lambda2 = l2;
    if (exact)
        *exact = false;
    return std::max(0.0, 1.0 - l2) / 2.0;
}

std::pair<double, std::optional<double>> vasa_v_lambdas(const BipartiteGraph& g)
{
    const double two = square_spectrum(g).lambda_bip;
    const std::size_t n = g.n_left();
    std::vector<int> side(n, -1);
    bool bipartite = true;
    for (std::size_t s = 0; s < n && bipartite; ++s) {
        if (side[s] >= 0)
            continue;
        side[s] = 0;
        std::deque<std::size_t> queue{s};
        while (!queue.empty() && bipartite) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (SparseMat::InnerIterator it(g.joint, static_cast<Eigen::Index>(u)); it; ++it) {
                if (!(it.value() > 0.0))
                    continue;
                const auto v = static_cast<std::size_t>(it.col());
                if (side[v] < 0) {
                    side[v] = 1 - side[u];
                    queue.push_back(v);
                } else if (side[v] == side[u]) {
                    bipartite = false;
                    break;
                }
            }
        }
    }
    if (!bipartite)
        return {two, std::nullopt};
    std::vector<int> pos(n);
    std::size_t nl = 0, nr = 0;
    for (std::size_t i = 0; i < n; ++i)
        pos[i] = static_cast<int>(side[i] == 0 ? nl++ : nr++);
    if (nl == 0 || nr == 0)
        return {two, std::nullopt};
    std::vector<Triplet> w;
    for (std::size_t u = 0; u < n; ++u) {
        if (side[u] != 0)
            continue;
        for (SparseMat::InnerIterator it(g.joint, static_cast<Eigen::Index>(u)); it; ++it)
            if (it.value() > 0.0)
                w.emplace_back(pos[u], pos[static_cast<std::size_t>(it.col())], it.value());
    }
    const BipartiteGraph b = graph_from_weights(nl, nr, w, false);
    return {two, bipartite_norm(b).lambda_bip};
}

void finalize_goodness(GoodnessReport& r, const GoodnessOptions& opts)
{
    const double g = opts.gamma, sg = std::sqrt(std::max(0.0, g));
    r.gamma = g;
    r.r = opts.r;
    r.a1_pass = r.a1_lambda <= sg + kBoundSlack;
    r.a2a_pass = r.a2a_min_phi + kBoundSlack >= opts.edge_expansion;
    r.a2b_pass = r.a2b_max_lambda <= g + kBoundSlack;
    r.a3a_pass = r.a3a_max_lambda <= g + kBoundSlack;
    r.a3b_pass = r.a3b_max_lambda <= sg + kBoundSlack;
    r.a4_sampler_parameter = sampler_parameter(r.a4_max_lambda);
    r.a4_pass = r.a4_sampler_parameter <= opts.r * g + kBoundSlack && r.a4_spot_violations == 0;
    r.a5_pass = r.a5_min + kBoundSlack >= opts.reach_fraction;
    r.inferred_gamma = std::max({r.a1_lambda * r.a1_lambda, r.a2b_max_lambda, r.a3a_max_lambda,
                                 r.a3b_max_lambda * r.a3b_max_lambda});
    r.pass = r.a1_pass && r.a2a_pass && r.a2b_pass && r.a3a_pass && r.a3b_pass && (r.a4_pass || r.a5_pass);
}

}  // namespace detail

GoodnessReport goodness_check(const StavInstance& x, const GoodnessOptions& opts)
{
    if (!(opts.gamma > 0.0) || !(opts.r > 0.0))
        fail(ErrorKind::ParameterRange, "gamma and r must be positive");
    if (!x.materialized || opts.reduced_route) {
        if (!x.model)
            fail(ErrorKind::SizeCap, "no reduced route for this STAV instance");
        return detail::hdx_reduced_goodness(*x.model, opts);
    }
    if (!x.has_vasa)
        fail(ErrorKind::NotApplicable, "goodness needs a VASA distribution");
    GoodnessReport r;
    r.route = "explicit";
    const StavMarginals m = compute_marginals(x);
    const std::size_t ns = x.S->size(), na = x.A->size(), nv = x.n_vertices;

    r.a1_lambda = bipartite_norm(derive_graph(x, m, {StavGraphKind::Reach}).graph).lambda_bip;

    bool any_exact = false, any_cheeger = false;
    for (std::size_t a = 0; a < na; ++a) {
        if (!(m.a_prob[a] > 0.0))
            continue;
        ++r.a_checked;
        StavGraphQuery q{StavGraphKind::StsA};
        q.a = a;
        const StavGraph g = derive_graph(x, m, q);
        double l2 = 0.0;
        bool exact = false;
        const double phi = detail::edge_expansion_lower(g.graph, &l2, &exact);
        (exact ? any_exact : any_cheeger) = true;
        r.a2a_min_phi = std::min(r.a2a_min_phi, phi);
        r.a2a_max_lambda2 = std::max(r.a2a_max_lambda2, l2);
        for (const auto& [v, p] : m.a_reach[a]) {
            q.kind = StavGraphKind::StsAV;
            q.v = v;
            r.a2b_max_lambda = std::max(r.a2b_max_lambda, square_spectrum(derive_graph(x, m, q).graph).lambda_bip);
        }
        q.kind = StavGraphKind::VasA;
        r.a3b_max_lambda = std::max(r.a3b_max_lambda, bipartite_norm(derive_graph(x, m, q).graph).lambda_bip);
    }
    r.a2a_method = any_exact && any_cheeger ? "mixed" : (any_cheeger ? "cheeger" : "exact");

    for (std::size_t v = 0; v < nv; ++v) {
        if (!(m.v_prob[v] > 0.0))
            continue;
        ++r.v_checked;
        StavGraphQuery q{StavGraphKind::VasaV};
        q.v = v;
        const auto [two, bip] = detail::vasa_v_lambdas(derive_graph(x, m, q).graph);
        if (bip)
            ++r.a3a_bipartite_graphs;
        r.a3a_max_two_sided = std::max(r.a3a_max_two_sided, two);
        r.a3a_max_lambda = std::max(r.a3a_max_lambda, bip ? std::min(two, *bip) : two);
    }

    const double delta = opts.r * opts.gamma;
    for (std::size_t s = 0; s < ns; ++s) {
        if (!(x.s_prob[s] > 0.0))
            continue;
        ++r.s_checked;
        StavGraphQuery q{StavGraphKind::LocalReach};
        q.s = s;
        const StavGraph g = derive_graph(x, m, q);
        r.a4_max_lambda = std::max(r.a4_max_lambda, bipartite_norm(g.graph).lambda_bip);
        std::size_t done = 0;
        r.a4_spot_violations += sampler_spot_check(g.graph, delta, opts.spot_checks, opts.seed + s, &done);
        r.a4_spot_checks += done;

        // A5: Pr_{v ~ D}[v in reach(a) | v in s] for every a occurring in s.
        const Face& sc = x.S->content[s];
        double in_s = 0.0;
        for (int v : sc)
            in_s += m.v_prob[static_cast<std::size_t>(v)];
        std::vector<char> seen(na, 0);
        for (const auto& [t, pt] : x.s_to_t[s])
            for (const auto& e : x.t_to_av[t]) {
                if (seen[e.a])
                    continue;
                seen[e.a] = 1;
                double reach = 0.0;
                for (const auto& [v, p] : m.a_reach[e.a])
                    if (contains_id(sc, v))
                        reach += m.v_prob[v];
                if (in_s > 0.0)
                    r.a5_min = std::min(r.a5_min, reach / in_s);
            }
    }
    detail::finalize_goodness(r, opts);
    return r;
}

nlohmann::json to_json(const GoodnessReport& r)
{
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v))
            return v;
        return nullptr;
    };
    return {{"route", r.route},
            {"gamma", r.gamma},
            {"r", r.r},
            {"A1", {{"reach_lambda_bip", num(r.a1_lambda)}, {"pass", r.a1_pass}}},
            {"A2a",
             {{"min_edge_expansion", num(r.a2a_min_phi)},
              {"max_lambda2", num(r.a2a_max_lambda2)},
              {"method", r.a2a_method},
              {"pass", r.a2a_pass}}},
            {"A2b", {{"max_lambda", num(r.a2b_max_lambda)}, {"pass", r.a2b_pass}}},
            {"A3a",
             {{"max_lambda", num(r.a3a_max_lambda)},
              {"max_two_sided", num(r.a3a_max_two_sided)},
              {"bipartite_graphs", r.a3a_bipartite_graphs},
              {"pass", r.a3a_pass}}},
            {"A3b", {{"max_lambda_bip", num(r.a3b_max_lambda)}, {"pass", r.a3b_pass}}},
            {"A4",
             {{"max_lambda_bip", num(r.a4_max_lambda)},
              {"sampler_parameter", num(r.a4_sampler_parameter)},
              {"spot_checks", r.a4_spot_checks},
              {"spot_violations", r.a4_spot_violations},
              {"pass", r.a4_pass}}},
            {"A5", {{"min_fraction", num(r.a5_min)}, {"pass", r.a5_pass}}},
            {"inferred_gamma", num(r.inferred_gamma)},
            {"checked", {{"a", r.a_checked}, {"v", r.v_checked}, {"s", r.s_checked}}},
            {"pass", r.pass}};
}

nlohmann::json stav_to_json(const StavInstance& x)
{
    require_tables(x);
    nlohmann::json j;
    j["kind"] = to_string(x.kind);
    j["n_vertices"] = x.n_vertices;
    j["params"] = x.params;
    auto layer = [](const SetLayer& l) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& c : l.content)
            out.push_back(c);
        return out;
    };
    j["S"] = layer(*x.S);
    j["T"] = layer(*x.T);
    j["A"] = layer(*x.A);
    if (!x.S->labels.empty())
        j["S_labels"] = x.S->labels;
    if (!x.ground.empty()) {
        nlohmann::json g = nlohmann::json::array();
        for (std::size_t v = 0; v < x.n_vertices; ++v)
            if (x.ground[v])
                g.push_back(v);
        j["ground"] = std::move(g);
    }
    nlohmann::json d = nlohmann::json::array();
    for (std::size_t s = 0; s < x.S->size(); ++s)
        for (const auto& [t, pt] : x.s_to_t[s])
            for (const auto& e : x.t_to_av[t])
                d.push_back({s, t, e.a, e.v, x.s_prob[s] * pt * e.p});
    j["d_stav"] = std::move(d);
    nlohmann::json sts = nlohmann::json::array();
    x.sts.for_each([&](std::size_t s1, std::size_t t, std::size_t s2, double p) { sts.push_back({s1, t, s2, p}); });
    j["sts"] = std::move(sts);
    nlohmann::json vasa = nlohmann::json::array();
    for (const auto& e : x.vasa)
        vasa.push_back({e.v, e.a1, e.s, e.a2, e.p});
    j["vasa"] = std::move(vasa);
    return j;
}

StavInstance stav_from_json(const nlohmann::json& j)
{
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key))
            fail(ErrorKind::InvalidInput, std::string("STAV JSON lacks '") + key + "'");
        return j.at(key);
    };
    StavInstance x;
    x.kind = StavKind::Custom;
    try {
        x.n_vertices = need("n_vertices").get<std::size_t>();
        auto read_layer = [&](const char* key) {
            auto l = std::make_shared<SetLayer>();
            for (const auto& e : need(key)) {
                Face f = e.get<Face>();
                std::sort(f.begin(), f.end());
                if (std::adjacent_find(f.begin(), f.end()) != f.end())
                    fail(ErrorKind::InvalidInput, std::string("repeated vertex in layer ") + key);
                for (int v : f)
                    if (v < 0 || static_cast<std::size_t>(v) >= x.n_vertices)
                        fail(ErrorKind::InvalidInput, std::string("vertex out of range in layer ") + key);
                l->content.push_back(std::move(f));
            }
            return l;
        };
        auto S = read_layer("S");
        if (j.contains("S_labels"))
            S->labels = j.at("S_labels").get<std::vector<std::string>>();
        x.S = S;
        x.T = read_layer("T");
        x.A = read_layer("A");
        if (j.contains("params"))
            x.params = j.at("params");
        if (j.contains("ground")) {
            x.ground.assign(x.n_vertices, 0);
            for (const auto& e : j.at("ground")) {
                const auto v = e.get<long long>();
                if (v < 0 || static_cast<std::size_t>(v) >= x.n_vertices)
                    fail(ErrorKind::InvalidInput, "ground vertex out of range");
                x.ground[static_cast<std::size_t>(v)] = 1;
            }
        }
        const std::size_t ns = x.S->size(), nt = x.T->size(), na = x.A->size(), nv = x.n_vertices;
        auto idx = [](const nlohmann::json& row, std::size_t i, std::size_t n, const char* what) {
            const auto v = row.at(i).get<long long>();
            if (v < 0 || static_cast<std::size_t>(v) >= n)
                fail(ErrorKind::InvalidInput, std::string(what) + " index out of range");
            return static_cast<std::size_t>(v);
        };
        auto prob = [](const nlohmann::json& row, std::size_t i) {
            const double p = row.at(i).get<double>();
            if (!(p >= 0.0) || !std::isfinite(p))
                fail(ErrorKind::InvalidInput, "probabilities must be finite and nonnegative");
            return p;
        };

        // Factor the joint into P(s), P(t | s), P(a, v | t).
        const KeyPacker quad({ns, nt, na, nv});
        Table joint;
        double total = 0.0;
        for (const auto& row : need("d_stav")) {
            const auto s = idx(row, 0, ns, "s"), t = idx(row, 1, nt, "t"), a = idx(row, 2, na, "a"),
                       v = idx(row, 3, nv, "v");
            const double p = prob(row, 4);
            joint[quad(s, t, a, v)] += p;
            total += p;
        }
        if (!(total > 0.0))
            fail(ErrorKind::InvalidInput, "d_stav has zero total mass");
        if (std::abs(total - 1.0) > 1e-9)
            spdlog::warn("d_stav total mass {} renormalized to 1", total);
        std::vector<double> ps(ns, 0.0), pt(nt, 0.0);
        std::map<std::pair<std::size_t, std::size_t>, double> pst;
        std::vector<std::map<std::pair<std::size_t, std::size_t>, double>> pav(nt);
        for (auto& [k, p] : joint) {
            p /= total;
            std::uint64_t r = k;
            const std::size_t v = r % std::max<std::size_t>(nv, 1);
            r /= std::max<std::size_t>(nv, 1);
            const std::size_t a = r % std::max<std::size_t>(na, 1);
            r /= std::max<std::size_t>(na, 1);
            const std::size_t t = r % std::max<std::size_t>(nt, 1);
            const std::size_t s = r / std::max<std::size_t>(nt, 1);
            ps[s] += p;
            pt[t] += p;
            pst[{s, t}] += p;
            pav[t][{a, v}] += p;
        }
        x.s_prob = ps;
        x.s_to_t.assign(ns, {});
        for (const auto& [k, p] : pst)
            if (p > 0.0)
                x.s_to_t[k.first].emplace_back(k.second, p / ps[k.first]);
        x.t_to_av.assign(nt, {});
        for (std::size_t t = 0; t < nt; ++t)
            for (const auto& [k, p] : pav[t])
                if (p > 0.0)
                    x.t_to_av[t].push_back({k.first, k.second, p / pt[t]});
        double err = 0.0;
        for (const auto& [k, p] : pst)
            for (const auto& e : x.t_to_av[k.second]) {
                auto it = joint.find(quad(k.first, k.second, e.a, e.v));
                const double actual = it == joint.end() ? 0.0 : it->second;
                err = std::max(err, std::abs(actual - p * e.p));
            }
        x.factorization_error = err;

        x.sts.n_vertices = nv;
        x.sts.sets = x.S;
        x.sts.faces = x.T;
        x.sts.independent = false;
        double sts_total = 0.0;
        for (const auto& row : need("sts")) {
            StsEntry e{idx(row, 0, ns, "s1"), idx(row, 1, nt, "t"), idx(row, 2, ns, "s2"), prob(row, 3)};
            sts_total += e.p;
            x.sts.entries.push_back(e);
        }
        if (!(sts_total > 0.0))
            fail(ErrorKind::InvalidInput, "sts has zero total mass");
        for (auto& e : x.sts.entries)
            e.p /= sts_total;
        if (j.contains("vasa")) {
            double vasa_total = 0.0;
            for (const auto& row : j.at("vasa")) {
                VasaEntry e{idx(row, 0, nv, "v"), idx(row, 1, na, "a1"), idx(row, 2, ns, "s"), idx(row, 3, na, "a2"),
                            prob(row, 4)};
                vasa_total += e.p;
                x.vasa.push_back(e);
            }
            if (vasa_total > 0.0) {
                for (auto& e : x.vasa)
                    e.p /= vasa_total;
                x.has_vasa = true;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidInput, std::string("malformed STAV JSON: ") + e.what());
    }
    return x;
}

}  // namespace hdx
