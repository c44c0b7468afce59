#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "hdx/error.hpp"
#include "hdx/linalg.hpp"
#include "hdx/stav.hpp"

namespace hdx {

namespace {

std::shared_ptr<SetLayer> level_layer(const LevelIndex& lev)
{
    auto layer = std::make_shared<SetLayer>();
    layer->content.reserve(lev.size());
    for (std::size_t i = 0; i < lev.size(); ++i)
        layer->content.push_back(lev.face_vec(i));
    return layer;
}

std::size_t find_face(const LevelIndex& lev, std::span<const int> f)
{
    const long long pos = lev.find(f);
    if (pos < 0)
        fail(ErrorKind::NotAFace, "face " + face_label(f) + " missing from level " + std::to_string(lev.k()));
    return static_cast<std::size_t>(pos);
}

/** Independent STS whose (s, t) marginal is the D_stav marginal, by Bayes' rule. */
void fill_independent_sts(StavInstance& x)
{
    StsDistribution& d = x.sts;
    d.n_vertices = x.n_vertices;
    d.sets = x.S;
    d.faces = x.T;
    d.independent = true;
    d.t_prob.assign(x.T->size(), 0.0);
    d.t_to_s.assign(x.T->size(), {});
    for (std::size_t s = 0; s < x.S->size(); ++s)
        for (const auto& [t, p] : x.s_to_t[s]) {
            const double w = x.s_prob[s] * p;
            d.t_prob[t] += w;
            d.t_to_s[t].emplace_back(s, w);
        }
    for (std::size_t t = 0; t < d.t_prob.size(); ++t)
        for (auto& e : d.t_to_s[t])
            e.second /= d.t_prob[t];
}

/** P(a, v | t) uniform over the vertices v of t, with a = t minus v. */
void fill_tav(StavInstance& x, const LevelIndex& a_level)
{
    x.t_to_av.assign(x.T->size(), {});
    for (std::size_t t = 0; t < x.T->size(); ++t) {
        const Face& tc = x.T->content[t];
        const double p = 1.0 / static_cast<double>(tc.size());
        Face a(tc.size() - 1);
        for (std::size_t i = 0; i < tc.size(); ++i) {
            std::size_t w = 0;
            for (std::size_t j = 0; j < tc.size(); ++j)
                if (j != i)
                    a[w++] = tc[j];
            x.t_to_av[t].push_back({find_face(a_level, a), static_cast<std::size_t>(tc[i]), p});
        }
    }
}

void normalize(std::vector<double>& p)
{
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (!(total > 0.0))
        fail(ErrorKind::ZeroWeight, "distribution has zero total mass");
    for (auto& x : p)
        x /= total;
}

/**
 * Visit ordered splits of `items` into consecutive blocks of the given sizes.
 * The callback gets one vector per block.
 */
void for_each_split(const Face& items, const std::vector<int>& sizes,
                    const std::function<void(const std::vector<Face>&)>& fn)
{
    std::vector<Face> blocks(sizes.size());
    std::function<void(std::size_t, const Face&)> rec = [&](std::size_t b, const Face& rest) {
        if (b == sizes.size()) {
            fn(blocks);
            return;
        }
        for_each_subset(rest, sizes[b], [&](const Face& pick) {
            blocks[b] = pick;
            rec(b + 1, face_difference(rest, pick));
        });
    };
    rec(0, items);
}

double multinomial(int n, const std::vector<int>& sizes)
{
    double out = 1.0;
    for (int k : sizes) {
        out *= binomial_d(n, k);
        n -= k;
    }
    return out;
}

void check_colors(const Complex& c, const std::vector<int>& colors_i, const std::vector<int>& colors_j)
{
    if (!c.has_coloring())
        fail(ErrorKind::NotPartite, "complex has no coloring");
    if (colors_i.empty() || colors_i.size() != colors_j.size())
        fail(ErrorKind::ColorSize, "I and J must be nonempty and of equal size");
    std::vector<int> all(colors_i);
    all.insert(all.end(), colors_j.begin(), colors_j.end());
    for (int col : all)
        if (col < 0 || col > c.dim())
            fail(ErrorKind::ParameterRange, "color " + std::to_string(col) + " out of range");
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        fail(ErrorKind::OverlappingColors, "I and J must be disjoint sets of distinct colors");
}

nlohmann::json colors_json(const std::vector<int>& colors)
{
    std::vector<int> sorted(colors);
    std::sort(sorted.begin(), sorted.end());
    return sorted;
}

}  // namespace

StavInstance hdx_stav(const Complex& c, int d, int l)
{
    if (l < 1 || 2 * l + 2 > d || d > c.dim())
        fail(ErrorKind::ParameterRange, "hdx_stav needs 1 <= l and 2l+2 <= d <= dim");
    const int m = d + 1;
    const int n = c.n_vertices();
    const double per_s_vasa = static_cast<double>(m) * binomial_d(m - 1, l) * binomial_d(m - 1 - l, l);
    const double n_s = c.is_complete() ? binomial_d(n, m) : static_cast<double>(c.level(d).size());
    double sts_support = n_s * binomial_d(m, l + 1);
    if (c.is_complete())
        sts_support = binomial_d(n, l + 1) * std::pow(binomial_d(n - l - 1, m - l - 1), 2);
    const double largest = std::max({n_s * per_s_vasa, n_s * binomial_d(m, l + 1), sts_support});

    StavInstance x;
    x.kind = StavKind::Hdx;
    x.n_vertices = static_cast<std::size_t>(n);
    x.params = {{"d", d}, {"l", l}, {"n_vertices", n}};
    if (c.is_complete())
        x.model = HdxModel{std::make_shared<const Complex>(complete_complex(n, d)), d, l};

    if (largest > static_cast<double>(size_cap(kStavTableCap))) {
        if (!c.is_complete())
            fail(ErrorKind::SizeCap, "STAV tables need about " + std::to_string(static_cast<long long>(largest)) +
                                         " entries; raise HDX_SIZE_CAP");
        spdlog::info("hdx_stav: {:.3g} table entries exceed the cap; using the reduced route", largest);
        x.materialized = false;
        x.has_vasa = true;
        x.S = x.T = x.A = std::make_shared<SetLayer>();
        return x;
    }

    const LevelIndex& s_level = c.level(d);
    const LevelIndex& t_level = c.level(l);
    const LevelIndex& a_level = c.level(l - 1);
    x.S = level_layer(s_level);
    x.T = level_layer(t_level);
    x.A = level_layer(a_level);
    x.s_prob = s_level.measures();
    normalize(x.s_prob);

    const double pt = 1.0 / binomial_d(m, l + 1);
    x.s_to_t.assign(x.S->size(), {});
    for (std::size_t s = 0; s < x.S->size(); ++s)
        for_each_subset(x.S->content[s], l + 1,
                        [&](const Face& t) { x.s_to_t[s].emplace_back(find_face(t_level, t), pt); });
    fill_tav(x, a_level);
    fill_independent_sts(x);
    check_size_cap(static_cast<double>(x.sts.support_size()), kStavTableCap, "STS support");

    x.vasa.reserve(static_cast<std::size_t>(n_s * per_s_vasa));
    for (std::size_t s = 0; s < x.S->size(); ++s) {
        const double p = x.s_prob[s] / per_s_vasa;
        for_each_split(x.S->content[s], {1, l, l}, [&](const std::vector<Face>& b) {
            x.vasa.push_back({static_cast<std::size_t>(b[0][0]), find_face(a_level, b[1]), s,
                              find_face(a_level, b[2]), p});
        });
    }
    x.has_vasa = true;
    return x;
}

StsDistribution dl_distribution(const Complex& c, int d, int l)
{
    if (l < -1 || l > d || d > c.dim())
        fail(ErrorKind::ParameterRange, "dl_distribution needs -1 <= l <= d <= dim");
    const LevelIndex& s_level = c.level(d);
    const LevelIndex& t_level = c.level(l);
    check_size_cap(static_cast<double>(s_level.size()) * binomial_d(d + 1, l + 1), kStavTableCap,
                   "D_{d,l} conditional table");
    StavInstance tmp;
    tmp.n_vertices = static_cast<std::size_t>(c.n_vertices());
    tmp.S = level_layer(s_level);
    tmp.T = level_layer(t_level);
    tmp.s_prob = s_level.measures();
    normalize(tmp.s_prob);
    const double pt = 1.0 / binomial_d(d + 1, l + 1);
    tmp.s_to_t.assign(tmp.S->size(), {});
    for (std::size_t s = 0; s < tmp.S->size(); ++s)
        for_each_subset(tmp.S->content[s], l + 1,
                        [&](const Face& t) { tmp.s_to_t[s].emplace_back(find_face(t_level, t), pt); });
    fill_independent_sts(tmp);
    return tmp.sts;
}

StavInstance partite_ij_stav(const Complex& c, const std::vector<int>& colors_i, const std::vector<int>& colors_j,
                             int k)
{
    check_colors(c, colors_i, colors_j);
    const int l = static_cast<int>(colors_i.size());
    if (k < 4 * l + 4 || k > c.dim())
        fail(ErrorKind::ParameterRange, "partite_ij_stav needs 4l+4 <= k <= dim");
    const std::uint64_t mask_i = color_set_mask(colors_i), mask_j = color_set_mask(colors_j);
    const std::uint64_t mask_ij = mask_i | mask_j;
    const LevelIndex& s_level = c.level(k);
    const int outside = k + 1 - 2 * l;

    StavInstance x;
    x.kind = StavKind::PartiteIJ;
    x.n_vertices = static_cast<std::size_t>(c.n_vertices());
    x.params = {{"I", colors_json(colors_i)}, {"J", colors_json(colors_j)}, {"k", k}, {"l", l}};
    x.ground.assign(x.n_vertices, 0);
    for (int v = 0; v < c.n_vertices(); ++v)
        x.ground[static_cast<std::size_t>(v)] = ((mask_ij >> c.color(v)) & 1U) ? 0 : 1;

    auto S = std::make_shared<SetLayer>();
    std::vector<std::size_t> s_pos;
    for (std::size_t i = 0; i < s_level.size(); ++i)
        if ((c.color_mask(s_level.face(i)) & mask_ij) == mask_ij) {
            S->content.push_back(s_level.face_vec(i));
            s_pos.push_back(i);
            x.s_prob.push_back(s_level.measure(i));
        }
    if (S->content.empty())
        fail(ErrorKind::ZeroConditioning, "no face of X(k) carries every color of I and J");
    normalize(x.s_prob);
    check_size_cap(static_cast<double>(S->size()) * 4.0 * outside, kStavTableCap, "I,J-STAV tables");

    FaceTable t_table(l + 1), a_table(l);
    std::vector<TavEntry> t_av;
    x.s_to_t.assign(S->size(), {});
    const double pt = 1.0 / (2.0 * outside);
    std::vector<std::pair<std::size_t, std::size_t>> parts(S->size());
    for (std::size_t s = 0; s < S->size(); ++s) {
        const Face& sc = S->content[s];
        Face part_i, part_j, rest;
        for (int v : sc) {
            if ((mask_i >> c.color(v)) & 1U)
                part_i.push_back(v);
            else if ((mask_j >> c.color(v)) & 1U)
                part_j.push_back(v);
            else
                rest.push_back(v);
        }
        const std::size_t ai = a_table.insert(part_i), aj = a_table.insert(part_j);
        parts[s] = {ai, aj};
        for (const auto& [part, a] : {std::pair{part_i, ai}, std::pair{part_j, aj}})
            for (int v : rest) {
                const Face t = face_insert(part, v);
                const std::size_t before = t_table.size();
                const std::size_t ti = t_table.insert(t);
                if (ti == before)
                    t_av.push_back({a, static_cast<std::size_t>(v), 1.0});
                x.s_to_t[s].emplace_back(ti, pt);
            }
    }
    auto layer_of = [](const FaceTable& table) {
        auto layer = std::make_shared<SetLayer>();
        for (std::size_t i = 0; i < table.size(); ++i) {
            auto f = table.face(i);
            layer->content.emplace_back(f.begin(), f.end());
        }
        return layer;
    };
    x.S = S;
    x.T = layer_of(t_table);
    x.A = layer_of(a_table);
    x.t_to_av.assign(x.T->size(), {});
    for (std::size_t t = 0; t < t_av.size(); ++t)
        x.t_to_av[t].push_back(t_av[t]);
    fill_independent_sts(x);

    for (std::size_t s = 0; s < S->size(); ++s) {
        const double p = x.s_prob[s] / (2.0 * outside);
        for (int v : S->content[s]) {
            if (!x.ground[static_cast<std::size_t>(v)])
                continue;
            x.vasa.push_back({static_cast<std::size_t>(v), parts[s].first, s, parts[s].second, p});
            x.vasa.push_back({static_cast<std::size_t>(v), parts[s].second, s, parts[s].first, p});
        }
    }
    x.has_vasa = true;
    return x;
}

StsDistribution partite_in_one_set(const Complex& c, const std::vector<int>& colors_i,
                                   const std::vector<int>& colors_j, int k)
{
    check_colors(c, colors_i, colors_j);
    const int l = static_cast<int>(colors_i.size());
    if (k < 4 * l + 4 || k > c.dim())
        fail(ErrorKind::ParameterRange, "partite_in_one_set needs 4l+4 <= k <= dim");
    const std::uint64_t mask_ij = color_set_mask(colors_i) | color_set_mask(colors_j);
    const LevelIndex& s_level = c.level(k);
    const LevelIndex& t_level = c.level(l);

    std::vector<double> all_mass(t_level.size(), 0.0), cond_mass(t_level.size(), 0.0);
    CondTable all(t_level.size()), cond(t_level.size());
    for (std::size_t s = 0; s < s_level.size(); ++s) {
        const double w = s_level.measure(s);
        const bool colored = (c.color_mask(s_level.face(s)) & mask_ij) == mask_ij;
        for_each_subset(s_level.face(s), l + 1, [&](const Face& t) {
            const std::size_t ti = find_face(t_level, t);
            all[ti].emplace_back(s, w);
            all_mass[ti] += w;
            if (colored) {
                cond[ti].emplace_back(s, w);
                cond_mass[ti] += w;
            }
        });
    }
    double support = 0.0;
    for (std::size_t t = 0; t < t_level.size(); ++t)
        support += static_cast<double>(all[t].size()) * static_cast<double>(cond[t].size());
    check_size_cap(support, kStavTableCap, "in-one-set STS table");

    StsDistribution d;
    d.n_vertices = static_cast<std::size_t>(c.n_vertices());
    d.sets = level_layer(s_level);
    d.faces = level_layer(t_level);
    d.independent = false;
    double kept = 0.0;
    std::size_t dropped = 0;
    for (std::size_t t = 0; t < t_level.size(); ++t) {
        if (cond[t].empty()) {
            ++dropped;
            continue;
        }
        kept += t_level.measure(t);
    }
    if (!(kept > 0.0))
        fail(ErrorKind::ZeroConditioning, "no face of X(l) lies in a face carrying I and J");
    if (dropped > 0)
        spdlog::warn("in-one-set test: {} faces of X({}) lie in no face carrying I and J; dropped", dropped, l);
    d.entries.reserve(static_cast<std::size_t>(support));
    for (std::size_t t = 0; t < t_level.size(); ++t) {
        if (cond[t].empty())
            continue;
        const double pt = t_level.measure(t) / kept;
        for (const auto& [s1, w1] : cond[t])
            for (const auto& [s2, w2] : all[t])
                d.entries.push_back({s1, t, s2, pt * (w1 / cond_mass[t]) * (w2 / all_mass[t])});
    }
    return d;
}

StavInstance neighborhood_stav(const Complex& c, int l, int k, NeighborhoodMode mode)
{
    const int d = c.dim();
    const bool complement = mode == NeighborhoodMode::Complement;
    if (l < 1 || k < 0 || (complement ? l + 2 * k + 2 > d : l + k + 1 > d))
        fail(ErrorKind::ParameterRange, complement ? "neighborhood_stav (complement) needs l+2k+2 <= d"
                                                   : "neighborhood_stav (independent) needs l+k+1 <= d");
    const LevelIndex& z_level = c.level(k);
    const LevelIndex& t_level = c.level(l);
    const LevelIndex& a_level = c.level(l - 1);
    const LevelIndex& zt_level = c.level(k + l + 1);
    check_size_cap(static_cast<double>(zt_level.size()) * binomial_d(k + l + 2, k + 1), kStavTableCap,
                   "neighborhood D_stav table");

    StavInstance x;
    x.kind = StavKind::Neighborhood;
    x.n_vertices = static_cast<std::size_t>(c.n_vertices());
    x.params = {{"l", l}, {"k", k}, {"mode", complement ? "complement" : "independent"}};
    auto S = std::make_shared<SetLayer>();
    S->content = neighborhood_system(c, k);
    S->labels.reserve(z_level.size());
    for (std::size_t z = 0; z < z_level.size(); ++z)
        S->labels.push_back("z=" + face_label(z_level.face(z)));
    x.S = S;
    x.T = level_layer(t_level);
    x.A = level_layer(a_level);

    // P(z, t) proportional to mu(z u t); every (z, t) split of a face occurs once.
    x.s_prob.assign(S->size(), 0.0);
    x.s_to_t.assign(S->size(), {});
    double total = 0.0;
    for (std::size_t f = 0; f < zt_level.size(); ++f) {
        const double w = zt_level.measure(f);
        for_each_split(zt_level.face_vec(f), {k + 1}, [&](const std::vector<Face>& b) {
            const std::size_t z = find_face(z_level, b[0]);
            const Face t = face_difference(zt_level.face_vec(f), b[0]);
            x.s_prob[z] += w;
            x.s_to_t[z].emplace_back(find_face(t_level, t), w);
            total += w;
        });
    }
    for (std::size_t z = 0; z < S->size(); ++z) {
        for (auto& e : x.s_to_t[z])
            e.second /= x.s_prob[z];
        x.s_prob[z] /= total;
    }
    fill_tav(x, a_level);

    if (!complement) {
        fill_independent_sts(x);
    } else {
        const LevelIndex& big = c.level(l + 2 * k + 2);
        const std::vector<int> sizes{l + 1, k + 1, k + 1};
        check_size_cap(static_cast<double>(big.size()) * multinomial(l + 2 * k + 3, sizes), kStavTableCap,
                       "NCD table");
        StsDistribution& sts = x.sts;
        sts.n_vertices = x.n_vertices;
        sts.sets = x.S;
        sts.faces = x.T;
        sts.independent = false;
        double mass = 0.0;
        for (std::size_t g = 0; g < big.size(); ++g) {
            const double w = big.measure(g);
            for_each_split(big.face_vec(g), sizes, [&](const std::vector<Face>& b) {
                sts.entries.push_back(
                    {find_face(z_level, b[1]), find_face(t_level, b[0]), find_face(z_level, b[2]), w});
                mass += w;
            });
        }
        for (auto& e : sts.entries)
            e.p /= mass;
    }

    if (2 * l + k + 1 <= d) {
        const LevelIndex& big = c.level(2 * l + k + 1);
        const std::vector<int> sizes{k + 1, 1, l, l};
        check_size_cap(static_cast<double>(big.size()) * multinomial(2 * l + k + 2, sizes), kStavTableCap,
                       "neighborhood VASA table");
        double mass = 0.0;
        for (std::size_t g = 0; g < big.size(); ++g) {
            const double w = big.measure(g);
            for_each_split(big.face_vec(g), sizes, [&](const std::vector<Face>& b) {
                x.vasa.push_back({static_cast<std::size_t>(b[1][0]), find_face(a_level, b[2]),
                                  find_face(z_level, b[0]), find_face(a_level, b[3]), w});
                mass += w;
            });
        }
        for (auto& e : x.vasa)
            e.p /= mass;
        x.has_vasa = true;
    } else {
        spdlog::info("neighborhood_stav: 2l+k+1 > d, no VASA distribution");
    }
    return x;
}

namespace detail {

namespace {

struct Reduced {
    const Complex& c;
    int n;
    int m;
    int l;

    explicit Reduced(const HdxModel& model)
        : c(*model.complex), n(model.complex->n_vertices()), m(model.d + 1), l(model.l)
    {
        if (!c.is_complete())
            fail(ErrorKind::NotApplicable, "the reduced route needs a complete complex");
        if (c.dim() != model.d)
            fail(ErrorKind::InvalidInput, "reduced model complex must have dimension d");
    }

    double w(const Face& f) const { return c.containing_weight(f); }

    static Face range(int from, int to)
    {
        Face f(static_cast<std::size_t>(to - from));
        std::iota(f.begin(), f.end(), from);
        return f;
    }

    Face complement(const Face& f) const { return face_difference(range(0, n), f); }
};

}  // namespace

GoodnessReport hdx_reduced_goodness(const HdxModel& model, const GoodnessOptions& opts)
{
    const Reduced red(model);
    const int n = red.n, m = red.m, l = red.l;
    GoodnessReport r;
    r.route = "reduced";
    r.a_checked = r.v_checked = r.s_checked = 1;

    // A1: reach graph A = X(l-1) against V, P(a, v) proportional to W(a u v).
    {
        const LevelIndex& a_level = red.c.level(l - 1);
        std::vector<Triplet> w;
        for_each_combination(n, l + 1, [&](const int* idx) {
            const Face t(idx, idx + l + 1);
            const double wt = red.w(t);
            for (int i = 0; i <= l; ++i) {
                Face a;
                for (int j = 0; j <= l; ++j)
                    if (j != i)
                        a.push_back(t[static_cast<std::size_t>(j)]);
                w.emplace_back(static_cast<int>(find_face(a_level, a)), t[static_cast<std::size_t>(i)], wt);
            }
        });
        r.a1_lambda = bipartite_norm(graph_from_weights(a_level.size(), static_cast<std::size_t>(n), w, false)).lambda_bip;
    }

    const Face a = Reduced::range(0, l);
    const Face outside_a = red.complement(a);

    // A2a: STS_a shares its nonzero spectrum with the walk t -> s -> t' on T_a.
    {
        const std::size_t nt = outside_a.size();
        std::vector<Triplet> w;
        for (std::size_t i = 0; i < nt; ++i)
            for (std::size_t j = 0; j < nt; ++j) {
                Face f = face_insert(a, outside_a[i]);
                if (i != j)
                    f = face_insert(f, outside_a[j]);
                const double x = red.w(f);
                if (x > 0.0)
                    w.emplace_back(static_cast<int>(i), static_cast<int>(j), x);
            }
        const double l2 = std::max(0.0, square_spectrum(graph_from_weights(nt, nt, w, true)).lambda2);
        const double n_sa = binomial_d(n - l, m - l);
        r.a2a_max_lambda2 = l2;
        if (n_sa <= static_cast<double>(kEdgeExpansionMaxVertices)) {
            std::vector<Face> sa;
            for_each_subset(outside_a, m - l, [&](const Face& rest) { sa.push_back(face_union(a, rest)); });
            std::vector<Triplet> ws;
            for (std::size_t i = 0; i < sa.size(); ++i)
                for (std::size_t j = 0; j < sa.size(); ++j) {
                    double x = 0.0;
                    for (int v : face_difference(face_intersection(sa[i], sa[j]), a))
                        x += red.w(sa[i]) * red.w(sa[j]) / red.w(face_insert(a, v));
                    if (x > 0.0)
                        ws.emplace_back(static_cast<int>(i), static_cast<int>(j), x);
                }
            const EdgeExpansion e = edge_expansion_exact(graph_from_weights(sa.size(), sa.size(), ws, true));
            r.a2a_min_phi = e.phi;
            r.a2a_method = "exact";
        } else {
            r.a2a_min_phi = (1.0 - l2) / 2.0;
            r.a2a_method = "cheeger";
        }
    }

    // A2b: given t = a u v the two sets are independent, so the operator is rank one.
    {
        const Face t = face_insert(a, outside_a.front());
        std::vector<double> weights;
        for_each_subset(red.complement(t), m - l - 1,
                        [&](const Face& rest) { weights.push_back(red.w(face_union(t, rest))); });
        Eigen::VectorXd u(static_cast<Eigen::Index>(weights.size()));
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        for (std::size_t i = 0; i < weights.size(); ++i)
            u(static_cast<Eigen::Index>(i)) = std::sqrt(weights[i] / total);
        if (weights.size() > 1) {
            const auto ext = linalg::lanczos(
                [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = u * u.dot(x); }, weights.size(), &u);
            r.a2b_max_lambda = std::max(std::abs(ext.top), std::abs(ext.bottom));
        }
    }

    // A3a: vASA_v on l-sets avoiding v, P(a1, a2) proportional to W(a1 u a2 u v).
    {
        const int v = 0;
        const Face ball = red.complement(Face{v});
        std::map<Face, int> index;
        for_each_subset(ball, l, [&](const Face& f) { index.emplace(f, static_cast<int>(index.size())); });
        std::vector<Triplet> w;
        w.reserve(static_cast<std::size_t>(binomial_d(n - 1, 2 * l) * binomial_d(2 * l, l)));
        for_each_subset(ball, 2 * l, [&](const Face& pair) {
            const double x = red.w(face_insert(pair, v));
            if (!(x > 0.0))
                return;
            for_each_subset(pair, l, [&](const Face& a1) {
                w.emplace_back(index.at(a1), index.at(face_difference(pair, a1)), x);
            });
        });
        const auto [two, bip] = vasa_v_lambdas(graph_from_weights(index.size(), index.size(), w, true));
        r.a3a_max_two_sided = two;
        r.a3a_bipartite_graphs = bip ? 1 : 0;
        r.a3a_max_lambda = bip ? std::min(two, *bip) : two;
    }

    // A3b: VAS_a through the walk v -> (a', s) -> v' on vertices outside a.
    {
        const std::size_t nv = outside_a.size();
        const double cross = binomial_d(m - l - 2, l) / (binomial_d(m - l - 1, l) * (m - 2 * l));
        const double stay = 1.0 / (m - 2 * l);
        std::vector<Triplet> w;
        for (std::size_t i = 0; i < nv; ++i)
            for (std::size_t j = 0; j < nv; ++j) {
                const Face av = face_insert(a, outside_a[i]);
                const double x = i == j ? red.w(av) * stay : red.w(face_insert(av, outside_a[j])) * cross;
                if (x > 0.0)
                    w.emplace_back(static_cast<int>(i), static_cast<int>(j), x);
            }
        const double l2 = square_spectrum(graph_from_weights(nv, nv, w, true)).lambda2;
        r.a3b_max_lambda = std::sqrt(std::max(0.0, l2));
    }

    // A4 and A5 on one representative s.
    {
        const Face s = Reduced::range(0, m);
        std::map<Face, int> index;
        for_each_subset(s, l, [&](const Face& f) { index.emplace(f, static_cast<int>(index.size())); });
        const double p = 1.0 / (binomial_d(m, l + 1) * (l + 1));
        std::vector<Triplet> w;
        for (const auto& [af, ai] : index)
            for (int v : face_difference(s, af))
                w.emplace_back(ai, v, p);
        const BipartiteGraph g = graph_from_weights(index.size(), static_cast<std::size_t>(m), w, false);
        r.a4_max_lambda = bipartite_norm(g).lambda_bip;
        std::size_t done = 0;
        r.a4_spot_violations = sampler_spot_check(g, opts.r * opts.gamma, opts.spot_checks, opts.seed, &done);
        r.a4_spot_checks = done;

        double in_s = 0.0, reach = 0.0;
        for (int v : s) {
            const double pv = red.w(Face{v}) / m;
            in_s += pv;
            if (!std::binary_search(a.begin(), a.end(), v) && red.w(face_insert(a, v)) > 0.0)
                reach += pv;
        }
        r.a5_min = reach / in_s;
    }

    finalize_goodness(r, opts);
    return r;
}

StavValidation hdx_reduced_validate(const HdxModel& model, double tol)
{
    const Reduced red(model);
    const int n = red.n, m = red.m, l = red.l;
    StavValidation r;
    r.route = "reduced";
    const double c_t = binomial_d(m, l + 1);

    // v-marginal: P(v) = sum over t containing v of P(t) / (l+1), P(t) = W(t) / C(m, l+1).
    std::vector<double> pv(static_cast<std::size_t>(n), 0.0);
    for_each_combination(n, l + 1, [&](const int* idx) {
        const Face t(idx, idx + l + 1);
        const double p = red.w(t) / c_t / (l + 1);
        for (int v : t)
            pv[static_cast<std::size_t>(v)] += p;
    });
    for (double p : pv)
        r.v_marginal_error = std::max(r.v_marginal_error, std::abs(p - 1.0 / n));
    r.v_uniform = r.v_marginal_error <= tol;
    r.conditional_independence = true;

    // STS: P(s | t) sums to one and P(t) P(s | t) = P(s) P(t | s).
    const Face t = Reduced::range(0, l + 1);
    const double wt = red.w(t);
    double mass = 0.0, err = 0.0;
    for_each_subset(red.complement(t), m - l - 1, [&](const Face& rest) {
        const double ws = red.w(face_union(t, rest));
        mass += ws / wt;
        err = std::max(err, std::abs((wt / c_t) * (ws / wt) - ws / c_t));
    });
    r.sts_marginal_error = std::max(err, std::abs(mass - 1.0));
    r.sts_ok = r.sts_marginal_error <= tol;

    // VASA: enumerate (v, a1, a2) inside a representative s.
    const Face s = Reduced::range(0, m);
    const double ws = red.w(s);
    const double per_s = static_cast<double>(m) * binomial_d(m - 1, l) * binomial_d(m - 1 - l, l);
    std::map<std::tuple<int, Face, Face>, double> table;
    std::map<std::pair<int, Face>, double> marginal;
    for_each_split(s, {1, l, l}, [&](const std::vector<Face>& b) {
        table[{b[0][0], b[1], b[2]}] += ws / per_s;
        marginal[{b[0][0], b[1]}] += ws / per_s;
    });
    for (const auto& [key, p] : table) {
        auto it = table.find({std::get<0>(key), std::get<2>(key), std::get<1>(key)});
        r.vasa_symmetry_error = std::max(r.vasa_symmetry_error, std::abs(p - (it == table.end() ? 0.0 : it->second)));
    }
    for (const auto& [key, p] : marginal)
        r.vasa_marginal_error = std::max(r.vasa_marginal_error, std::abs(p - ws / (c_t * (l + 1))));
    r.vasa_ok = r.vasa_symmetry_error <= tol && r.vasa_marginal_error <= tol;

    r.min_probability = std::min({ws, wt / c_t, red.w(Reduced::range(0, l)) / binomial_d(m, l),
                                  *std::min_element(pv.begin(), pv.end())});
    r.positive = r.min_probability > 0.0;
    r.pass = r.v_uniform && r.conditional_independence && r.sts_ok && r.vasa_ok && r.positive;
    return r;
}

}  // namespace detail

}  // namespace hdx
