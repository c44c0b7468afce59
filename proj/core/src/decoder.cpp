#include "hdx/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "hdx/error.hpp"

namespace hdx {

namespace {

/** Relative tolerance under which two plurality weights count as tied. */
constexpr double kTieTolerance = 1e-12;

template <class Key>
Key plurality(const std::map<Key, double>& votes)
{
    double best = -1.0;
    const Key* arg = nullptr;
    for (const auto& [key, w] : votes)
        if (w > best * (1.0 + kTieTolerance) + 1e-300) {
            best = w;
            arg = &key;
        }
    return *arg;
}

void require_materialized(const StavInstance& x)
{
    if (!x.materialized)
        fail(ErrorKind::SizeCap, "STAV tables were not materialized");
    if (x.S->size() == 0)
        fail(ErrorKind::InvalidInput, "STAV has no sets");
}

void check_ensemble(const StavInstance& x, const Ensemble& f)
{
    if (f.size() != x.S->size())
        fail(ErrorKind::SupportMismatch, "ensemble size differs from the STAV set layer");
    for (std::size_t s = 0; s < f.size(); ++s)
        if (f.sets->content[s] != x.S->content[s])
            fail(ErrorKind::SupportMismatch, "ensemble set " + std::to_string(s) + " differs from the STAV set");
}

/** Visit every (s, a, v) of D_stav with its probability. */
template <class Fn>
void for_each_sav(const StavInstance& x, Fn&& fn)
{
    for (std::size_t s = 0; s < x.S->size(); ++s)
        for (const auto& [t, pt] : x.s_to_t[s])
            for (const auto& e : x.t_to_av[t])
                fn(s, e.a, e.v, x.s_prob[s] * pt * e.p);
}

bool matches_h(const StavInstance& x, const Ensemble& f, const LocalPopularity& h, std::size_t s, std::size_t a)
{
    return f.restrict_to(s, x.A->content[a]) == h[a];
}

Symbol lookup(const std::vector<std::pair<std::size_t, Symbol>>& g, std::size_t v)
{
    auto it = std::lower_bound(g.begin(), g.end(), std::make_pair(v, std::numeric_limits<Symbol>::min()));
    return it != g.end() && it->first == v ? it->second : -1;
}

bool in_sorted(const std::vector<std::size_t>& xs, std::size_t a)
{
    return std::binary_search(xs.begin(), xs.end(), a);
}

}  // namespace

void DecoderConfig::validate() const
{
    if (!(tau_global > 0.0 && tau_global <= tau_local && tau_local < 1.0))
        fail(ErrorKind::ParameterRange, "decoder thresholds need 0 < tau_global <= tau_local < 1");
}

LocalPopularity local_popularity(const StavInstance& x, const Ensemble& f)
{
    require_materialized(x);
    check_ensemble(x, f);
    std::vector<std::map<std::vector<Symbol>, double>> votes(x.A->size());
    std::map<std::pair<std::size_t, std::size_t>, double> sa;
    for_each_sav(x, [&](std::size_t s, std::size_t a, std::size_t, double p) { sa[{s, a}] += p; });
    for (const auto& [key, p] : sa)
        if (p > 0.0)
            votes[key.second][f.restrict_to(key.first, x.A->content[key.second])] += p;
    LocalPopularity h(x.A->size());
    for (std::size_t a = 0; a < x.A->size(); ++a) {
        if (votes[a].empty())
            fail(ErrorKind::OrphanA, "element " + x.A->label(a) + " of A lies in no set");
        h[a] = plurality(votes[a]);
    }
    return h;
}

ReachFunctions reach_functions(const StavInstance& x, const Ensemble& f, const LocalPopularity& h)
{
    require_materialized(x);
    check_ensemble(x, f);
    const StavMarginals m = compute_marginals(x);
    std::map<std::pair<std::size_t, std::size_t>, std::map<Symbol, double>> votes;
    for_each_sav(x, [&](std::size_t s, std::size_t a, std::size_t v, double p) {
        if (p > 0.0 && matches_h(x, f, h, s, a))
            votes[{a, v}][f.value(s, static_cast<int>(v))] += p;
    });
    ReachFunctions g(x.A->size());
    for (std::size_t a = 0; a < x.A->size(); ++a)
        for (const auto& [v, p] : m.a_reach[a]) {
            auto it = votes.find({a, v});
            g[a].emplace_back(v, it == votes.end() ? -1 : plurality(it->second));
        }
    return g;
}

BadSets bad_sets(const StavInstance& x, const Ensemble& f, const LocalPopularity& h, const DecoderConfig& cfg)
{
    cfg.validate();
    require_materialized(x);
    check_ensemble(x, f);
    if (!x.has_vasa)
        fail(ErrorKind::NotApplicable, "bad sets need a VASA distribution");
    const std::size_t na = x.A->size();
    std::vector<double> mass(na, 0.0), bad(na, 0.0);
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> local;
    for (const auto& e : x.vasa) {
        if (!(e.p > 0.0))
            continue;
        const bool is_bad = !matches_h(x, f, h, e.s, e.a1) || !matches_h(x, f, h, e.s, e.a2);
        mass[e.a1] += e.p;
        auto& l = local[{e.v, e.a1}];
        l.first += e.p;
        if (is_bad) {
            bad[e.a1] += e.p;
            l.second += e.p;
        }
    }
    BadSets out;
    out.a_star.assign(na, 0);
    out.bad_probability.assign(na, 0.0);
    for (std::size_t a = 0; a < na; ++a) {
        out.bad_probability[a] = mass[a] > 0.0 ? bad[a] / mass[a] : 0.0;
        out.a_star[a] = out.bad_probability[a] >= cfg.tau_global ? 1 : 0;
    }
    const StavMarginals m = compute_marginals(x);
    out.a_star_v.assign(x.n_vertices, {});
    for (std::size_t v = 0; v < x.n_vertices; ++v)
        for (const auto& [a, p] : m.v_reach[v]) {
            bool member = out.a_star[a] != 0;
            auto it = local.find({v, a});
            if (it != local.end() && it->second.first > 0.0 && it->second.second / it->second.first > cfg.tau_local)
                member = true;
            if (member)
                out.a_star_v[v].push_back(a);
        }
    return out;
}

nlohmann::json to_json(const DecodeDiagnostics& d)
{
    return {{"epsilon", d.epsilon},
            {"h_disagreement", d.h_disagreement},
            {"a_star_probability", d.a_star_probability},
            {"g_disagreement", d.g_disagreement},
            {"local_not_global", d.local_not_global},
            {"global_link_disagreement", d.global_link_disagreement},
            {"distance", d.distance},
            {"fallback_vertices", d.fallback_vertices}};
}

nlohmann::json to_json(const DecodeOutput& out, bool include_functions)
{
    std::size_t n_star = 0;
    for (char c : out.bad.a_star)
        n_star += c ? 1 : 0;
    nlohmann::json j = {{"G", out.G},
                        {"a_star_size", n_star},
                        {"fallback", out.fallback},
                        {"diagnostics", to_json(out.diagnostics)}};
    if (include_functions) {
        j["h"] = out.h;
        nlohmann::json g = nlohmann::json::array();
        for (const auto& row : out.g) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& [v, sym] : row)
                r.push_back({v, sym});
            g.push_back(std::move(r));
        }
        j["g"] = std::move(g);
        j["a_star_v"] = out.bad.a_star_v;
    }
    return j;
}

DecodeOutput global_decode(const StavInstance& x, const Ensemble& f, const DecoderConfig& cfg)
{
    cfg.validate();
    DecodeOutput out;
    out.h = local_popularity(x, f);
    out.g = reach_functions(x, f, out.h);
    out.bad = bad_sets(x, f, out.h, cfg);
    const StavMarginals m = compute_marginals(x);

    out.G.assign(x.n_vertices, -1);
    for (std::size_t v = 0; v < x.n_vertices; ++v) {
        if (!x.ground.empty() && !x.ground[v])
            continue;
        std::map<Symbol, double> votes, all;
        for (const auto& [a, p] : m.v_reach[v]) {
            const Symbol sym = lookup(out.g[a], v);
            if (sym < 0)
                continue;
            all[sym] += p;
            if (!in_sorted(out.bad.a_star_v[v], a))
                votes[sym] += p;
        }
        if (votes.empty()) {
            out.fallback = true;
            ++out.diagnostics.fallback_vertices;
            out.G[v] = all.empty() ? 0 : plurality(all);
            continue;
        }
        out.G[v] = plurality(votes);
    }
    if (out.fallback)
        spdlog::warn("global_decode: {} vertices fell back to the unfiltered plurality",
                     out.diagnostics.fallback_vertices);

    DecodeDiagnostics& d = out.diagnostics;
    d.epsilon = rejection(x, f).epsilon;
    for_each_sav(x, [&](std::size_t s, std::size_t a, std::size_t v, double p) {
        if (!(p > 0.0))
            return;
        const bool h_ok = matches_h(x, f, out.h, s, a);
        if (!h_ok)
            d.h_disagreement += p;
        else if (f.value(s, static_cast<int>(v)) != lookup(out.g[a], v) && !in_sorted(out.bad.a_star_v[v], a))
            d.g_disagreement += p;
    });
    for (std::size_t a = 0; a < x.A->size(); ++a)
        if (out.bad.a_star[a])
            d.a_star_probability += m.a_prob[a];
    for (std::size_t v = 0; v < x.n_vertices; ++v)
        for (const auto& [a, p] : m.v_reach[v]) {
            const bool local = in_sorted(out.bad.a_star_v[v], a);
            if (local && !out.bad.a_star[a])
                d.local_not_global += p;
            if (!local && lookup(out.g[a], v) != out.G[v])
                d.global_link_disagreement += p;
        }
    d.distance = dist_gamma(x, f, out.G, 0.0);
    return out;
}

std::vector<SubsetSample> singleton_sampler(const StavInstance& x)
{
    require_materialized(x);
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> joint;
    for_each_sav(x, [&](std::size_t s, std::size_t a, std::size_t v, double p) { joint[{v, a, s}] += p; });
    std::vector<SubsetSample> out;
    for (const auto& [k, p] : joint) {
        const auto [v, a, s] = k;
        out.push_back({v, Face{static_cast<int>(v)}, a, s, p});
    }
    return out;
}

std::vector<SubsetSample> complement_sampler(const StavInstance& x)
{
    require_materialized(x);
    const StavMarginals m = compute_marginals(x);
    std::vector<SubsetSample> out = singleton_sampler(x);
    for (auto& e : out) {
        Face b;
        for (int u : face_difference(x.S->content[e.s], x.A->content[e.a])) {
            const auto& reach = m.a_reach[e.a];
            auto it = std::lower_bound(reach.begin(), reach.end(), std::make_pair(static_cast<std::size_t>(u), -1.0));
            if (it != reach.end() && it->first == static_cast<std::size_t>(u))
                b.push_back(u);
        }
        e.b = std::move(b);
    }
    return out;
}

double subset_agreement(const StavInstance& x, const Ensemble& f, const GlobalFunction& G,
                        const std::vector<SubsetSample>& sampler, double r_gamma)
{
    require_materialized(x);
    check_ensemble(x, f);
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> expected, got;
    for_each_sav(x, [&](std::size_t s, std::size_t a, std::size_t v, double p) { expected[{v, a, s}] += p; });
    for (const auto& e : sampler) {
        if (e.s >= x.S->size() || e.a >= x.A->size())
            fail(ErrorKind::InvalidInput, "subset sample index out of range");
        if (!std::binary_search(e.b.begin(), e.b.end(), static_cast<int>(e.v)) ||
            !is_subset(e.b, x.S->content[e.s]))
            fail(ErrorKind::InvalidInput, "subset sample needs v in b inside s");
        got[{e.v, e.a, e.s}] += e.p;
    }
    double err = 0.0;
    for (const auto& [k, p] : expected) {
        auto it = got.find(k);
        err = std::max(err, std::abs(p - (it == got.end() ? 0.0 : it->second)));
    }
    for (const auto& [k, p] : got)
        if (!expected.count(k))
            err = std::max(err, std::abs(p));
    if (err > 1e-9)
        fail(ErrorKind::MarginalMismatch,
             "sampler (v, a, s) marginal deviates from D_stav by " + std::to_string(err));

    double out = 0.0;
    for (const auto& e : sampler) {
        std::size_t defined = 0, diff = 0;
        for (int u : e.b) {
            const Symbol gv = G.at(static_cast<std::size_t>(u));
            if (gv < 0)
                continue;
            ++defined;
            diff += f.value(e.s, u) != gv ? 1 : 0;
        }
        if (defined && static_cast<double>(diff) / static_cast<double>(defined) > r_gamma)
            out += e.p;
    }
    return out;
}

nlohmann::json to_json(const ColorTupleReport& r)
{
    return {{"I1", r.I1},
            {"J1", r.J1},
            {"I2", r.I2},
            {"J2", r.J2},
            {"epsilon_ij", {r.epsilon_ij[0], r.epsilon_ij[1]}},
            {"surprise_ij", {r.surprise_ij[0], r.surprise_ij[1]}},
            {"epsilon_one_set", {r.epsilon_one_set[0], r.epsilon_one_set[1]}},
            {"accepted", r.accepted}};
}

PartiteDecodeOutput partite_decode(const Complex& c, int k, int l, const Ensemble& f, const PartiteDecodeOptions& opts)
{
    opts.decoder.validate();
    if (!c.has_coloring())
        fail(ErrorKind::NotPartite, "partite_decode needs a colored complex");
    const int n_colors = c.dim() + 1;
    if (l < 1 || 4 * l > n_colors || k < 4 * l + 4 || k > c.dim())
        fail(ErrorKind::ParameterRange, "partite_decode needs 4l <= d+1 and 4l+4 <= k <= d");

    PartiteDecodeOutput out;
    const StsDistribution dkl = dl_distribution(c, k, l);
    const Ensemble fk = restrict_ensemble(f, dkl.sets);
    out.epsilon = rejection(dkl, fk).epsilon;
    const double slack = 1e-12;

    std::mt19937_64 rng(opts.seed);
    std::vector<int> colors(static_cast<std::size_t>(n_colors));
    std::iota(colors.begin(), colors.end(), 0);
    double best_score = std::numeric_limits<double>::infinity();
    std::size_t best = 0;

    for (std::size_t trial = 0; trial < opts.max_tuples; ++trial) {
        if (trial > 0)
            std::shuffle(colors.begin(), colors.end(), rng);
        auto block = [&](int i) {
            std::vector<int> b(colors.begin() + i * l, colors.begin() + (i + 1) * l);
            std::sort(b.begin(), b.end());
            return b;
        };
        ColorTupleReport rep;
        rep.I1 = block(0);
        rep.J1 = block(1);
        rep.I2 = block(2);
        rep.J2 = block(3);
        StavInstance xs[2] = {partite_ij_stav(c, rep.I1, rep.J1, k), partite_ij_stav(c, rep.I2, rep.J2, k)};
        Ensemble fs[2];
        double score = 0.0;
        for (int i = 0; i < 2; ++i) {
            fs[i] = restrict_ensemble(f, xs[i].S);
            rep.epsilon_ij[i] = rejection(xs[i], fs[i]).epsilon;
            rep.surprise_ij[i] = surprise(xs[i], fs[i]).xi;
            const StsDistribution one = partite_in_one_set(c, i == 0 ? rep.I1 : rep.I2, i == 0 ? rep.J1 : rep.J2, k);
            rep.epsilon_one_set[i] = rejection(one, restrict_ensemble(f, one.sets)).epsilon;
            const double rej_cap = std::min(opts.rejection_factor * out.epsilon, opts.max_rejection) + slack;
            const double one_cap = std::min(opts.one_set_factor * out.epsilon, opts.max_rejection) + slack;
            const double sur_cap = opts.surprise_constant / l + slack;
            score = std::max({score, rep.epsilon_ij[i] / rej_cap, rep.surprise_ij[i] / sur_cap,
                              rep.epsilon_one_set[i] / one_cap});
        }
        rep.accepted = score <= 1.0;
        out.tried.push_back(rep);
        if (score < best_score) {
            best_score = score;
            best = out.tried.size() - 1;
        }
        if (!rep.accepted)
            continue;

        out.tuple = rep;
        out.first = global_decode(xs[0], fs[0], opts.decoder);
        out.second = global_decode(xs[1], fs[1], opts.decoder);
        const std::uint64_t mask1 = color_set_mask(rep.I1) | color_set_mask(rep.J1);
        out.G.assign(static_cast<std::size_t>(c.n_vertices()), -1);
        for (int v = 0; v < c.n_vertices(); ++v) {
            const bool first = !((mask1 >> c.color(v)) & 1U);
            out.G[static_cast<std::size_t>(v)] = (first ? out.first : out.second).G[static_cast<std::size_t>(v)];
        }
        std::vector<double> s_measure = c.level(k).measures();
        const double total = std::accumulate(s_measure.begin(), s_measure.end(), 0.0);
        for (auto& p : s_measure)
            p /= total;
        out.distance = dist_gamma(s_measure, fk, out.G, 0.0);
        return out;
    }
    fail(ErrorKind::NoGoodColors, "no color tuple met the thresholds; best candidate " +
                                      to_json(out.tried[best]).dump() + " with score " + std::to_string(best_score));
}

}  // namespace hdx
