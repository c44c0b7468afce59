#include "hdx/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include <spdlog/spdlog.h>

#include "hdx/error.hpp"

namespace hdx {

namespace {

void check_support(const SetLayerPtr& expected, const Ensemble& f)
{
    if (!f.sets || !expected)
        fail(ErrorKind::SupportMismatch, "ensemble or distribution has no set layer");
    if (f.sets == expected)
        return;
    if (f.sets->size() != expected->size())
        fail(ErrorKind::SupportMismatch, "ensemble has " + std::to_string(f.sets->size()) + " sets, expected " +
                                             std::to_string(expected->size()));
    for (std::size_t s = 0; s < expected->size(); ++s)
        if (f.sets->content[s] != expected->content[s])
            fail(ErrorKind::SupportMismatch, "ensemble set " + std::to_string(s) + " has content " +
                                                 face_label(f.sets->content[s]) + ", expected " +
                                                 face_label(expected->content[s]));
}

bool agree_on(const Ensemble& f, std::size_t s1, std::size_t s2, std::span<const int> part)
{
    for (int v : part)
        if (f.value(s1, v) != f.value(s2, v))
            return false;
    return true;
}

std::size_t hamming_on(const Ensemble& f, std::size_t s1, std::size_t s2, std::span<const int> part)
{
    std::size_t n = 0;
    for (int v : part)
        n += f.value(s1, v) != f.value(s2, v) ? 1 : 0;
    return n;
}

/** Sum of squared group masses when sets are grouped by their restriction to `part`. */
double collision(const Ensemble& f, const std::vector<std::pair<std::size_t, double>>& sets,
                 std::span<const int> part)
{
    std::map<std::vector<Symbol>, double> groups;
    for (const auto& [s, p] : sets)
        groups[f.restrict_to(s, part)] += p;
    double out = 0.0;
    for (const auto& [key, p] : groups)
        out += p * p;
    return out;
}

void check_alphabet(int alphabet)
{
    if (alphabet < 1 || alphabet > 1 << 20)
        fail(ErrorKind::ParameterRange, "alphabet size must be in [1, 2^20]");
}

}  // namespace

Symbol Ensemble::value(std::size_t s, int v) const
{
    const Face& c = sets->content[s];
    auto it = std::lower_bound(c.begin(), c.end(), v);
    if (it == c.end() || *it != v)
        fail(ErrorKind::InvalidInput, "vertex " + std::to_string(v) + " is not in set " + std::to_string(s));
    return values[s][static_cast<std::size_t>(it - c.begin())];
}

std::vector<Symbol> Ensemble::restrict_to(std::size_t s, std::span<const int> part) const
{
    std::vector<Symbol> out;
    out.reserve(part.size());
    const Face& c = sets->content[s];
    auto it = c.begin();
    for (int v : part) {
        it = std::lower_bound(it, c.end(), v);
        if (it == c.end() || *it != v)
            fail(ErrorKind::InvalidInput, "vertex " + std::to_string(v) + " is not in set " + std::to_string(s));
        out.push_back(values[s][static_cast<std::size_t>(it - c.begin())]);
    }
    return out;
}

Ensemble perfect_ensemble(const SetLayerPtr& sets, const GlobalFunction& g, int alphabet)
{
    check_alphabet(alphabet);
    Ensemble f;
    f.alphabet = alphabet;
    f.sets = sets;
    f.values.resize(sets->size());
    for (std::size_t s = 0; s < sets->size(); ++s)
        for (int v : sets->content[s]) {
            const auto i = static_cast<std::size_t>(v);
            if (i >= g.size() || g[i] < 0 || g[i] >= alphabet)
                fail(ErrorKind::PartialGlobal, "global function undefined or out of range at vertex " +
                                                   std::to_string(v));
            f.values[s].push_back(g[i]);
        }
    return f;
}

Ensemble perfect_ensemble(const StavInstance& x, const GlobalFunction& g, int alphabet)
{
    if (!x.materialized)
        fail(ErrorKind::SizeCap, "STAV sets were not materialized");
    return perfect_ensemble(x.S, g, alphabet);
}

GlobalFunction random_global(const StavInstance& x, int alphabet, std::uint64_t seed)
{
    check_alphabet(alphabet);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Symbol> pick(0, alphabet - 1);
    GlobalFunction g(x.n_vertices, -1);
    for (std::size_t v = 0; v < x.n_vertices; ++v)
        if (x.ground.empty() || x.ground[v])
            g[v] = pick(rng);
    return g;
}

Ensemble corrupt(const Ensemble& f, double alpha, CorruptionMode mode, std::uint64_t seed)
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        fail(ErrorKind::ParameterRange, "alpha must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution hit(alpha);
    std::uniform_int_distribution<Symbol> symbol(0, f.alphabet - 1);
    Ensemble out = f;
    for (auto& vals : out.values) {
        if (!hit(rng) || vals.empty())
            continue;
        if (mode == CorruptionMode::ResampleSet) {
            for (auto& x : vals)
                x = symbol(rng);
            continue;
        }
        if (f.alphabet < 2)
            continue;
        std::uniform_int_distribution<std::size_t> coord(0, vals.size() - 1);
        std::uniform_int_distribution<Symbol> other(0, f.alphabet - 2);
        auto& x = vals[coord(rng)];
        const Symbol y = other(rng);
        x = y >= x ? y + 1 : y;
    }
    return out;
}

Ensemble random_ensemble(const SetLayerPtr& sets, int alphabet, std::uint64_t seed)
{
    check_alphabet(alphabet);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Symbol> symbol(0, alphabet - 1);
    Ensemble f;
    f.alphabet = alphabet;
    f.sets = sets;
    f.values.resize(sets->size());
    for (std::size_t s = 0; s < sets->size(); ++s)
        for (std::size_t i = 0; i < sets->content[s].size(); ++i)
            f.values[s].push_back(symbol(rng));
    return f;
}

Ensemble restrict_ensemble(const Ensemble& f, const SetLayerPtr& sets)
{
    std::map<Face, std::size_t> index;
    for (std::size_t s = 0; s < f.sets->size(); ++s)
        index.emplace(f.sets->content[s], s);
    Ensemble out;
    out.alphabet = f.alphabet;
    out.sets = sets;
    out.values.reserve(sets->size());
    for (const auto& c : sets->content) {
        auto it = index.find(c);
        if (it == index.end())
            fail(ErrorKind::SupportMismatch, "ensemble has no set with content " + face_label(c));
        out.values.push_back(f.values[it->second]);
    }
    return out;
}

nlohmann::json ensemble_to_json(const Ensemble& f)
{
    nlohmann::json sets = nlohmann::json::array();
    for (std::size_t s = 0; s < f.size(); ++s)
        sets.push_back({{"s", f.sets->content[s]}, {"values", f.values[s]}});
    return {{"alphabet", f.alphabet}, {"sets", std::move(sets)}};
}

Ensemble ensemble_from_json(const nlohmann::json& j, const SetLayerPtr& sets)
{
    Ensemble f;
    f.sets = sets;
    try {
        f.alphabet = j.at("alphabet").get<int>();
        check_alphabet(f.alphabet);
        const auto& arr = j.at("sets");
        if (arr.size() != sets->size())
            fail(ErrorKind::SupportMismatch, "ensemble lists " + std::to_string(arr.size()) + " sets, expected " +
                                                 std::to_string(sets->size()));
        for (std::size_t s = 0; s < arr.size(); ++s) {
            Face c = arr[s].at("s").get<Face>();
            auto vals = arr[s].at("values").get<std::vector<Symbol>>();
            if (c.size() != vals.size())
                fail(ErrorKind::InvalidInput, "set " + std::to_string(s) + " has mismatched values");
            std::vector<std::size_t> order(c.size());
            for (std::size_t i = 0; i < order.size(); ++i)
                order[i] = i;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c[a] < c[b]; });
            Face sorted;
            std::vector<Symbol> sorted_vals;
            for (auto i : order) {
                sorted.push_back(c[i]);
                sorted_vals.push_back(vals[i]);
            }
            if (sorted != sets->content[s])
                fail(ErrorKind::SupportMismatch, "ensemble set " + std::to_string(s) + " has content " +
                                                     face_label(sorted) + ", expected " +
                                                     face_label(sets->content[s]));
            for (Symbol x : sorted_vals)
                if (x < 0 || x >= f.alphabet)
                    fail(ErrorKind::InvalidInput, "symbol out of range in set " + std::to_string(s));
            f.values.push_back(std::move(sorted_vals));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidInput, std::string("malformed ensemble JSON: ") + e.what());
    }
    return f;
}

nlohmann::json to_json(const TestResult& r)
{
    nlohmann::json j = {{"epsilon", r.epsilon},
                        {"method", r.method},
                        {"full_intersection", r.full_intersection}};
    if (r.method == "monte_carlo") {
        j["samples"] = r.samples;
        j["std_error"] = r.std_error;
    }
    if (!r.per_t.empty())
        j["per_t"] = r.per_t;
    return j;
}

TestResult rejection(const StsDistribution& d, const Ensemble& f, const RejectionOptions& opts)
{
    check_support(d.sets, f);
    TestResult r;
    r.full_intersection = opts.full_intersection;
    const SetLayer& sets = *d.sets;
    const SetLayer& faces = *d.faces;
    auto part_of = [&](std::size_t s1, std::size_t t, std::size_t s2) {
        return opts.full_intersection ? face_intersection(sets.content[s1], sets.content[s2]) : faces.content[t];
    };

    if (opts.mode == RejectionMode::MonteCarlo) {
        if (opts.samples == 0)
            fail(ErrorKind::ParameterRange, "Monte Carlo needs at least one sample");
        r.method = "monte_carlo";
        r.samples = opts.samples;
        std::mt19937_64 rng(opts.seed);
        std::size_t rejects = 0;
        if (d.independent) {
            std::discrete_distribution<std::size_t> pick_t(d.t_prob.begin(), d.t_prob.end());
            std::vector<std::optional<std::discrete_distribution<std::size_t>>> pick_s(d.t_to_s.size());
            for (std::size_t i = 0; i < opts.samples; ++i) {
                const std::size_t t = pick_t(rng);
                auto& ps = pick_s[t];
                if (!ps) {
                    std::vector<double> w;
                    for (const auto& e : d.t_to_s[t])
                        w.push_back(e.second);
                    ps.emplace(w.begin(), w.end());
                }
                const std::size_t s1 = d.t_to_s[t][(*ps)(rng)].first;
                const std::size_t s2 = d.t_to_s[t][(*ps)(rng)].first;
                rejects += agree_on(f, s1, s2, part_of(s1, t, s2)) ? 0 : 1;
            }
        } else {
            std::vector<double> w;
            w.reserve(d.entries.size());
            for (const auto& e : d.entries)
                w.push_back(e.p);
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            for (std::size_t i = 0; i < opts.samples; ++i) {
                const auto& e = d.entries[pick(rng)];
                rejects += agree_on(f, e.s1, e.s2, part_of(e.s1, e.t, e.s2)) ? 0 : 1;
            }
        }
        const double p = static_cast<double>(rejects) / static_cast<double>(opts.samples);
        r.epsilon = p;
        r.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(opts.samples));
        return r;
    }

    std::vector<double> reject_t(faces.size(), 0.0), mass_t(faces.size(), 0.0);
    if (d.independent && !opts.full_intersection) {
        for (std::size_t t = 0; t < faces.size(); ++t) {
            if (!(d.t_prob[t] > 0.0))
                continue;
            mass_t[t] = d.t_prob[t];
            reject_t[t] = d.t_prob[t] * std::max(0.0, 1.0 - collision(f, d.t_to_s[t], faces.content[t]));
        }
    } else {
        check_size_cap(static_cast<double>(d.support_size()), kExactSupportCap, "exact rejection support");
        d.for_each([&](std::size_t s1, std::size_t t, std::size_t s2, double p) {
            mass_t[t] += p;
            if (!agree_on(f, s1, s2, part_of(s1, t, s2)))
                reject_t[t] += p;
        });
    }
    for (std::size_t t = 0; t < faces.size(); ++t)
        r.epsilon += reject_t[t];
    r.epsilon = std::clamp(r.epsilon, 0.0, 1.0);
    if (opts.per_t) {
        r.per_t.resize(faces.size());
        for (std::size_t t = 0; t < faces.size(); ++t)
            r.per_t[t] = mass_t[t] > 0.0 ? reject_t[t] / mass_t[t] : 0.0;
    }
    return r;
}

TestResult rejection(const StavInstance& x, const Ensemble& f, const RejectionOptions& opts)
{
    if (!x.materialized)
        fail(ErrorKind::SizeCap, "STAV tables were not materialized");
    return rejection(x.sts, f, opts);
}

double set_distance(const Ensemble& f, std::size_t s, const GlobalFunction& g)
{
    const Face& c = f.sets->content[s];
    std::size_t defined = 0, diff = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto v = static_cast<std::size_t>(c[i]);
        if (v >= g.size() || g[v] < 0)
            continue;
        ++defined;
        diff += f.values[s][i] != g[v] ? 1 : 0;
    }
    return defined ? static_cast<double>(diff) / static_cast<double>(defined) : 0.0;
}

double dist_gamma(const std::vector<double>& s_measure, const Ensemble& f, const GlobalFunction& g, double gamma)
{
    if (s_measure.size() != f.size())
        fail(ErrorKind::SupportMismatch, "set measure and ensemble sizes differ");
    double out = 0.0;
    for (std::size_t s = 0; s < f.size(); ++s)
        if (set_distance(f, s, g) > gamma)
            out += s_measure[s];
    return out;
}

double dist_gamma(const StavInstance& x, const Ensemble& f, const GlobalFunction& g, double gamma)
{
    check_support(x.S, f);
    return dist_gamma(x.s_prob, f, g, gamma);
}

BruteForceResult dist_to_perfect_bruteforce(const StavInstance& x, const Ensemble& f, double gamma)
{
    check_support(x.S, f);
    std::vector<char> covered(x.n_vertices, 0);
    for (const auto& c : x.S->content)
        for (int v : c)
            covered[static_cast<std::size_t>(v)] = 1;
    std::vector<std::size_t> verts;
    for (std::size_t v = 0; v < x.n_vertices; ++v)
        if (covered[v] && (x.ground.empty() || x.ground[v]))
            verts.push_back(v);
    const double candidates = std::pow(static_cast<double>(f.alphabet), static_cast<double>(verts.size()));
    check_size_cap(candidates, 10'000'000, "global functions to enumerate");

    BruteForceResult best;
    best.distance = 2.0;
    GlobalFunction g(x.n_vertices, -1);
    for (auto v : verts)
        g[v] = 0;
    while (true) {
        ++best.candidates;
        const double dist = dist_gamma(x.s_prob, f, g, gamma);
        if (dist < best.distance) {
            best.distance = dist;
            best.best = g;
        }
        std::size_t i = 0;
        for (; i < verts.size(); ++i) {
            if (++g[verts[i]] < f.alphabet)
                break;
            g[verts[i]] = 0;
        }
        if (i == verts.size())
            break;
    }
    return best;
}

DeltaEnsembleResult delta_ensemble_check(const StsDistribution& d, const Ensemble& f, double delta)
{
    check_support(d.sets, f);
    check_size_cap(static_cast<double>(d.support_size()), kExactSupportCap, "delta-ensemble support");
    DeltaEnsembleResult r;
    d.for_each([&](std::size_t s1, std::size_t t, std::size_t s2, double p) {
        if (!(p > 0.0))
            return;
        ++r.checked;
        const Face& tc = d.faces->content[t];
        const std::size_t h = hamming_on(f, s1, s2, tc);
        if (h == 0)
            return;
        const double dist = static_cast<double>(h) / static_cast<double>(tc.size());
        r.min_distance = std::min(r.min_distance, dist);
        if (dist <= delta && r.pass) {
            r.pass = false;
            r.witness = StsEntry{s1, t, s2, p};
        }
    });
    return r;
}

nlohmann::json to_json(const SurpriseResult& r)
{
    return {{"xi", r.xi}, {"differ_probability", r.differ_probability}, {"empty_conditioning", r.empty_conditioning}};
}

SurpriseResult surprise(const StavInstance& x, const Ensemble& f)
{
    if (!x.materialized)
        fail(ErrorKind::SizeCap, "STAV tables were not materialized");
    check_support(x.S, f);
    const StsDistribution& d = x.sts;
    double differ = 0.0, joint = 0.0;
    if (d.independent) {
        for (std::size_t t = 0; t < d.t_to_s.size(); ++t) {
            if (!(d.t_prob[t] > 0.0))
                continue;
            const auto& sets = d.t_to_s[t];
            differ += d.t_prob[t] * std::max(0.0, 1.0 - collision(f, sets, x.T->content[t]));
            for (const auto& e : x.t_to_av[t]) {
                const Face& a = x.A->content[e.a];
                const double agree_a = collision(f, sets, a);
                const double agree_av = collision(f, sets, face_insert(a, static_cast<int>(e.v)));
                joint += d.t_prob[t] * e.p * std::max(0.0, agree_a - agree_av);
            }
        }
    } else {
        for (const auto& s : d.entries) {
            if (!(s.p > 0.0) || agree_on(f, s.s1, s.s2, x.T->content[s.t]))
                continue;
            differ += s.p;
            for (const auto& e : x.t_to_av[s.t])
                if (agree_on(f, s.s1, s.s2, x.A->content[e.a]) &&
                    f.value(s.s1, static_cast<int>(e.v)) != f.value(s.s2, static_cast<int>(e.v)))
                    joint += s.p * e.p;
        }
    }
    SurpriseResult r;
    r.differ_probability = differ;
    if (!(differ > 1e-15)) {
        r.empty_conditioning = true;
        return r;
    }
    r.xi = std::clamp(joint / differ, 0.0, 1.0);
    return r;
}

NeighborhoodTestResult weak_neighborhood_tests(const StavInstance& x, const Ensemble& f)
{
    if (x.kind != StavKind::Neighborhood)
        fail(ErrorKind::InvalidInput, "weak neighborhood tests need a neighborhood STAV");
    NeighborhoodTestResult r;
    r.weak = rejection(x, f);
    RejectionOptions full;
    full.full_intersection = true;
    r.full = rejection(x, f, full);
    return r;
}

NeighborhoodTestResult weak_neighborhood_tests(const Complex& c, int l, int k, const Ensemble& f,
                                               NeighborhoodMode mode)
{
    return weak_neighborhood_tests(neighborhood_stav(c, l, k, mode), f);
}

StsDistribution up2k_distribution(const Complex& c, int k, int t_level)
{
    if (k < 0 || 2 * k > c.dim())
        fail(ErrorKind::ParameterRange, "up2k_distribution needs 0 <= 2k <= dim");
    if (t_level < -1 || t_level > k)
        fail(ErrorKind::ParameterRange, "up2k_distribution needs -1 <= t_level <= k");
    const LevelIndex& r_level = c.level(2 * k);
    const LevelIndex& s_level = c.level(k);
    const int rs = 2 * k + 1, ss = k + 1;

    std::map<Face, std::size_t> t_index;
    auto faces = std::make_shared<SetLayer>();
    auto t_id = [&](const Face& t) {
        auto [it, fresh] = t_index.emplace(t, faces->content.size());
        if (fresh)
            faces->content.push_back(t);
        return it->second;
    };
    if (t_level >= 0) {
        const LevelIndex& tl = c.level(t_level);
        for (std::size_t i = 0; i < tl.size(); ++i)
            t_id(tl.face_vec(i));
    }

    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> joint;
    for (std::size_t r = 0; r < r_level.size(); ++r) {
        const double wr = r_level.measure(r);
        const Face rf = r_level.face_vec(r);
        std::vector<Face> subsets;
        for_each_subset(rf, ss, [&](const Face& s) { subsets.push_back(s); });
        if (t_level < 0) {
            const double p = wr / (static_cast<double>(subsets.size()) * static_cast<double>(subsets.size()));
            for (const auto& s1 : subsets)
                for (const auto& s2 : subsets) {
                    const std::size_t i1 = static_cast<std::size_t>(s_level.find(s1));
                    const std::size_t i2 = static_cast<std::size_t>(s_level.find(s2));
                    joint[{i1, t_id(face_intersection(s1, s2)), i2}] += p;
                }
            continue;
        }
        const int ts = t_level + 1;
        const double per_t = wr / binomial_d(rs, ts);
        const double per_s = 1.0 / binomial_d(rs - ts, ss - ts);
        for_each_subset(rf, ts, [&](const Face& t) {
            const std::size_t ti = t_id(t);
            std::vector<std::size_t> above;
            for (const auto& s : subsets)
                if (is_subset(t, s))
                    above.push_back(static_cast<std::size_t>(s_level.find(s)));
            for (auto i1 : above)
                for (auto i2 : above)
                    joint[{i1, ti, i2}] += per_t * per_s * per_s;
        });
    }

    StsDistribution d;
    d.n_vertices = static_cast<std::size_t>(c.n_vertices());
    auto sets = std::make_shared<SetLayer>();
    for (std::size_t i = 0; i < s_level.size(); ++i)
        sets->content.push_back(s_level.face_vec(i));
    d.sets = sets;
    d.faces = faces;
    d.independent = false;
    double total = 0.0;
    for (const auto& [key, p] : joint)
        total += p;
    d.entries.reserve(joint.size());
    for (const auto& [key, p] : joint)
        d.entries.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), p / total});
    return d;
}

}  // namespace hdx
