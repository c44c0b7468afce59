#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "hdx/agreement.hpp"
#include "hdx/complex.hpp"
#include "hdx/decoder.hpp"
#include "hdx/error.hpp"
#include "hdx/grassmann.hpp"
#include "hdx/spectra.hpp"
#include "hdx/stav.hpp"
#include "hdx/walks.hpp"

#include "manifest.hpp"

using nlohmann::json;
using namespace hdx;
using hdx::cli::RunManifest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitSizeCap = 2;

struct Common {
    std::string format = "json";
    std::string report;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    bool record_time = false;
    bool quiet = false;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"json", "text", "csv"}))
        ->capture_default_str();
    sub->add_option("-o,--report", c.report, "Write the report to this file instead of stdout");
    sub->add_option("--threads", c.threads, "Worker threads (recorded in the manifest)")->capture_default_str();
    sub->add_flag("--record-time", c.record_time, "Embed wall time in the manifest");
    sub->add_flag("--quiet", c.quiet, "Only log errors");
}

std::vector<int> parse_ints(const std::string& s, char sep = ',')
{
    std::vector<int> out;
    if (s.empty())
        return out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, sep)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(tok, &used));
            if (used != tok.size())
                throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            fail(ErrorKind::InvalidInput, "cannot parse integer list '" + s + "'");
        }
    }
    return out;
}

json read_json_file(const std::string& path, RunManifest& m)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::InvalidInput, "cannot open " + path);
    m.add_input(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidInput, path + ": malformed JSON: " + e.what());
    }
}

Complex load_complex(const std::string& path, RunManifest& m)
{
    return complex_from_json(read_json_file(path, m));
}

void flatten(const json& j, const std::string& prefix, std::ostream& out)
{
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
        for (std::size_t i = 0; i < j.size(); ++i)
            flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else {
        out << prefix << ": " << j.dump() << "\n";
    }
}

std::string csv_quote(const std::string& s)
{
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

void write_text(const std::string& path, const std::string& body)
{
    if (path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(path);
    if (!out)
        fail(ErrorKind::InvalidInput, "cannot write " + path);
    out << body;
}

/** Emit a structured report; `csv` is used when --format csv is requested. */
void emit(json report, const Common& c, const RunManifest& m, const std::string& csv = {})
{
    report["manifest"] = m.to_json();
    if (c.format == "csv") {
        if (csv.empty())
            fail(ErrorKind::InvalidInput, "this subcommand has no CSV table; use --format json or text");
        write_text(c.report, csv);
        return;
    }
    if (c.format == "text") {
        std::ostringstream out;
        flatten(report, "", out);
        write_text(c.report, out.str());
        return;
    }
    write_text(c.report, report.dump(2) + "\n");
}

RunManifest make_manifest(const CLI::App* sub, const Common& c, int argc, char** argv)
{
    RunManifest m(sub->get_name(), std::vector<std::string>(argv, argv + argc));
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->count() == 0 || opt->get_name() == "--help")
            continue;
        const auto& res = opt->results();
        std::string name = opt->get_name();
        if (res.empty())
            m.set_flag(name, true);
        else if (res.size() == 1)
            m.set_flag(name, res.front());
        else
            m.set_flag(name, res);
    }
    m.set_threads(c.threads);
    m.record_time(c.record_time);
    return m;
}

// ---------------------------------------------------------------- build

struct BuildOpts {
    std::vector<int> complete;
    std::string partite;
    std::string matroid;
    int truncation = -1;
    std::string input;
    std::string link;
    int skeleton = -1;
};

int run_build(const BuildOpts& o, const Common& c, RunManifest& m)
{
    std::optional<Complex> cx;
    if (!o.complete.empty())
        cx = complete_complex(o.complete.at(0), o.complete.at(1));
    else if (!o.partite.empty())
        cx = partite_complete_complex(parse_ints(o.partite));
    else if (!o.matroid.empty()) {
        std::vector<std::pair<int, int>> edges;
        std::stringstream in(o.matroid);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            auto ends = parse_ints(tok, '-');
            if (ends.size() != 2)
                fail(ErrorKind::InvalidInput, "matroid edges are written u-v, got '" + tok + "'");
            edges.emplace_back(ends[0], ends[1]);
        }
        if (o.truncation < 0)
            fail(ErrorKind::InvalidInput, "--matroid needs --truncation");
        cx = graphic_matroid_complex(edges, o.truncation);
    } else if (!o.input.empty())
        cx = load_complex(o.input, m);
    else
        fail(ErrorKind::InvalidInput, "choose one of --complete, --partite, --matroid or --input");

    if (!o.link.empty())
        cx = link(*cx, parse_ints(o.link));
    if (o.skeleton >= 0)
        cx = skeleton(*cx, o.skeleton);
    json out = complex_to_json(*cx);
    if (!cx->labels().empty() && !o.link.empty())
        out["labels"] = cx->labels();
    emit(out, c, m);
    return kExitOk;
}

// ---------------------------------------------------------------- spectrum

struct WalkOpts {
    std::string walk = "complement";
    int k = 0, l = 0, l1 = 0, l2 = 0, j = 1;
    std::string colors_i = "0", colors_j = "1";
    bool lazy = false;
};

void add_walk_options(CLI::App* sub, WalkOpts& w)
{
    sub->add_option("--k", w.k, "Level k")->capture_default_str();
    sub->add_option("--l", w.l, "Level l")->capture_default_str();
    sub->add_option("--l1", w.l1, "Complement walk source level")->capture_default_str();
    sub->add_option("--l2", w.l2, "Complement walk target level")->capture_default_str();
    sub->add_option("--j", w.j, "Fixed-union step size")->capture_default_str();
    sub->add_option("--I", w.colors_i, "Color set I, comma separated")->capture_default_str();
    sub->add_option("--J", w.colors_j, "Color set J, comma separated")->capture_default_str();
}

MarkovOperator build_walk(const Complex& cx, const WalkOpts& w, json& params)
{
    const std::string& n = w.walk;
    if (n == "up") {
        params = {{"k", w.k}};
        return up_operator(cx, w.k);
    }
    if (n == "down") {
        params = {{"k", w.k}};
        return down_operator(cx, w.k);
    }
    if (n == "containment") {
        params = {{"k", w.k}, {"l", w.l}};
        return containment_operator(cx, w.k, w.l);
    }
    if (n == "lower") {
        params = {{"k", w.k}, {"l", w.l}};
        return lower_walk(cx, w.k, w.l);
    }
    if (n == "upper") {
        params = {{"l", w.l}, {"lazy", w.lazy}};
        return upper_walk(cx, w.l, w.lazy);
    }
    if (n == "complement") {
        params = {{"l1", w.l1}, {"l2", w.l2}};
        return complement_walk(cx, w.l1, w.l2);
    }
    if (n == "colored") {
        params = {{"I", parse_ints(w.colors_i)}, {"J", parse_ints(w.colors_j)}};
        return colored_walk(cx, parse_ints(w.colors_i), parse_ints(w.colors_j));
    }
    if (n == "fixed-union") {
        params = {{"l", w.l}, {"j", w.j}};
        return fixed_union_walk(cx, w.l, w.j);
    }
    fail(ErrorKind::InvalidInput, "unknown walk '" + n + "'");
}

linalg::Method parse_method(const std::string& s)
{
    return s == "dense" ? linalg::Method::Dense : s == "iterative" ? linalg::Method::Iterative : linalg::Method::Auto;
}

int run_spectrum(const std::string& path, const WalkOpts& w, const std::string& method, const std::string& csv_path,
                 const Common& c, RunManifest& m)
{
    Complex cx = load_complex(path, m);
    json params;
    MarkovOperator op = build_walk(cx, w, params);
    SpectralReport r = op.is_square() ? square_spectrum(op, parse_method(method))
                                      : bipartite_norm(op, parse_method(method));
    std::ostringstream csv;
    write_csv(op, csv);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out)
            fail(ErrorKind::InvalidInput, "cannot write " + csv_path);
        out << csv.str();
    }
    json report = {{"walk", w.walk},
                   {"params", params},
                   {"rows", op.rows()},
                   {"cols", op.cols()},
                   {"square", op.is_square()},
                   {"row_sum_error", op.row_sum_error()},
                   {"marginal_error", op.marginal_error()},
                   {"spectrum", to_json(r)}};
    emit(report, c, m, csv.str());
    return kExitOk;
}

// ---------------------------------------------------------------- verify

struct VerifyOpts {
    bool all = false;
    std::string bound;
    WalkOpts w;
    std::optional<double> lambda;
    bool strict = false;
};

json row(const std::string& name, const json& params, const BoundCheck& b)
{
    json r = to_json(b);
    r["name"] = name;
    r["params"] = params;
    return r;
}

int run_verify(const std::string& path, const VerifyOpts& o, const Common& c, RunManifest& m)
{
    Complex cx = load_complex(path, m);
    json rows = json::array();
    const int d = cx.dim();
    auto want = [&](const std::string& name) { return o.all || o.bound == name; };
    if (!o.all && o.bound.empty())
        fail(ErrorKind::InvalidInput, "choose --all or --bound NAME");

    if (want("link")) {
        LinkExpansion two = link_expansion(cx, true), one = link_expansion(cx, false);
        rows.push_back({{"name", "link"},
                        {"pass", true},
                        {"applicable", true},
                        {"two_sided", to_json(two)},
                        {"one_sided", to_json(one)}});
    }
    if (want("complement")) {
        if (o.all) {
            for (int l1 = 0; l1 <= d; ++l1)
                for (int l2 = l1; l1 + l2 + 1 <= d; ++l2)
                    rows.push_back(row("complement", {{"l1", l1}, {"l2", l2}},
                                       verify_complement_bound(cx, l1, l2, o.lambda)));
        } else {
            rows.push_back(row("complement", {{"l1", o.w.l1}, {"l2", o.w.l2}},
                               verify_complement_bound(cx, o.w.l1, o.w.l2, o.lambda)));
        }
    }
    if (want("fixed-union")) {
        if (o.all) {
            for (int l = 0; l < d; ++l)
                for (int j = 1; j <= l + 1 && l + j + 1 <= d; ++j)
                    rows.push_back(row("fixed-union", {{"l", l}, {"j", j}},
                                       verify_fixed_union_bound(cx, l, j, o.lambda)));
        } else {
            rows.push_back(row("fixed-union", {{"l", o.w.l}, {"j", o.w.j}},
                               verify_fixed_union_bound(cx, o.w.l, o.w.j, o.lambda)));
        }
    }
    if (want("containment")) {
        if (o.all) {
            for (int k = 0; k < d; ++k)
                rows.push_back(row("containment", {{"k", k}}, verify_containment(cx, k)));
        } else {
            rows.push_back(row("containment", {{"k", o.w.k}}, verify_containment(cx, o.w.k)));
        }
    }
    if (want("colored") && (cx.has_coloring() || !o.all)) {
        auto ci = parse_ints(o.w.colors_i), cj = parse_ints(o.w.colors_j);
        rows.push_back(row("colored", {{"I", ci}, {"J", cj}}, verify_colored_bound(cx, ci, cj, o.lambda)));
    }
    if (want("trickling") && ((cx.has_coloring() && d == 2) || !o.all))
        rows.push_back(row("trickling", json::object(), verify_trickling(cx)));
    if (rows.empty())
        fail(ErrorKind::InvalidInput, "unknown bound '" + o.bound + "'");

    bool all_pass = true;
    std::ostringstream csv;
    csv << "name,params,lhs,rhs,applicable,pass\n";
    for (const auto& r : rows) {
        all_pass = all_pass && r.value("pass", true);
        csv << r["name"].get<std::string>() << "," << csv_quote(r.value("params", json::object()).dump()) << ","
            << r.value("lhs", 0.0) << "," << r.value("rhs", 0.0) << "," << r.value("applicable", true) << ","
            << r.value("pass", true) << "\n";
    }
    emit({{"rows", rows}, {"all_pass", all_pass}}, c, m, csv.str());
    return o.strict && !all_pass ? kExitInvalid : kExitOk;
}

// ---------------------------------------------------------------- mixing

struct MixingOpts {
    std::string dims = "0,0,0";
    double density = 0.3;
    std::optional<std::uint64_t> seed;
};

int run_mixing(const std::string& path, const MixingOpts& o, const Common& c, RunManifest& m)
{
    Complex cx = load_complex(path, m);
    if (!o.seed)
        fail(ErrorKind::InvalidInput, "mixing draws random sets; pass --seed");
    m.set_seed(o.seed);
    const auto dims = parse_ints(o.dims);
    const int n = cx.n_vertices();
    const auto size = static_cast<std::size_t>(std::lround(o.density * n));
    if (size * dims.size() > static_cast<std::size_t>(n))
        fail(ErrorKind::ParameterRange, "disjoint vertex sets do not fit: lower --density");
    std::mt19937_64 rng(*o.seed);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<MixingSet> sets;
    json described = json::array();
    for (std::size_t i = 0; i < dims.size(); ++i) {
        Face verts(perm.begin() + static_cast<long>(i * size), perm.begin() + static_cast<long>((i + 1) * size));
        std::sort(verts.begin(), verts.end());
        MixingSet s;
        s.dim = dims[i];
        if (dims[i] < 0 || dims[i] > cx.dim())
            fail(ErrorKind::ParameterRange, "set dimension outside [0, d]");
        const LevelIndex& lev = cx.level(dims[i]);
        for (std::size_t f = 0; f < lev.size(); ++f)
            if (is_subset(lev.face(f), verts))
                s.faces.push_back(lev.face_vec(f));
        described.push_back({{"dim", dims[i]}, {"vertices", verts}, {"faces", s.faces.size()}});
        sets.push_back(std::move(s));
    }
    MixingReport r = mixing_check(cx, sets);
    emit({{"sets", described}, {"mixing", to_json(r)}}, c, m);
    return kExitOk;
}

// ---------------------------------------------------------------- grassmann

struct GrassmannOpts {
    int q = 2, n = 4, d = 2;
    std::string flavor = "linear";
    std::string walk = "containment";
    int k = 1, l = 0, l1 = 0, l2 = 0;
    int cond_dim = -1;
};

Flavor parse_flavor(const std::string& s)
{
    return s == "affine" ? Flavor::Affine : Flavor::Linear;
}

int run_grassmann(const GrassmannOpts& o, const Common& c, RunManifest& m)
{
    GrassmannPoset p(o.q, o.n, o.d, parse_flavor(o.flavor));
    json levels = json::array();
    for (int k = -1; k <= o.d; ++k) {
        const double closed = level_count(p.flavor(), o.q, o.n, k);
        levels.push_back({{"level", k},
                          {"dimension", level_dimension(p.flavor(), k)},
                          {"count", p.level(k).size()},
                          {"closed_form", closed},
                          {"match", static_cast<double>(p.level(k).size()) == closed}});
    }
    json report = {{"q", o.q}, {"n", o.n}, {"d", o.d}, {"flavor", to_string(p.flavor())}, {"levels", levels}};
    if (o.walk == "containment") {
        SpectralReport r = bipartite_norm(grassmann_containment_walk(p, o.k, o.l));
        report["walk"] = {{"name", "containment"}, {"k", o.k}, {"l", o.l}, {"spectrum", to_json(r)}};
        if (o.k == 1 && o.l == 0) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(o.q));
            report["bound"] = {{"rhs", bound}, {"pass", r.lambda_bip <= bound + kBoundSlack}};
        }
    } else if (o.walk == "complement") {
        Subspace u0 = p.trivial();
        if (o.cond_dim >= 0) {
            const int lev = dimension_level(p.flavor(), o.cond_dim);
            u0 = p.level(lev).front();
        }
        SpectralReport r = square_spectrum(conditioned_complement_walk(p, o.l1, o.l2, u0));
        report["walk"] = {{"name", "complement"},
                          {"l1", o.l1},
                          {"l2", o.l2},
                          {"u0", to_string(u0)},
                          {"spectrum", to_json(r)}};
        if (o.l1 == 0 && o.l2 == 0 && o.n >= 2) {
            const double bound = 4.0 / std::pow(static_cast<double>(o.q), o.n - 2);
            report["bound"] = {{"rhs", bound}, {"pass", r.lambda_bip <= bound + kBoundSlack}};
        }
    } else {
        fail(ErrorKind::InvalidInput, "unknown Grassmann walk '" + o.walk + "'");
    }
    emit(report, c, m);
    return kExitOk;
}

// ---------------------------------------------------------------- STAV selection

struct StavOpts {
    std::string kind = "hdx";
    std::string complex_path;
    std::string stav_file;
    int d = -1, l = 1, k = -1;
    std::string colors_i = "0", colors_j = "1";
    std::string mode = "independent";
    int q = 2, n = 6;
    std::string flavor = "affine";
};

void add_stav_options(CLI::App* sub, StavOpts& s)
{
    sub->add_option("--stav", s.kind, "STAV kind")
        ->check(CLI::IsMember({"hdx", "partite", "neighborhood", "grassmann", "file"}))
        ->capture_default_str();
    sub->add_option("--complex", s.complex_path, "Complex JSON file");
    sub->add_option("--stav-file", s.stav_file, "Custom STAV JSON file (with --stav file)");
    sub->add_option("--d", s.d, "Top level of S (defaults to the complex dimension)");
    sub->add_option("--l", s.l, "Level of T")->capture_default_str();
    sub->add_option("--k", s.k, "Level k (partite sets, neighborhood centers)");
    sub->add_option("--I", s.colors_i, "Color set I")->capture_default_str();
    sub->add_option("--J", s.colors_j, "Color set J")->capture_default_str();
    sub->add_option("--sts-mode", s.mode, "Neighborhood STS")
        ->check(CLI::IsMember({"independent", "complement"}))
        ->capture_default_str();
    sub->add_option("--q", s.q, "Grassmann field size")->capture_default_str();
    sub->add_option("--n", s.n, "Grassmann ambient dimension")->capture_default_str();
    sub->add_option("--flavor", s.flavor, "Grassmann flavor")
        ->check(CLI::IsMember({"linear", "affine"}))
        ->capture_default_str();
}

StavInstance build_stav(const StavOpts& s, RunManifest& m)
{
    if (s.kind == "file") {
        if (s.stav_file.empty())
            fail(ErrorKind::InvalidInput, "--stav file needs --stav-file");
        return stav_from_json(read_json_file(s.stav_file, m));
    }
    if (s.kind == "grassmann") {
        GrassmannPoset p(s.q, s.n, s.d < 0 ? s.n : s.d, parse_flavor(s.flavor));
        return grassmann_stav(p, p.d(), s.l);
    }
    if (s.complex_path.empty())
        fail(ErrorKind::InvalidInput, "--stav " + s.kind + " needs --complex");
    Complex cx = load_complex(s.complex_path, m);
    if (s.kind == "hdx")
        return hdx_stav(cx, s.d < 0 ? cx.dim() : s.d, s.l);
    if (s.kind == "partite")
        return partite_ij_stav(cx, parse_ints(s.colors_i), parse_ints(s.colors_j), s.k < 0 ? cx.dim() : s.k);
    return neighborhood_stav(cx, s.l, s.k < 0 ? 0 : s.k,
                             s.mode == "complement" ? NeighborhoodMode::Complement : NeighborhoodMode::Independent);
}

// ---------------------------------------------------------------- stav-check

struct CheckOpts {
    double gamma = 0.5;
    double r = 1.0;
    bool reduced = false;
    std::size_t spot_checks = 1000;
    std::optional<std::uint64_t> seed;
    std::string dump;
    bool strict = false;
};

int run_stav_check(const StavOpts& s, const CheckOpts& o, const Common& c, RunManifest& m)
{
    StavInstance x = build_stav(s, m);
    StavValidation v = validate(x, 1e-12, o.reduced);
    GoodnessOptions g;
    g.gamma = o.gamma;
    g.r = o.r;
    g.reduced_route = o.reduced;
    // Randomized spot checks only run with an explicit seed.
    g.spot_checks = o.seed ? o.spot_checks : 0;
    g.seed = o.seed.value_or(0);
    m.set_seed(o.seed);
    GoodnessReport gr = goodness_check(x, g);
    if (!o.dump.empty()) {
        std::ofstream out(o.dump);
        if (!out)
            fail(ErrorKind::InvalidInput, "cannot write " + o.dump);
        out << stav_to_json(x).dump() << "\n";
    }
    json report = {{"stav", to_string(x.kind)},
                   {"params", x.params},
                   {"materialized", x.materialized},
                   {"sizes",
                    {{"S", x.S ? x.S->size() : 0},
                     {"T", x.T ? x.T->size() : 0},
                     {"A", x.A ? x.A->size() : 0},
                     {"V", x.n_vertices},
                     {"vasa", x.vasa.size()}}},
                   {"validation", to_json(v)},
                   {"goodness", to_json(gr)}};
    emit(report, c, m);
    return o.strict && !(v.pass && gr.pass) ? kExitInvalid : kExitOk;
}

// ---------------------------------------------------------------- ensembles

struct EnsembleOpts {
    std::string file;
    std::optional<std::uint64_t> plant_seed;
    int alphabet = 2;
    double alpha = 0.0;
    std::string corruption = "flip";
    std::optional<std::uint64_t> corrupt_seed;
    std::string save;
};

void add_ensemble_options(CLI::App* sub, EnsembleOpts& e)
{
    sub->add_option("--ensemble", e.file, "Ensemble JSON file");
    sub->add_option("--plant-seed", e.plant_seed, "Plant a random global function with this seed");
    sub->add_option("--alphabet", e.alphabet, "Alphabet size for planting")->capture_default_str();
    sub->add_option("--alpha", e.alpha, "Per-set corruption probability")->capture_default_str();
    sub->add_option("--corruption", e.corruption, "Corruption mode")
        ->check(CLI::IsMember({"flip", "resample"}))
        ->capture_default_str();
    sub->add_option("--corrupt-seed", e.corrupt_seed, "Corruption seed (defaults to the plant seed)");
    sub->add_option("--save-ensemble", e.save, "Write the ensemble used to this file");
}

struct LoadedEnsemble {
    Ensemble f;
    std::optional<GlobalFunction> planted;
};

GlobalFunction plant_global(std::size_t n, const std::vector<char>& ground, int alphabet, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Symbol> pick(0, alphabet - 1);
    GlobalFunction g(n, -1);
    for (std::size_t v = 0; v < n; ++v)
        if (ground.empty() || ground[v])
            g[v] = pick(rng);
    return g;
}

LoadedEnsemble load_ensemble(const EnsembleOpts& e, const SetLayerPtr& sets, std::size_t n_vertices,
                             const std::vector<char>& ground, RunManifest& m)
{
    LoadedEnsemble out;
    if (!e.file.empty()) {
        out.f = ensemble_from_json(read_json_file(e.file, m), sets);
    } else if (e.plant_seed) {
        GlobalFunction g = plant_global(n_vertices, ground, e.alphabet, *e.plant_seed);
        Ensemble f = perfect_ensemble(sets, g, e.alphabet);
        out.f = corrupt(f, e.alpha, e.corruption == "resample" ? CorruptionMode::ResampleSet : CorruptionMode::FlipOne,
                        e.corrupt_seed.value_or(*e.plant_seed));
        out.planted = std::move(g);
    } else {
        fail(ErrorKind::InvalidInput, "pass --ensemble FILE or --plant-seed N");
    }
    if (!e.save.empty()) {
        std::ofstream o(e.save);
        if (!o)
            fail(ErrorKind::InvalidInput, "cannot write " + e.save);
        o << ensemble_to_json(out.f).dump() << "\n";
    }
    return out;
}

SetLayerPtr level_layer(const Complex& cx, int k)
{
    auto layer = std::make_shared<SetLayer>();
    const LevelIndex& lev = cx.level(k);
    for (std::size_t i = 0; i < lev.size(); ++i)
        layer->content.push_back(lev.face_vec(i));
    return layer;
}

// ---------------------------------------------------------------- agree-run

struct AgreeOpts {
    std::string mode = "exact";
    std::size_t samples = 100000;
    std::optional<std::uint64_t> seed;
    bool full_intersection = false;
    bool per_t = false;
    double gamma = 0.0;
};

int run_agree(const StavOpts& s, const EnsembleOpts& e, const AgreeOpts& o, const Common& c, RunManifest& m)
{
    StavInstance x = build_stav(s, m);
    if (!x.materialized)
        fail(ErrorKind::SizeCap, "STAV tables exceed the cap; raise HDX_SIZE_CAP to run ensembles");
    LoadedEnsemble le = load_ensemble(e, x.S, x.n_vertices, x.ground, m);
    RejectionOptions ro;
    ro.full_intersection = o.full_intersection;
    ro.per_t = o.per_t;
    if (o.mode == "mc") {
        if (!o.seed)
            fail(ErrorKind::InvalidInput, "--mode mc needs --seed");
        ro.mode = RejectionMode::MonteCarlo;
        ro.samples = o.samples;
        ro.seed = *o.seed;
    }
    m.set_seed(o.seed ? o.seed : e.plant_seed);
    TestResult r = rejection(x, le.f, ro);
    json report = {{"stav", to_string(x.kind)}, {"params", x.params}, {"rejection", to_json(r)}};
    report["surprise"] = to_json(surprise(x, le.f));
    if (x.kind == StavKind::Neighborhood) {
        NeighborhoodTestResult nt = weak_neighborhood_tests(x, le.f);
        report["neighborhood"] = {{"weak", to_json(nt.weak)}, {"full", to_json(nt.full)}};
    }
    if (le.planted) {
        report["planted_distance"] = dist_gamma(x, le.f, *le.planted, o.gamma);
        report["gamma"] = o.gamma;
    }
    std::ostringstream csv;
    if (o.per_t) {
        csv << "t,face,p_t,rejection\n";
        for (std::size_t t = 0; t < r.per_t.size(); ++t)
            csv << t << "," << csv_quote(x.T->label(t)) << "," << x.sts.t_prob.at(t) << "," << r.per_t[t] << "\n";
    }
    emit(report, c, m, csv.str());
    return kExitOk;
}

// ---------------------------------------------------------------- decode

struct DecodeOpts {
    double tau_global = 1.0 / 40.0;
    double tau_local = 1.0 / 20.0;
    bool include_functions = false;
    std::uint64_t tuple_seed = 1;
};

int run_decode(const StavOpts& s, const EnsembleOpts& e, const DecodeOpts& o, const Common& c, RunManifest& m)
{
    DecoderConfig cfg{o.tau_global, o.tau_local};
    cfg.validate();
    m.set_seed(e.plant_seed);
    json report;
    if (s.kind == "partite") {
        if (s.complex_path.empty())
            fail(ErrorKind::InvalidInput, "--stav partite needs --complex");
        Complex cx = load_complex(s.complex_path, m);
        const int k = s.k < 0 ? cx.dim() : s.k;
        if (k < 0 || k > cx.dim())
            fail(ErrorKind::ParameterRange, "--k outside [0, d]");
        LoadedEnsemble le = load_ensemble(e, level_layer(cx, k), static_cast<std::size_t>(cx.n_vertices()), {}, m);
        PartiteDecodeOptions po;
        po.decoder = cfg;
        po.seed = o.tuple_seed;
        PartiteDecodeOutput out = partite_decode(cx, k, s.l, le.f, po);
        json tried = json::array();
        for (const auto& t : out.tried)
            tried.push_back(to_json(t));
        report = {{"stav", "partite"},
                  {"k", k},
                  {"l", s.l},
                  {"epsilon", out.epsilon},
                  {"distance", out.distance},
                  {"tuple", to_json(out.tuple)},
                  {"tried", tried},
                  {"first", to_json(out.first, o.include_functions)},
                  {"second", to_json(out.second, o.include_functions)}};
        report["G"] = out.G;
        if (le.planted)
            report["matches_planted"] = out.G == *le.planted;
    } else {
        StavInstance x = build_stav(s, m);
        if (!x.materialized)
            fail(ErrorKind::SizeCap, "STAV tables exceed the cap; raise HDX_SIZE_CAP to decode");
        LoadedEnsemble le = load_ensemble(e, x.S, x.n_vertices, x.ground, m);
        DecodeOutput out = global_decode(x, le.f, cfg);
        report = {{"stav", to_string(x.kind)}, {"params", x.params}, {"decode", to_json(out, o.include_functions)}};
        if (le.planted) {
            report["matches_planted"] = out.G == *le.planted;
            report["planted_distance"] = dist_gamma(x, le.f, *le.planted, 0.0);
        }
    }
    emit(report, c, m);
    return kExitOk;
}

int exit_code_for(const Error& e)
{
    return e.kind() == ErrorKind::SizeCap || e.kind() == ErrorKind::TooLarge ? kExitSizeCap : kExitInvalid;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hdx: high-dimensional expander walks, spectral bounds, agreement tests and decoding"};
    app.require_subcommand(1);
    app.set_version_flag("--version", HDX_VERSION);
    Common common;

    BuildOpts build;
    auto* s_build = app.add_subcommand("build", "Construct a weighted complex and write it as JSON");
    s_build->add_option("--complete", build.complete, "Complete complex: n d")->expected(2);
    s_build->add_option("--partite", build.partite, "Complete partite complex with these part sizes, e.g. 2,3,2");
    s_build->add_option("--matroid", build.matroid, "Graphic matroid on edges u-v,u-v,...");
    s_build->add_option("--truncation", build.truncation, "Matroid truncation dimension");
    s_build->add_option("--input", build.input, "Normalize an existing complex JSON");
    s_build->add_option("--link", build.link, "Replace the complex by the link of this face");
    s_build->add_option("--skeleton", build.skeleton, "Keep the k-skeleton");
    add_common(s_build, common);

    std::string complex_path, method = "auto", csv_path;
    WalkOpts walk;
    auto* s_spec = app.add_subcommand("spectrum", "Spectrum of a walk on a complex");
    s_spec->add_option("complex", complex_path, "Complex JSON file")->required();
    s_spec->add_option("--walk", walk.walk, "Walk")
        ->check(CLI::IsMember({"up", "down", "containment", "lower", "upper", "complement", "colored", "fixed-union"}))
        ->capture_default_str();
    add_walk_options(s_spec, walk);
    s_spec->add_flag("--lazy", walk.lazy, "Lazy upper walk");
    s_spec->add_option("--method", method, "Eigensolver")
        ->check(CLI::IsMember({"auto", "dense", "iterative"}))
        ->capture_default_str();
    s_spec->add_option("--csv", csv_path, "Also write the operator as CSV triplets");
    add_common(s_spec, common);

    VerifyOpts verify;
    auto* s_verify = app.add_subcommand("verify", "Check the spectral bounds on a complex");
    s_verify->add_option("complex", complex_path, "Complex JSON file")->required();
    s_verify->add_flag("--all", verify.all, "Run every applicable verifier");
    s_verify->add_option("--bound", verify.bound, "Single verifier")
        ->check(CLI::IsMember({"link", "complement", "colored", "trickling", "fixed-union", "containment"}));
    add_walk_options(s_verify, verify.w);
    s_verify->add_option("--lambda", verify.lambda, "Override the measured link expansion");
    s_verify->add_flag("--strict", verify.strict, "Exit 1 when a check fails");
    add_common(s_verify, common);

    MixingOpts mixing;
    auto* s_mix = app.add_subcommand("mixing", "Mixing-lemma check on random disjoint vertex sets");
    s_mix->add_option("complex", complex_path, "Complex JSON file")->required();
    s_mix->add_option("--dims", mixing.dims, "Dimensions of the sets, comma separated")->capture_default_str();
    s_mix->add_option("--density", mixing.density, "Vertex density of each set")->capture_default_str();
    s_mix->add_option("--seed", mixing.seed, "Random seed (required)");
    add_common(s_mix, common);

    GrassmannOpts gr;
    auto* s_gr = app.add_subcommand("grassmann", "Grassmann poset level counts and walk spectra");
    s_gr->add_option("--q", gr.q, "Field size")->capture_default_str();
    s_gr->add_option("--n", gr.n, "Ambient dimension")->capture_default_str();
    s_gr->add_option("--d", gr.d, "Top level")->capture_default_str();
    s_gr->add_option("--flavor", gr.flavor, "Poset flavor")
        ->check(CLI::IsMember({"linear", "affine"}))
        ->capture_default_str();
    s_gr->add_option("--walk", gr.walk, "Walk")
        ->check(CLI::IsMember({"containment", "complement"}))
        ->capture_default_str();
    s_gr->add_option("--k", gr.k, "Containment source level")->capture_default_str();
    s_gr->add_option("--l", gr.l, "Containment target level")->capture_default_str();
    s_gr->add_option("--l1", gr.l1, "Complement source level")->capture_default_str();
    s_gr->add_option("--l2", gr.l2, "Complement target level")->capture_default_str();
    s_gr->add_option("--cond-dim", gr.cond_dim, "Dimension of the conditioning subspace u0");
    add_common(s_gr, common);

    StavOpts stav;
    CheckOpts check;
    auto* s_stav = app.add_subcommand("stav-check", "Validate a STAV structure and check goodness");
    add_stav_options(s_stav, stav);
    s_stav->add_option("--gamma", check.gamma, "Goodness parameter gamma")->capture_default_str();
    s_stav->add_option("--r", check.r, "Goodness parameter r")->capture_default_str();
    s_stav->add_flag("--reduced", check.reduced, "Use the reduced route");
    s_stav->add_option("--spot-checks", check.spot_checks, "Sampler spot checks per set")->capture_default_str();
    s_stav->add_option("--seed", check.seed, "Seed for sampler spot checks (they are skipped without it)");
    s_stav->add_option("--dump", check.dump, "Write the STAV JSON to this file");
    s_stav->add_flag("--strict", check.strict, "Exit 1 when validation or goodness fails");
    add_common(s_stav, common);

    EnsembleOpts ens;
    AgreeOpts agree;
    auto* s_agree = app.add_subcommand("agree-run", "Rejection probability and surprise of an ensemble");
    add_stav_options(s_agree, stav);
    add_ensemble_options(s_agree, ens);
    s_agree->add_option("--mode", agree.mode, "Evaluation")
        ->check(CLI::IsMember({"exact", "mc"}))
        ->capture_default_str();
    s_agree->add_option("--samples", agree.samples, "Monte Carlo samples")->capture_default_str();
    s_agree->add_option("--seed", agree.seed, "Monte Carlo seed (required with --mode mc)");
    s_agree->add_flag("--full-intersection", agree.full_intersection, "Compare on the whole intersection");
    s_agree->add_flag("--per-t", agree.per_t, "Report the rejection per t (CSV table)");
    s_agree->add_option("--gamma", agree.gamma, "Distance threshold for the planted distance")->capture_default_str();
    add_common(s_agree, common);

    DecodeOpts dec;
    auto* s_dec = app.add_subcommand("decode", "Plurality decoding of an ensemble");
    add_stav_options(s_dec, stav);
    add_ensemble_options(s_dec, ens);
    s_dec->add_option("--tau-global", dec.tau_global, "Globally-bad threshold")->capture_default_str();
    s_dec->add_option("--tau-local", dec.tau_local, "Locally-bad threshold")->capture_default_str();
    s_dec->add_flag("--include-functions", dec.include_functions, "Include h, g and bad sets in the report");
    s_dec->add_option("--tuple-seed", dec.tuple_seed, "Seed for the color tuple search (partite)")
        ->capture_default_str();
    add_common(s_dec, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n";
        const auto parsed = app.get_subcommands();
        std::cerr << (parsed.empty() ? app.help() : parsed.front()->help());
        return kExitInvalid;
    }

    CLI::App* sub = app.get_subcommands().front();
    spdlog::set_level(common.quiet ? spdlog::level::err : spdlog::level::info);
    Eigen::setNbThreads(static_cast<int>(common.threads));
    RunManifest m = make_manifest(sub, common, argc, argv);

    try {
        if (sub == s_build)
            return run_build(build, common, m);
        if (sub == s_spec)
            return run_spectrum(complex_path, walk, method, csv_path, common, m);
        if (sub == s_verify)
            return run_verify(complex_path, verify, common, m);
        if (sub == s_mix)
            return run_mixing(complex_path, mixing, common, m);
        if (sub == s_gr)
            return run_grassmann(gr, common, m);
        if (sub == s_stav)
            return run_stav_check(stav, check, common, m);
        if (sub == s_agree)
            return run_agree(stav, ens, agree, common, m);
        if (sub == s_dec)
            return run_decode(stav, ens, dec, common, m);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitInvalid;
}
