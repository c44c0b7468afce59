#include "hdx/walks.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hdx/error.hpp"

namespace hdx {

std::string face_label(std::span<const int> f)
{
    std::string out = "[";
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i)
            out += ' ';
        out += std::to_string(f[i]);
    }
    return out + "]";
}

Space level_space(std::shared_ptr<const LevelIndex> level, std::vector<std::size_t> members)
{
    Space sp;
    if (members.empty()) {
        sp.measure = level->measures();
        sp.label = [level](std::size_t i) { return face_label(level->face(i)); };
    } else {
        double total = 0.0;
        for (std::size_t m : members)
            total += level->measure(m);
        for (std::size_t m : members)
            sp.measure.push_back(total > 0 ? level->measure(m) / total : 0.0);
        auto shared = std::make_shared<std::vector<std::size_t>>(std::move(members));
        sp.label = [level, shared](std::size_t i) { return face_label(level->face((*shared)[i])); };
    }
    return sp;
}

BipartiteGraph graph_from_weights(std::size_t n_left, std::size_t n_right, const std::vector<Triplet>& weights,
                                  bool square)
{
    if (square && n_left != n_right)
        fail(ErrorKind::InvalidInput, "square graph needs equal sides");
    BipartiteGraph g;
    g.square = square;
    g.joint.resize(static_cast<Eigen::Index>(n_left), static_cast<Eigen::Index>(n_right));
    g.joint.setFromTriplets(weights.begin(), weights.end());
    g.joint.makeCompressed();
    double total = 0.0;
    for (Eigen::Index k = 0; k < g.joint.nonZeros(); ++k)
        total += g.joint.valuePtr()[k];
    if (!(total > 0.0))
        fail(ErrorKind::EmptyWalk, "graph has no edges");
    g.joint /= total;
    g.left.assign(n_left, 0.0);
    g.right.assign(n_right, 0.0);
    for (Eigen::Index r = 0; r < g.joint.outerSize(); ++r)
        for (SparseMat::InnerIterator it(g.joint, r); it; ++it) {
            g.left[static_cast<std::size_t>(it.row())] += it.value();
            g.right[static_cast<std::size_t>(it.col())] += it.value();
        }
    if (square) {
        SparseMat diff = g.joint - SparseMat(g.joint.transpose());
        double asym = 0.0;
        for (Eigen::Index k = 0; k < diff.nonZeros(); ++k)
            asym = std::max(asym, std::abs(diff.valuePtr()[k]));
        if (asym > 1e-12)
            fail(ErrorKind::InconsistentMarginals, "square graph weights are not symmetric");
    }
    return g;
}

BipartiteGraph transpose(const BipartiteGraph& g)
{
    BipartiteGraph t;
    t.left = g.right;
    t.right = g.left;
    t.joint = SparseMat(g.joint.transpose());
    t.square = g.square;
    return t;
}

MarkovOperator::MarkovOperator(Space source, Space target, SparseMat transition, bool square)
    : source_(std::move(source)), target_(std::move(target)), p_(std::move(transition)), square_(square)
{
    p_.makeCompressed();
}

MarkovOperator MarkovOperator::from_joint(Space source, Space target, const std::vector<Triplet>& weights,
                                          bool square)
{
    const std::size_t nr = source.size(), nc = target.size();
    SparseMat j(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
    j.setFromTriplets(weights.begin(), weights.end());
    j.makeCompressed();
    double total = 0.0;
    std::vector<double> rows(nr, 0.0), cols(nc, 0.0);
    for (Eigen::Index r = 0; r < j.outerSize(); ++r)
        for (SparseMat::InnerIterator it(j, r); it; ++it) {
            rows[static_cast<std::size_t>(r)] += it.value();
            cols[static_cast<std::size_t>(it.col())] += it.value();
            total += it.value();
        }
    if (!(total > 0.0))
        fail(ErrorKind::EmptyWalk, "walk has no transitions");
    for (std::size_t r = 0; r < nr; ++r)
        if (!(rows[r] > 0.0))
            fail(ErrorKind::EmptyWalk, "state " + source.label_of(r) + " has no transitions");
    for (Eigen::Index r = 0; r < j.outerSize(); ++r)
        for (SparseMat::InnerIterator it(j, r); it; ++it)
            it.valueRef() /= rows[static_cast<std::size_t>(r)];
    for (std::size_t r = 0; r < nr; ++r)
        source.measure[r] = rows[r] / total;
    for (std::size_t c = 0; c < nc; ++c)
        target.measure[c] = cols[c] / total;
    return MarkovOperator(std::move(source), std::move(target), std::move(j), square);
}

MarkovOperator MarkovOperator::reverse() const
{
    SparseMat r = SparseMat(joint().transpose());
    for (Eigen::Index row = 0; row < r.outerSize(); ++row) {
        double pt = target_.measure[static_cast<std::size_t>(row)];
        for (SparseMat::InnerIterator it(r, row); it; ++it)
            it.valueRef() = pt > 0 ? it.value() / pt : 0.0;
    }
    return MarkovOperator(target_, source_, std::move(r), square_);
}

MarkovOperator MarkovOperator::then(const MarkovOperator& next, bool square) const
{
    if (cols() != next.rows())
        fail(ErrorKind::InvalidInput, "operator composition with mismatched sizes");
    SparseMat prod = (p_ * next.p_).pruned(0.0);
    return MarkovOperator(source_, next.target_, std::move(prod), square);
}

SparseMat MarkovOperator::joint() const
{
    SparseMat j = p_;
    for (Eigen::Index r = 0; r < j.outerSize(); ++r) {
        double ps = source_.measure[static_cast<std::size_t>(r)];
        for (SparseMat::InnerIterator it(j, r); it; ++it)
            it.valueRef() *= ps;
    }
    return j;
}

BipartiteGraph MarkovOperator::graph() const
{
    BipartiteGraph g;
    g.left = source_.measure;
    g.right = target_.measure;
    g.joint = joint();
    g.square = square_;
    return g;
}

double MarkovOperator::row_sum_error() const
{
    double worst = 0.0;
    for (Eigen::Index r = 0; r < p_.outerSize(); ++r) {
        double s = 0.0;
        for (SparseMat::InnerIterator it(p_, r); it; ++it)
            s += it.value();
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

double MarkovOperator::marginal_error() const
{
    std::vector<double> push(target_.size(), 0.0);
    for (Eigen::Index r = 0; r < p_.outerSize(); ++r)
        for (SparseMat::InnerIterator it(p_, r); it; ++it)
            push[static_cast<std::size_t>(it.col())] += source_.measure[static_cast<std::size_t>(r)] * it.value();
    double worst = 0.0;
    for (std::size_t c = 0; c < push.size(); ++c)
        worst = std::max(worst, std::abs(push[c] - target_.measure[c]));
    return worst;
}

void write_csv(const MarkovOperator& op, std::ostream& out)
{
    out << "row_face,col_face,prob\n";
    out.precision(17);
    const SparseMat& p = op.matrix();
    for (Eigen::Index r = 0; r < p.outerSize(); ++r)
        for (SparseMat::InnerIterator it(p, r); it; ++it)
            out << op.source().label_of(static_cast<std::size_t>(r)) << ','
                << op.target().label_of(static_cast<std::size_t>(it.col())) << ',' << it.value() << '\n';
}

namespace {

void require_level(const Complex& c, int k, const char* what)
{
    if (k < -1 || k > c.dim())
        fail(ErrorKind::LevelOutOfRange, std::string(what) + ": level " + std::to_string(k) + " outside [-1, " +
                                             std::to_string(c.dim()) + "]");
}

std::size_t index_in(const LevelIndex& lev, std::span<const int> f)
{
    long long pos = lev.find(f);
    if (pos < 0)
        fail(ErrorKind::NotAFace, "face " + face_label(f) + " missing from level " + std::to_string(lev.k()));
    return static_cast<std::size_t>(pos);
}

}  // namespace

MarkovOperator up_operator(const Complex& c, int k)
{
    require_level(c, k, "up_operator");
    if (k > c.dim() - 1)
        fail(ErrorKind::LevelOutOfRange, "up_operator needs k <= d-1");
    auto lo = c.level_ptr(k);
    auto hi = c.level_ptr(k + 1);
    std::vector<Triplet> w;
    w.reserve(hi->size() * static_cast<std::size_t>(k + 2));
    for (std::size_t i = 0; i < hi->size(); ++i) {
        auto s = hi->face(i);
        for_each_subset(s, k + 1, [&](const Face& t) {
            w.emplace_back(static_cast<int>(index_in(*lo, t)), static_cast<int>(i), hi->measure(i));
        });
    }
    return MarkovOperator::from_joint(level_space(lo), level_space(hi), w, false);
}

MarkovOperator down_operator(const Complex& c, int k)
{
    require_level(c, k, "down_operator");
    if (k > c.dim() - 1)
        fail(ErrorKind::LevelOutOfRange, "down_operator needs k <= d-1");
    return containment_operator(c, k + 1, k);
}

MarkovOperator containment_operator(const Complex& c, int k, int l)
{
    require_level(c, k, "containment_operator");
    require_level(c, l, "containment_operator");
    if (!(l < k))
        fail(ErrorKind::LevelOutOfRange, "containment_operator needs l < k");
    auto hi = c.level_ptr(k);
    auto lo = c.level_ptr(l);
    std::vector<Triplet> w;
    w.reserve(hi->size() * static_cast<std::size_t>(binomial(k + 1, l + 1)));
    for (std::size_t i = 0; i < hi->size(); ++i) {
        auto s = hi->face(i);
        for_each_subset(s, l + 1, [&](const Face& t) {
            w.emplace_back(static_cast<int>(i), static_cast<int>(index_in(*lo, t)), hi->measure(i));
        });
    }
    return MarkovOperator::from_joint(level_space(hi), level_space(lo), w, false);
}

MarkovOperator lower_walk(const Complex& c, int k, int l)
{
    MarkovOperator down = containment_operator(c, k, l);
    return down.then(down.reverse(), true);
}

MarkovOperator upper_walk(const Complex& c, int l, bool lazy)
{
    require_level(c, l, "upper_walk");
    if (l + 1 > c.dim())
        fail(ErrorKind::LevelOutOfRange, "upper_walk needs l+1 <= d");
    auto lev = c.level_ptr(l);
    auto hi = c.level_ptr(l + 1);
    std::vector<Triplet> w;
    for (std::size_t i = 0; i < hi->size(); ++i) {
        auto s = hi->face(i);
        std::vector<int> idx;
        for_each_subset(s, l + 1, [&](const Face& t) { idx.push_back(static_cast<int>(index_in(*lev, t))); });
        for (int a : idx)
            for (int b : idx)
                if (lazy || a != b)
                    w.emplace_back(a, b, hi->measure(i));
    }
    return MarkovOperator::from_joint(level_space(lev), level_space(lev), w, true);
}

MarkovOperator complement_walk(const Complex& c, int l1, int l2)
{
    if (l1 < 0 || l2 < 0)
        fail(ErrorKind::LevelOutOfRange, "complement_walk needs l1, l2 >= 0");
    const int m = l1 + l2 + 1;
    if (m > c.dim())
        fail(ErrorKind::LevelOutOfRange, "complement_walk needs l1+l2+1 <= d");
    auto big = c.level_ptr(m);
    if (big->size() == 0)
        fail(ErrorKind::EmptyWalk, "no union face exists");
    auto src = c.level_ptr(l1);
    auto tgt = c.level_ptr(l2);
    std::vector<Triplet> w;
    w.reserve(big->size() * static_cast<std::size_t>(binomial(m + 1, l1 + 1)));
    for (std::size_t i = 0; i < big->size(); ++i) {
        auto f = big->face(i);
        for_each_subset(f, l1 + 1, [&](const Face& s) {
            Face t = face_difference(f, s);
            w.emplace_back(static_cast<int>(index_in(*src, s)), static_cast<int>(index_in(*tgt, t)), big->measure(i));
        });
    }
    return MarkovOperator::from_joint(level_space(src), level_space(tgt), w, l1 == l2);
}

std::uint64_t color_set_mask(const std::vector<int>& colors)
{
    std::uint64_t mask = 0;
    for (int col : colors) {
        if (col < 0 || col > 63)
            fail(ErrorKind::NotPartite, "color index out of range");
        if (mask >> col & 1)
            fail(ErrorKind::OverlappingColors, "color listed twice");
        mask |= std::uint64_t{1} << col;
    }
    return mask;
}

std::vector<std::size_t> colored_level(const Complex& c, const std::vector<int>& colors)
{
    if (!c.has_coloring())
        fail(ErrorKind::NotPartite, "complex has no coloring");
    std::uint64_t mask = color_set_mask(colors);
    for (int col : colors)
        if (col > c.dim())
            fail(ErrorKind::NotPartite, "color " + std::to_string(col) + " exceeds d");
    const LevelIndex& lev = c.level(static_cast<int>(colors.size()) - 1);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < lev.size(); ++i)
        if (c.color_mask(lev.face(i)) == mask)
            out.push_back(i);
    return out;
}

MarkovOperator colored_walk(const Complex& c, const std::vector<int>& colors_i, const std::vector<int>& colors_j)
{
    if (!c.has_coloring())
        fail(ErrorKind::NotPartite, "colored_walk needs a partite complex");
    if (colors_i.empty() || colors_j.empty())
        fail(ErrorKind::ParameterRange, "color sets must be nonempty");
    std::uint64_t mi = color_set_mask(colors_i), mj = color_set_mask(colors_j);
    if (mi & mj)
        fail(ErrorKind::OverlappingColors, "color sets I and J intersect");
    std::vector<int> both = colors_i;
    both.insert(both.end(), colors_j.begin(), colors_j.end());
    std::sort(both.begin(), both.end());

    auto li = c.level_ptr(static_cast<int>(colors_i.size()) - 1);
    auto lj = c.level_ptr(static_cast<int>(colors_j.size()) - 1);
    auto lu = c.level_ptr(static_cast<int>(both.size()) - 1);
    std::vector<std::size_t> mem_i = colored_level(c, colors_i);
    std::vector<std::size_t> mem_j = colored_level(c, colors_j);
    std::vector<std::size_t> mem_u = colored_level(c, both);
    if (mem_u.empty())
        fail(ErrorKind::EmptyWalk, "no face with colors I and J");
    std::vector<long long> pos_i(li->size(), -1), pos_j(lj->size(), -1);
    for (std::size_t k = 0; k < mem_i.size(); ++k)
        pos_i[mem_i[k]] = static_cast<long long>(k);
    for (std::size_t k = 0; k < mem_j.size(); ++k)
        pos_j[mem_j[k]] = static_cast<long long>(k);

    std::vector<Triplet> w;
    w.reserve(mem_u.size());
    for (std::size_t idx : mem_u) {
        auto f = lu->face(idx);
        Face s, t;
        for (int v : f)
            ((mi >> c.color(v) & 1) ? s : t).push_back(v);
        w.emplace_back(static_cast<int>(pos_i[index_in(*li, s)]), static_cast<int>(pos_j[index_in(*lj, t)]),
                       lu->measure(idx));
    }
    return MarkovOperator::from_joint(level_space(li, mem_i), level_space(lj, mem_j), w, false);
}

MarkovOperator fixed_union_walk(const Complex& c, int l, int j)
{
    if (l < 0 || j < 1 || j > l + 1)
        fail(ErrorKind::LevelOutOfRange, "fixed_union_walk needs l >= 0 and 1 <= j <= l+1");
    if (l + j + 1 > c.dim())
        fail(ErrorKind::LevelOutOfRange, "fixed_union_walk needs l+j+1 <= d");
    auto lev = c.level_ptr(l);
    auto hi = c.level_ptr(l + j);
    std::vector<Triplet> w;
    for (std::size_t i = 0; i < hi->size(); ++i) {
        auto s = hi->face(i);
        for_each_subset(s, l + 1, [&](const Face& t) {
            Face fresh = face_difference(s, t);
            int ti = static_cast<int>(index_in(*lev, t));
            for_each_subset(t, l + 1 - j, [&](const Face& keep) {
                Face t2 = face_union(keep, fresh);
                w.emplace_back(ti, static_cast<int>(index_in(*lev, t2)), hi->measure(i));
            });
        });
    }
    return MarkovOperator::from_joint(level_space(lev), level_space(lev), w, true);
}

std::vector<Face> neighborhood_system(const Complex& c, int k)
{
    require_level(c, k, "neighborhood_system");
    if (k < 0 || k > c.dim() - 1)
        fail(ErrorKind::LevelOutOfRange, "neighborhood_system needs 0 <= k <= d-1");
    const LevelIndex& lev = c.level(k);
    const LevelIndex& hi = c.level(k + 1);
    std::vector<Face> balls(lev.size());
    for (std::size_t i = 0; i < hi.size(); ++i) {
        auto f = hi.face(i);
        for (int v : f) {
            Face z;
            for (int u : f)
                if (u != v)
                    z.push_back(u);
            balls[index_in(lev, z)].push_back(v);
        }
    }
    for (auto& b : balls) {
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
    }
    return balls;
}

}  // namespace hdx
