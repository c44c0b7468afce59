#include "hdx/grassmann.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hdx/error.hpp"

namespace hdx {

namespace {

constexpr std::size_t kPointCap = 1'000'000;
constexpr std::size_t kLevelCap = 200'000;
constexpr std::size_t kPairCap = 50'000'000;

struct FieldShape {
    int p;
    int m;
    std::vector<int> modulus;  // low-order coefficients of the monic modulus
};

FieldShape field_shape(int q)
{
    switch (q) {
    case 2: return {2, 1, {0}};
    case 3: return {3, 1, {0}};
    case 5: return {5, 1, {0}};
    case 7: return {7, 1, {0}};
    case 4: return {2, 2, {1, 1}};     // x^2 + x + 1
    case 8: return {2, 3, {1, 1, 0}};  // x^3 + x + 1
    case 9: return {3, 2, {1, 0}};     // x^2 + 1
    default: fail(ErrorKind::ParameterRange, "unsupported field size q=" + std::to_string(q));
    }
}

std::vector<int> digits(int e, int p, int m)
{
    std::vector<int> d(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        d[static_cast<std::size_t>(i)] = e % p;
        e /= p;
    }
    return d;
}

int undigits(const std::vector<int>& d, int p)
{
    int e = 0;
    for (std::size_t i = d.size(); i-- > 0;)
        e = e * p + d[i];
    return e;
}

/** Reduce `rows` to reduced row echelon form in place; returns the rank. */
int rref(const GaloisField& f, std::vector<FqVec>& rows, int n)
{
    int rank = 0;
    const int m = static_cast<int>(rows.size());
    for (int col = 0; col < n && rank < m; ++col) {
        int piv = -1;
        for (int r = rank; r < m; ++r)
            if (rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] != 0) {
                piv = r;
                break;
            }
        if (piv < 0)
            continue;
        std::swap(rows[static_cast<std::size_t>(rank)], rows[static_cast<std::size_t>(piv)]);
        FqVec& pr = rows[static_cast<std::size_t>(rank)];
        const std::uint8_t inv = f.inv(pr[static_cast<std::size_t>(col)]);
        for (auto& x : pr)
            x = f.mul(x, inv);
        for (int r = 0; r < m; ++r) {
            if (r == rank)
                continue;
            FqVec& row = rows[static_cast<std::size_t>(r)];
            const std::uint8_t c = row[static_cast<std::size_t>(col)];
            if (c == 0)
                continue;
            for (int j = 0; j < n; ++j)
                row[static_cast<std::size_t>(j)] =
                    f.sub(row[static_cast<std::size_t>(j)], f.mul(c, pr[static_cast<std::size_t>(j)]));
        }
        ++rank;
    }
    rows.resize(static_cast<std::size_t>(rank));
    return rank;
}

std::vector<int> pivots(const Subspace& s)
{
    std::vector<int> out;
    for (int i = 0; i < s.rank; ++i)
        for (int j = 0; j < s.n; ++j)
            if (s.basis[static_cast<std::size_t>(i * s.n + j)] != 0) {
                out.push_back(j);
                break;
            }
    return out;
}

/** Reduce v against an RREF basis; the result is zero iff v is in the row space. */
void reduce(const GaloisField& f, const Subspace& s, FqVec& v)
{
    const auto piv = pivots(s);
    for (int i = 0; i < s.rank; ++i) {
        const std::uint8_t c = v[static_cast<std::size_t>(piv[static_cast<std::size_t>(i)])];
        if (c == 0)
            continue;
        for (int j = 0; j < s.n; ++j)
            v[static_cast<std::size_t>(j)] =
                f.sub(v[static_cast<std::size_t>(j)], f.mul(c, s.basis[static_cast<std::size_t>(i * s.n + j)]));
    }
}

bool is_zero(const FqVec& v)
{
    return std::all_of(v.begin(), v.end(), [](std::uint8_t x) { return x == 0; });
}

std::vector<FqVec> rows_of(const Subspace& s)
{
    std::vector<FqVec> out;
    for (int i = 0; i < s.rank; ++i)
        out.emplace_back(s.basis.begin() + i * s.n, s.basis.begin() + (i + 1) * s.n);
    return out;
}

Subspace make_subspace(Flavor flavor, int n, std::vector<FqVec> rows)
{
    Subspace s;
    s.flavor = flavor;
    s.n = n;
    s.rank = static_cast<int>(rows.size());
    for (const auto& r : rows)
        s.basis.insert(s.basis.end(), r.begin(), r.end());
    return s;
}

double ipow(int q, int e)
{
    return std::pow(static_cast<double>(q), e);
}

Space uniform_space(const std::vector<Subspace>& items)
{
    Space sp;
    sp.measure.assign(items.size(), items.empty() ? 0.0 : 1.0 / static_cast<double>(items.size()));
    auto labels = std::make_shared<std::vector<std::string>>();
    for (const auto& s : items)
        labels->push_back(to_string(s));
    sp.label = [labels](std::size_t i) { return (*labels)[i]; };
    return sp;
}

void check_level(const GrassmannPoset& p, int k)
{
    if (k < -1 || k > p.d())
        fail(ErrorKind::LevelOutOfRange, "level " + std::to_string(k) + " outside [-1, " + std::to_string(p.d()) + "]");
}

}  // namespace

const char* to_string(Flavor f)
{
    return f == Flavor::Linear ? "linear" : "affine";
}

int level_dimension(Flavor f, int level)
{
    return f == Flavor::Linear ? level + 1 : level;
}

int dimension_level(Flavor f, int dim)
{
    return f == Flavor::Linear ? dim - 1 : dim;
}

GaloisField::GaloisField(int q) : q_(q)
{
    const FieldShape sh = field_shape(q);
    p_ = sh.p;
    const auto uq = static_cast<std::size_t>(q);
    add_.resize(uq * uq);
    mul_.resize(uq * uq);
    neg_.resize(uq);
    inv_.assign(uq, 0);
    for (int a = 0; a < q; ++a) {
        const auto da = digits(a, sh.p, sh.m);
        for (int b = 0; b < q; ++b) {
            const auto db = digits(b, sh.p, sh.m);
            std::vector<int> s(static_cast<std::size_t>(sh.m));
            for (int i = 0; i < sh.m; ++i)
                s[static_cast<std::size_t>(i)] =
                    (da[static_cast<std::size_t>(i)] + db[static_cast<std::size_t>(i)]) % sh.p;
            add_[static_cast<std::size_t>(a * q + b)] = static_cast<std::uint8_t>(undigits(s, sh.p));

            std::vector<int> prod(static_cast<std::size_t>(2 * sh.m - 1), 0);
            for (int i = 0; i < sh.m; ++i)
                for (int j = 0; j < sh.m; ++j)
                    prod[static_cast<std::size_t>(i + j)] +=
                        da[static_cast<std::size_t>(i)] * db[static_cast<std::size_t>(j)];
            for (int i = 2 * sh.m - 2; i >= sh.m; --i) {
                const int c = prod[static_cast<std::size_t>(i)] % sh.p;
                prod[static_cast<std::size_t>(i)] = 0;
                for (int j = 0; j < sh.m; ++j)
                    prod[static_cast<std::size_t>(i - sh.m + j)] -= c * sh.modulus[static_cast<std::size_t>(j)];
            }
            std::vector<int> r(static_cast<std::size_t>(sh.m));
            for (int i = 0; i < sh.m; ++i)
                r[static_cast<std::size_t>(i)] = ((prod[static_cast<std::size_t>(i)] % sh.p) + sh.p) % sh.p;
            mul_[static_cast<std::size_t>(a * q + b)] = static_cast<std::uint8_t>(undigits(r, sh.p));
        }
    }
    for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b) {
            if (add_[static_cast<std::size_t>(a * q + b)] == 0)
                neg_[static_cast<std::size_t>(a)] = static_cast<std::uint8_t>(b);
            if (mul_[static_cast<std::size_t>(a * q + b)] == 1)
                inv_[static_cast<std::size_t>(a)] = static_cast<std::uint8_t>(b);
        }
    }
}

int Subspace::dim() const
{
    if (flavor == Flavor::Linear)
        return rank;
    return offset.empty() ? -1 : rank;
}

std::string Subspace::key() const
{
    std::string k;
    k.reserve(basis.size() + offset.size() + 3);
    k.push_back(flavor == Flavor::Linear ? 'L' : 'A');
    k.push_back(static_cast<char>(rank));
    k.push_back(offset.empty() ? '0' : '1');
    k.append(basis.begin(), basis.end());
    k.append(offset.begin(), offset.end());
    return k;
}

std::string to_string(const Subspace& s)
{
    std::ostringstream os;
    if (s.is_empty_flat())
        return "{}";
    if (s.flavor == Flavor::Affine) {
        for (auto x : s.offset)
            os << static_cast<int>(x);
        os << '+';
    }
    os << '<';
    for (int i = 0; i < s.rank; ++i) {
        if (i)
            os << ',';
        for (int j = 0; j < s.n; ++j)
            os << static_cast<int>(s.basis[static_cast<std::size_t>(i * s.n + j)]);
    }
    os << '>';
    return os.str();
}

Subspace linear_span(const GaloisField& f, int n, const std::vector<FqVec>& rows)
{
    std::vector<FqVec> r = rows;
    for (const auto& x : r)
        if (static_cast<int>(x.size()) != n)
            fail(ErrorKind::InvalidInput, "vector length differs from n");
    rref(f, r, n);
    return make_subspace(Flavor::Linear, n, std::move(r));
}

Subspace affine_flat(const GaloisField& f, int n, const FqVec& point, const std::vector<FqVec>& directions)
{
    if (static_cast<int>(point.size()) != n)
        fail(ErrorKind::InvalidInput, "point length differs from n");
    Subspace s = linear_span(f, n, directions);
    s.flavor = Flavor::Affine;
    s.offset = point;
    reduce(f, s, s.offset);
    return s;
}

Subspace join(const GaloisField& f, const Subspace& x, const Subspace& y)
{
    if (x.flavor != y.flavor || x.n != y.n)
        fail(ErrorKind::InvalidInput, "join of incompatible subspaces");
    if (x.flavor == Flavor::Linear) {
        auto rows = rows_of(x);
        for (auto& r : rows_of(y))
            rows.push_back(std::move(r));
        return linear_span(f, x.n, rows);
    }
    if (x.is_empty_flat())
        return y;
    if (y.is_empty_flat())
        return x;
    auto rows = rows_of(x);
    for (auto& r : rows_of(y))
        rows.push_back(std::move(r));
    FqVec diff(static_cast<std::size_t>(x.n));
    for (int j = 0; j < x.n; ++j)
        diff[static_cast<std::size_t>(j)] = f.sub(y.offset[static_cast<std::size_t>(j)], x.offset[static_cast<std::size_t>(j)]);
    rows.push_back(std::move(diff));
    return affine_flat(f, x.n, x.offset, rows);
}

bool contains_vector(const GaloisField& f, const Subspace& s, const FqVec& v)
{
    FqVec w = v;
    if (s.flavor == Flavor::Affine) {
        if (s.is_empty_flat())
            return false;
        for (int j = 0; j < s.n; ++j)
            w[static_cast<std::size_t>(j)] = f.sub(w[static_cast<std::size_t>(j)], s.offset[static_cast<std::size_t>(j)]);
    }
    reduce(f, s, w);
    return is_zero(w);
}

bool contains(const GaloisField& f, const Subspace& big, const Subspace& small)
{
    if (big.flavor != small.flavor || big.n != small.n)
        fail(ErrorKind::InvalidInput, "containment of incompatible subspaces");
    if (small.flavor == Flavor::Affine) {
        if (small.is_empty_flat())
            return true;
        if (big.is_empty_flat() || !contains_vector(f, big, small.offset))
            return false;
    }
    if (small.rank > big.rank)
        return false;
    Subspace dir = big;
    dir.flavor = Flavor::Linear;
    dir.offset.clear();
    for (auto r : rows_of(small)) {
        reduce(f, dir, r);
        if (!is_zero(r))
            return false;
    }
    return true;
}

double gaussian_binomial(int n, int k, int q)
{
    if (k < 0 || k > n)
        return 0.0;
    double num = 1.0, den = 1.0;
    for (int i = 0; i < k; ++i) {
        num *= ipow(q, n - i) - 1.0;
        den *= ipow(q, i + 1) - 1.0;
    }
    return num / den;
}

double level_count(Flavor f, int q, int n, int level)
{
    if (f == Flavor::Linear)
        return gaussian_binomial(n, level + 1, q);
    if (level == -1)
        return 1.0;
    return ipow(q, n - level) * gaussian_binomial(n, level, q);
}

GrassmannPoset::GrassmannPoset(int q, int n, int d, Flavor flavor) : field_(q), n_(n), d_(d), flavor_(flavor)
{
    if (n < 1)
        fail(ErrorKind::ParameterRange, "n must be positive");
    if (d < 0 || level_dimension(flavor, d) > n)
        fail(ErrorKind::ParameterRange, "top level " + std::to_string(d) + " does not fit in F_q^" + std::to_string(n));
    check_size_cap(ipow(q, n), kPointCap, "points of F_q^n");
    levels_.resize(static_cast<std::size_t>(d + 2));
}

FqVec GrassmannPoset::vector_of(std::size_t code) const
{
    FqVec v(static_cast<std::size_t>(n_));
    for (int j = n_ - 1; j >= 0; --j) {
        v[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(code % static_cast<std::size_t>(q()));
        code /= static_cast<std::size_t>(q());
    }
    return v;
}

std::size_t GrassmannPoset::code_of(const FqVec& v) const
{
    std::size_t c = 0;
    for (auto x : v)
        c = c * static_cast<std::size_t>(q()) + x;
    return c;
}

Subspace GrassmannPoset::trivial() const
{
    Subspace s;
    s.flavor = flavor_;
    s.n = n_;
    return s;
}

const GrassmannPoset::LevelData& GrassmannPoset::data(int k) const
{
    check_level(*this, k);
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = levels_[static_cast<std::size_t>(k + 1)];
    if (slot)
        return *slot;
    check_size_cap(level_count(flavor_, q(), n_, k), kLevelCap, "Grassmann level size");
    auto ld = std::make_unique<LevelData>();
    const int r = flavor_ == Flavor::Linear ? k + 1 : k;
    if (flavor_ == Flavor::Affine && k == -1) {
        ld->items.push_back(trivial());
    } else {
        const std::size_t uq = static_cast<std::size_t>(q());
        for_each_combination(n_, r, [&](const int* piv) {
            std::vector<int> is_piv(static_cast<std::size_t>(n_), 0);
            for (int i = 0; i < r; ++i)
                is_piv[static_cast<std::size_t>(piv[i])] = 1;
            // Free positions: row i, columns after its pivot that are not pivots.
            std::vector<std::pair<int, int>> free_pos;
            for (int i = 0; i < r; ++i)
                for (int j = piv[i] + 1; j < n_; ++j)
                    if (!is_piv[static_cast<std::size_t>(j)])
                        free_pos.emplace_back(i, j);
            std::vector<int> off_pos;
            if (flavor_ == Flavor::Affine)
                for (int j = 0; j < n_; ++j)
                    if (!is_piv[static_cast<std::size_t>(j)])
                        off_pos.push_back(j);
            const std::size_t nf = free_pos.size(), no = off_pos.size();
            std::vector<std::size_t> digit(nf + no, 0);
            while (true) {
                Subspace s;
                s.flavor = flavor_;
                s.n = n_;
                s.rank = r;
                s.basis.assign(static_cast<std::size_t>(r * n_), 0);
                for (int i = 0; i < r; ++i)
                    s.basis[static_cast<std::size_t>(i * n_ + piv[i])] = 1;
                for (std::size_t x = 0; x < nf; ++x)
                    s.basis[static_cast<std::size_t>(free_pos[x].first * n_ + free_pos[x].second)] =
                        static_cast<std::uint8_t>(digit[x]);
                if (flavor_ == Flavor::Affine) {
                    s.offset.assign(static_cast<std::size_t>(n_), 0);
                    for (std::size_t x = 0; x < no; ++x)
                        s.offset[static_cast<std::size_t>(off_pos[x])] = static_cast<std::uint8_t>(digit[nf + x]);
                }
                ld->items.push_back(std::move(s));
                std::size_t pos = 0;
                while (pos < digit.size() && ++digit[pos] == uq)
                    digit[pos++] = 0;
                if (pos == digit.size())
                    break;
            }
        });
    }
    for (std::size_t i = 0; i < ld->items.size(); ++i)
        ld->index.emplace(ld->items[i].key(), i);
    slot = std::move(ld);
    return *slot;
}

const std::vector<Subspace>& GrassmannPoset::level(int k) const
{
    return data(k).items;
}

std::size_t GrassmannPoset::index_of(const Subspace& s) const
{
    const auto& ld = data(s.level());
    auto it = ld.index.find(s.key());
    if (it == ld.index.end())
        fail(ErrorKind::NotAFace, "subspace " + to_string(s) + " is not in the poset");
    return it->second;
}

std::vector<std::size_t> points_of(const GrassmannPoset& p, const Subspace& s)
{
    const GaloisField& f = p.field();
    const std::size_t uq = static_cast<std::size_t>(p.q());
    std::set<std::size_t> out;
    if (s.flavor == Flavor::Affine && s.is_empty_flat())
        return {};
    const auto rows = rows_of(s);
    std::vector<std::size_t> coef(rows.size(), 0);
    while (true) {
        FqVec v = s.flavor == Flavor::Affine ? s.offset : FqVec(static_cast<std::size_t>(s.n), 0);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (int j = 0; j < s.n; ++j)
                v[static_cast<std::size_t>(j)] = f.add(
                    v[static_cast<std::size_t>(j)], f.mul(static_cast<std::uint8_t>(coef[i]), rows[i][static_cast<std::size_t>(j)]));
        if (s.flavor == Flavor::Affine)
            out.insert(p.index_of(affine_flat(f, s.n, v, {})));
        else if (!is_zero(v))
            out.insert(p.index_of(linear_span(f, s.n, {v})));
        std::size_t pos = 0;
        while (pos < coef.size() && ++coef[pos] == uq)
            coef[pos++] = 0;
        if (pos == coef.size())
            break;
    }
    return {out.begin(), out.end()};
}

MarkovOperator grassmann_containment_walk(const GrassmannPoset& p, int k, int l)
{
    check_level(p, k);
    check_level(p, l);
    if (l >= k)
        fail(ErrorKind::LevelOutOfRange, "containment walk needs l < k");
    const auto& big = p.level(k);
    const auto& small = p.level(l);
    check_size_cap(static_cast<double>(big.size()) * static_cast<double>(small.size()), kPairCap,
                   "containment pairs");
    std::vector<Triplet> w;
    for (std::size_t i = 0; i < big.size(); ++i)
        for (std::size_t j = 0; j < small.size(); ++j)
            if (contains(p.field(), big[i], small[j]))
                w.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0);
    if (w.empty())
        fail(ErrorKind::EmptyWalk, "no containments between the levels");
    return MarkovOperator::from_joint(uniform_space(big), uniform_space(small), w, false);
}

MarkovOperator conditioned_complement_walk(const GrassmannPoset& p, int l1, int l2, const Subspace& u0)
{
    check_level(p, l1);
    check_level(p, l2);
    if (u0.flavor != p.flavor() || u0.n != p.n())
        fail(ErrorKind::InvalidInput, "conditioning subspace does not belong to the poset");
    const int l3 = u0.level();
    if (l1 < 0 || l2 < 0 || l3 > p.d())
        fail(ErrorKind::DimensionArithmetic, "levels must satisfy 0 <= l1, l2 and l3 <= d");
    const bool affine = p.flavor() == Flavor::Affine;
    if (affine ? l1 + l2 + l3 + 2 > p.n() : l1 + l2 + l3 + 3 > p.n())
        fail(ErrorKind::DimensionArithmetic, "l1 + l2 + l3 too large for n = " + std::to_string(p.n()));
    const GaloisField& f = p.field();
    const int d1 = level_dimension(p.flavor(), l1), d2 = level_dimension(p.flavor(), l2);
    const int d3 = u0.dim();
    // Affine: dim span = sum of dims + number of joined pieces - 1; linear: sum of dims.
    auto independent_with_u0 = [&](const Subspace& x, int dx) {
        const int want = affine ? (u0.is_empty_flat() ? dx : dx + d3 + 1) : dx + d3;
        return join(f, u0, x).dim() == want;
    };
    std::vector<std::size_t> left, right;
    const auto& lv1 = p.level(l1);
    const auto& lv2 = p.level(l2);
    for (std::size_t i = 0; i < lv1.size(); ++i)
        if (independent_with_u0(lv1[i], d1))
            left.push_back(i);
    for (std::size_t i = 0; i < lv2.size(); ++i)
        if (independent_with_u0(lv2[i], d2))
            right.push_back(i);
    check_size_cap(static_cast<double>(left.size()) * static_cast<double>(right.size()), kPairCap,
                   "complement walk pairs");
    const int want = affine ? (u0.is_empty_flat() ? d1 + d2 + 1 : d1 + d2 + d3 + 2) : d1 + d2 + d3;
    std::vector<Triplet> w;
    for (std::size_t i = 0; i < left.size(); ++i) {
        const Subspace base = join(f, u0, lv1[left[i]]);
        for (std::size_t j = 0; j < right.size(); ++j)
            if (join(f, base, lv2[right[j]]).dim() == want)
                w.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0);
    }
    if (w.empty())
        fail(ErrorKind::EmptyWalk, "conditioned complement walk has no edges");
    // Drop vertices without edges so every vertex has positive measure.
    std::vector<int> lmap(left.size(), -1), rmap(right.size(), -1);
    for (const auto& t : w) {
        lmap[static_cast<std::size_t>(t.row())] = 0;
        rmap[static_cast<std::size_t>(t.col())] = 0;
    }
    std::vector<Subspace> litems, ritems;
    for (std::size_t i = 0; i < left.size(); ++i)
        if (lmap[i] == 0) {
            lmap[i] = static_cast<int>(litems.size());
            litems.push_back(lv1[left[i]]);
        }
    for (std::size_t j = 0; j < right.size(); ++j)
        if (rmap[j] == 0) {
            rmap[j] = static_cast<int>(ritems.size());
            ritems.push_back(lv2[right[j]]);
        }
    for (auto& t : w)
        t = Triplet(lmap[static_cast<std::size_t>(t.row())], rmap[static_cast<std::size_t>(t.col())], 1.0);
    return MarkovOperator::from_joint(uniform_space(litems), uniform_space(ritems), w, l1 == l2 && litems == ritems);
}

namespace {

/** Containment lists: for each element of level hi, the positions of level lo inside it. */
std::vector<std::vector<std::size_t>> containment_lists(const GrassmannPoset& p, int hi, int lo)
{
    const auto& big = p.level(hi);
    const auto& small = p.level(lo);
    check_size_cap(static_cast<double>(big.size()) * static_cast<double>(small.size()), kPairCap,
                   "containment pairs");
    std::vector<std::vector<std::size_t>> out(big.size());
    for (std::size_t i = 0; i < big.size(); ++i)
        for (std::size_t j = 0; j < small.size(); ++j)
            if (contains(p.field(), big[i], small[j]))
                out[i].push_back(j);
    return out;
}

SetLayerPtr point_layer(const GrassmannPoset& p, int level)
{
    auto layer = std::make_shared<SetLayer>();
    for (const auto& s : p.level(level)) {
        layer->content.push_back({});
        for (auto v : points_of(p, s))
            layer->content.back().push_back(static_cast<int>(v));
        layer->labels.push_back(to_string(s));
    }
    return layer;
}

}  // namespace

StsDistribution grassmann_distribution(const GrassmannPoset& p, int d, int l)
{
    check_level(p, d);
    check_level(p, l);
    if (l >= d)
        fail(ErrorKind::LevelOutOfRange, "Grassmann distribution needs l < d");
    const auto up = containment_lists(p, d, l);
    StsDistribution out;
    out.n_vertices = p.level(0).size();
    out.sets = point_layer(p, d);
    out.faces = point_layer(p, l);
    out.independent = true;
    const std::size_t nt = p.level(l).size();
    out.t_to_s.assign(nt, {});
    for (std::size_t s = 0; s < up.size(); ++s)
        for (auto t : up[s])
            out.t_to_s[t].emplace_back(s, 1.0);
    out.t_prob.assign(nt, 1.0 / static_cast<double>(nt));
    for (auto& row : out.t_to_s)
        for (auto& e : row)
            e.second = 1.0 / static_cast<double>(row.size());
    return out;
}

StavInstance grassmann_stav(const GrassmannPoset& p, int d, int l)
{
    if (l < 1 || !(3 * l + 2 < d) || d > p.d())
        fail(ErrorKind::ParameterRange, "Grassmann STAV needs 1 <= l and 3l+2 < d <= top level");
    const GaloisField& f = p.field();
    const bool affine = p.flavor() == Flavor::Affine;
    const auto& S = p.level(d);
    const auto& T = p.level(l);
    const auto& A = p.level(l - 1);
    const auto& V = p.level(0);

    StavInstance x;
    x.kind = StavKind::Grassmann;
    x.n_vertices = V.size();
    x.params = {{"q", p.q()}, {"n", p.n()}, {"d", d}, {"l", l}, {"flavor", to_string(p.flavor())}};
    x.S = point_layer(p, d);
    x.T = point_layer(p, l);
    x.A = point_layer(p, l - 1);

    const auto s_to_t = containment_lists(p, d, l);
    const auto t_to_a = containment_lists(p, l, l - 1);
    const auto s_to_a = containment_lists(p, d, l - 1);
    const auto s_to_v = containment_lists(p, d, 0);
    const auto t_to_v = containment_lists(p, l, 0);

    check_size_cap(static_cast<double>(S.size()) * static_cast<double>(s_to_t.front().size()) *
                       static_cast<double>(t_to_a.front().size() * t_to_v.front().size()),
                   kStavTableCap, "Grassmann D_stav table");

    x.s_prob.assign(S.size(), 1.0 / static_cast<double>(S.size()));
    x.s_to_t.resize(S.size());
    for (std::size_t s = 0; s < S.size(); ++s)
        for (auto t : s_to_t[s])
            x.s_to_t[s].emplace_back(t, 1.0 / static_cast<double>(s_to_t[s].size()));

    // (a, v) with span(a, v) = t: v is a point (line) of t outside a.
    x.t_to_av.resize(T.size());
    for (std::size_t t = 0; t < T.size(); ++t) {
        for (auto a : t_to_a[t])
            for (auto v : t_to_v[t])
                if (!contains(f, A[a], V[v]))
                    x.t_to_av[t].push_back({a, v, 1.0});
        for (auto& e : x.t_to_av[t])
            e.p = 1.0 / static_cast<double>(x.t_to_av[t].size());
    }

    x.sts.n_vertices = x.n_vertices;
    x.sts.sets = x.S;
    x.sts.faces = x.T;
    x.sts.independent = true;
    x.sts.t_prob.assign(T.size(), 0.0);
    x.sts.t_to_s.assign(T.size(), {});
    for (std::size_t s = 0; s < S.size(); ++s)
        for (const auto& [t, pt] : x.s_to_t[s]) {
            x.sts.t_prob[t] += x.s_prob[s] * pt;
            x.sts.t_to_s[t].emplace_back(s, x.s_prob[s] * pt);
        }
    for (std::size_t t = 0; t < T.size(); ++t)
        for (auto& e : x.sts.t_to_s[t])
            e.second /= x.sts.t_prob[t];

    // VASA: a1, a2 inside s spanning a flat (subspace) of full dimension, then v
    // inside s independent of both; every ordered pair appears, so it is symmetric.
    const int da = level_dimension(p.flavor(), l - 1);
    const int want_pair = affine ? 2 * da + 1 : 2 * da;
    const int want_triple = affine ? 2 * da + 2 : 2 * da + 1;
    std::vector<std::vector<std::array<std::size_t, 3>>> per_s(S.size());
    double total = 0.0;
    for (std::size_t s = 0; s < S.size(); ++s) {
        const auto& as = s_to_a[s];
        for (auto a1 : as)
            for (auto a2 : as) {
                const Subspace pair = join(f, A[a1], A[a2]);
                if (pair.dim() != want_pair)
                    continue;
                for (auto v : s_to_v[s])
                    if (join(f, pair, V[v]).dim() == want_triple)
                        per_s[s].push_back({v, a1, a2});
            }
        total += static_cast<double>(per_s[s].size());
        check_size_cap(total, kStavTableCap, "Grassmann VASA table");
    }
    for (std::size_t s = 0; s < S.size(); ++s)
        for (const auto& e : per_s[s])
            x.vasa.push_back({e[0], e[1], s, e[2], x.s_prob[s] / static_cast<double>(per_s[s].size())});
    x.has_vasa = !x.vasa.empty();
    spdlog::debug("grassmann STAV: |S|={} |T|={} |A|={} |V|={} vasa={}", S.size(), T.size(), A.size(), V.size(),
                  x.vasa.size());
    return x;
}

}  // namespace hdx
