#include "hdx/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "hdx/error.hpp"

namespace hdx::linalg {

namespace {

constexpr std::size_t kDenseLimit = 1500;
constexpr double kDenseSvdEntries = 4e6;
constexpr double kLanczosStorage = 2.5e7;

bool use_dense(Method method, std::size_t n)
{
    if (method == Method::Dense)
        return true;
    if (method == Method::Iterative)
        return false;
    return n <= dense_limit();
}

/** Trailing block of H A H where H is the Householder reflection sending u to a multiple of e1. */
Eigen::MatrixXd deflate_dense(Eigen::MatrixXd a, const Eigen::VectorXd& u)
{
    const Eigen::Index n = a.rows();
    Eigen::VectorXd w = u;
    double sgn = u(0) >= 0 ? 1.0 : -1.0;
    w(0) += sgn * u.norm();
    double ww = w.squaredNorm();
    if (!(ww > 0.0))
        fail(ErrorKind::InvalidInput, "deflation vector is zero");
    double beta = 2.0 / ww;
    Eigen::VectorXd p = beta * (a * w);
    double k = 0.5 * beta * w.dot(p);
    Eigen::VectorXd q = p - k * w;
    a.noalias() -= w * q.transpose();
    a.noalias() -= q * w.transpose();
    Eigen::MatrixXd block = a.bottomRightCorner(n - 1, n - 1);
    return 0.5 * (block + block.transpose());
}

Eigen::VectorXd descending(const Eigen::VectorXd& asc)
{
    return asc.reverse();
}

}  // namespace

std::size_t dense_limit()
{
    return size_cap(kDenseLimit);
}

Extremes lanczos(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply, std::size_t n,
                 const Eigen::VectorXd* deflate, double tol)
{
    Extremes out;
    out.iterative = true;
    const std::size_t n_eff = n - (deflate ? 1 : 0);
    if (n_eff == 0)
        return out;
    const std::size_t storage_cap = static_cast<std::size_t>(kLanczosStorage / static_cast<double>(n));
    const std::size_t m_cap = std::min(n_eff, std::max<std::size_t>(50, storage_cap));

    auto project = [&](Eigen::VectorXd& x) {
        if (deflate)
            x -= deflate->dot(x) * (*deflate);
    };

    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd q(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < q.size(); ++i)
        q(i) = gauss(rng);
    project(q);
    q.normalize();

    std::vector<Eigen::VectorXd> basis;
    std::vector<double> alpha, beta;
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    std::size_t next_check = std::min<std::size_t>(20, m_cap);

    for (std::size_t j = 0;; ++j) {
        basis.push_back(q);
        apply(q, w);
        project(w);
        double a = q.dot(w);
        alpha.push_back(a);
        w -= a * q;
        if (j > 0)
            w -= beta.back() * basis[j - 1];
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis)
                w -= b.dot(w) * b;
            project(w);
        }
        double b = w.norm();
        const std::size_t m = j + 1;
        bool exhausted = b < 1e-13 || m >= n_eff || m >= m_cap;
        if (exhausted || m >= next_check) {
            Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(m));
            Eigen::VectorXd sub(static_cast<Eigen::Index>(m > 0 ? m - 1 : 0));
            for (std::size_t i = 0; i + 1 < m; ++i)
                sub(static_cast<Eigen::Index>(i)) = beta[i];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            const Eigen::Index last = static_cast<Eigen::Index>(m) - 1;
            double res_top = std::abs(b * es.eigenvectors()(last, last));
            double res_bot = std::abs(b * es.eigenvectors()(last, 0));
            out.top = es.eigenvalues()(last);
            out.bottom = es.eigenvalues()(0);
            out.residual = std::max(res_top, res_bot);
            if (out.residual <= tol || exhausted) {
                if (out.residual > tol)
                    spdlog::warn("lanczos stopped after {} steps with residual {:.3e}", m, out.residual);
                return out;
            }
            next_check = std::min(m_cap, std::max(m + 10, m + m / 2));
        }
        beta.push_back(b);
        q = w / b;
    }
}

Extremes deflated_extremes(const SparseMat& s, const Eigen::VectorXd& u, Method method)
{
    const std::size_t n = static_cast<std::size_t>(s.rows());
    Extremes out;
    if (n <= 1)
        return out;
    if (use_dense(method, n)) {
        Eigen::VectorXd ev = deflated_eigenvalues(s, u);
        out.top = ev(0);
        out.bottom = ev(ev.size() - 1);
        return out;
    }
    return lanczos([&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = s * x; }, n, &u);
}

Eigen::VectorXd deflated_eigenvalues(const SparseMat& s, const Eigen::VectorXd& u)
{
    if (s.rows() <= 1)
        return Eigen::VectorXd();
    Eigen::MatrixXd block = deflate_dense(Eigen::MatrixXd(s), u.normalized());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block, Eigen::EigenvaluesOnly);
    return descending(es.eigenvalues());
}

Extremes extremes(const SparseMat& s, Method method)
{
    const std::size_t n = static_cast<std::size_t>(s.rows());
    Extremes out;
    if (n == 0)
        return out;
    if (use_dense(method, n)) {
        Eigen::MatrixXd a(s);
        a = 0.5 * (a + a.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
        out.top = es.eigenvalues()(static_cast<Eigen::Index>(n) - 1);
        out.bottom = es.eigenvalues()(0);
        return out;
    }
    return lanczos([&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = s * x; }, n, nullptr);
}

double deflated_top_singular(const SparseMat& m, const Eigen::VectorXd& u, const Eigen::VectorXd& v, Method method,
                             double* residual, bool* iterative)
{
    const std::size_t nl = static_cast<std::size_t>(m.rows()), nr = static_cast<std::size_t>(m.cols());
    if (residual)
        *residual = 0.0;
    if (iterative)
        *iterative = false;
    if (nl <= 1 || nr <= 1)
        return 0.0;
    const std::size_t small = std::min(nl, nr);
    const bool dense_ok = small <= dense_limit() &&
                          static_cast<double>(nl) * static_cast<double>(nr) <= kDenseSvdEntries *
                                                                                   static_cast<double>(size_cap(1));
    if (method == Method::Dense || (method == Method::Auto && dense_ok)) {
        Eigen::MatrixXd a(m);
        a.noalias() -= u * v.transpose();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
        return svd.singularValues()(0);
    }
    const bool left = nl <= nr;
    SparseMat mt = SparseMat(m.transpose());
    const Eigen::VectorXd& defl = left ? u : v;
    Extremes ex;
    if (method == Method::Auto && small <= dense_limit()) {
        SparseMat g = left ? SparseMat(m * mt) : SparseMat(mt * m);
        Eigen::VectorXd ev = deflated_eigenvalues(g, defl);
        ex.top = ev(0);
    } else {
        auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            if (left) {
                Eigen::VectorXd t = mt * x;
                y.noalias() = m * t;
            } else {
                Eigen::VectorXd t = m * x;
                y.noalias() = mt * t;
            }
        };
        ex = lanczos(apply, small, &defl);
        if (iterative)
            *iterative = true;
    }
    if (residual)
        *residual = ex.residual;
    return std::sqrt(std::max(0.0, ex.top));
}

}  // namespace hdx::linalg
