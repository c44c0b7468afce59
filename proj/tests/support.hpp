#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hdx/error.hpp"
#include "hdx/walks.hpp"

namespace hdx::testing {

/** Kind of the hdx::Error raised by `fn`, or nullopt when nothing is thrown. */
template <class F>
std::optional<ErrorKind> error_kind(F&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

/** Dense D_s^{1/2} P D_t^{-1/2} built directly from the transition matrix. */
inline Eigen::MatrixXd dense_symmetrized(const MarkovOperator& op)
{
    Eigen::MatrixXd p = Eigen::MatrixXd(op.matrix());
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            p(i, j) *= std::sqrt(op.source().measure[static_cast<std::size_t>(i)]) /
                       std::sqrt(op.target().measure[static_cast<std::size_t>(j)]);
    return p;
}

/** Eigenvalues of a reversible square walk, descending, from a full dense solve. */
inline std::vector<double> dense_eigenvalues(const MarkovOperator& op)
{
    Eigen::MatrixXd s = dense_symmetrized(op);
    s = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

/** Second singular value of a bipartite walk from a full dense SVD. */
inline double dense_second_singular(const MarkovOperator& op)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense_symmetrized(op));
    const auto& sv = svd.singularValues();
    return sv.size() > 1 ? sv(1) : 0.0;
}

}  // namespace hdx::testing
