#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

#include "hdx/walks.hpp"

namespace hdx::linalg {

enum class Method { Auto, Dense, Iterative };

/** Largest dimension handled by dense solvers under Method::Auto. */
std::size_t dense_limit();

/** Extreme eigenvalues of a symmetric matrix on a subspace. */
struct Extremes {
    double top = 0.0;
    double bottom = 0.0;
    /** Largest Ritz residual (iterative) or 0 (dense, backward stable). */
    double residual = 0.0;
    bool iterative = false;
};

/**
 * Extreme eigenvalues of the symmetric matrix `s` restricted to the
 * orthogonal complement of the unit vector `u`. The dense path applies a
 * Householder reflection sending u to e1 and solves the trailing block; the
 * iterative path runs Lanczos with full reorthogonalization inside u-perp.
 */
Extremes deflated_extremes(const SparseMat& s, const Eigen::VectorXd& u, Method method = Method::Auto);

/** All eigenvalues of `s` on u-perp, descending (dense only). */
Eigen::VectorXd deflated_eigenvalues(const SparseMat& s, const Eigen::VectorXd& u);

/** Extreme eigenvalues of a symmetric matrix without deflation. */
Extremes extremes(const SparseMat& s, Method method = Method::Auto);

/**
 * Largest singular value of m - u v^T, where u and v are the unit top
 * singular vectors of m (so the result is the second singular value).
 */
double deflated_top_singular(const SparseMat& m, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             Method method = Method::Auto, double* residual = nullptr,
                             bool* iterative = nullptr);

/**
 * Lanczos with full reorthogonalization for a symmetric operator given by
 * `apply` on R^n. When `deflate` is non-null the iteration stays in its
 * orthogonal complement. The start vector comes from a fixed seed.
 */
Extremes lanczos(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply, std::size_t n,
                 const Eigen::VectorXd* deflate, double tol = 1e-11);

}  // namespace hdx::linalg
