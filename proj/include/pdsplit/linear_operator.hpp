#pragma once

#include <functional>
#include <vector>

#include "pdsplit/vec.hpp"

namespace pdsplit {

/// Linear map M : X -> Y given by its action and adjoint. gram_inverse,
/// when available, solves (M*M) w = v; it is what the splitting solvers
/// use for exact x-updates when the composite term has no prox shortcut.
/// gram_diag is nonempty iff M*M is exactly the diagonal matrix it holds.
struct LinearOperator {
  std::size_t dim_in = 0;
  std::size_t dim_out = 0;
  bool injective = false;

  std::function<Vec(const Vec&)> apply;
  std::function<Vec(const Vec&)> adjoint;
  std::function<Vec(const Vec&)> gram_inverse;  // optional
  Vec gram_diag;                                // optional
  double gram_opnorm = 0.0;  // upper bound on the spectral norm of M*M
};

LinearOperator identity_operator(std::size_t dim);

/// M = diag(d); entries must be nonzero for injectivity.
LinearOperator diagonal_operator(Vec d);

/// Dense M from row-major entries (rows x cols). Computes the Gram matrix
/// and its Cholesky factor up front; injective iff the factorization
/// succeeds.
LinearOperator dense_operator(std::vector<Vec> rows);

namespace linalg {

/// In-place Cholesky A = L L^T of a symmetric positive definite matrix in
/// row-major order; returns false if a pivot drops below tol.
bool cholesky(std::vector<Vec>& a, double tol = 1e-12);

/// Solve L L^T x = b with the factor produced by cholesky().
Vec cholesky_solve(const std::vector<Vec>& chol, const Vec& b);

Vec matvec(const std::vector<Vec>& a, const Vec& x);
Vec matvec_transpose(const std::vector<Vec>& a, const Vec& x);

}  // namespace linalg

}  // namespace pdsplit
