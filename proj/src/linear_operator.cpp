#include "pdsplit/linear_operator.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace pdsplit {

namespace linalg {

bool cholesky(std::vector<Vec>& a, double tol) {
  const std::size_t n = a.size();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (d <= tol) return false;
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  return true;
}

Vec cholesky_solve(const std::vector<Vec>& chol, const Vec& b) {
  const std::size_t n = chol.size();
  if (b.size() != n) throw std::invalid_argument("cholesky_solve: size mismatch");
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol[i][k] * y[k];
    y[i] = s / chol[i][i];
  }
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= chol[k][ii] * x[k];
    x[ii] = s / chol[ii][ii];
  }
  return x;
}

Vec matvec(const std::vector<Vec>& a, const Vec& x) {
  Vec r(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != x.size())
      throw std::invalid_argument("matvec: size mismatch");
    r[i] = dot(a[i], x);
  }
  return r;
}

Vec matvec_transpose(const std::vector<Vec>& a, const Vec& x) {
  if (a.size() != x.size())
    throw std::invalid_argument("matvec_transpose: size mismatch");
  if (a.empty()) return {};
  Vec r(a[0].size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += a[i][j] * x[i];
  return r;
}

}  // namespace linalg

LinearOperator identity_operator(std::size_t dim) {
  LinearOperator op;
  op.dim_in = op.dim_out = dim;
  op.injective = true;
  op.apply = [](const Vec& x) { return x; };
  op.adjoint = [](const Vec& y) { return y; };
  op.gram_inverse = [](const Vec& v) { return v; };
  op.gram_diag.assign(dim, 1.0);
  op.gram_opnorm = 1.0;
  return op;
}

LinearOperator diagonal_operator(Vec d) {
  LinearOperator op;
  op.dim_in = op.dim_out = d.size();
  auto diag = std::make_shared<Vec>(std::move(d));
  bool inj = true;
  double max_sq = 0.0;
  op.gram_diag.resize(diag->size());
  for (std::size_t i = 0; i < diag->size(); ++i) {
    const double sq = (*diag)[i] * (*diag)[i];
    op.gram_diag[i] = sq;
    max_sq = std::max(max_sq, sq);
    if (sq == 0.0) inj = false;
  }
  op.injective = inj;
  op.gram_opnorm = max_sq;
  op.apply = [diag](const Vec& x) {
    if (x.size() != diag->size())
      throw std::invalid_argument("diagonal_operator: size mismatch");
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = (*diag)[i] * x[i];
    return r;
  };
  op.adjoint = op.apply;
  if (inj) {
    Vec gdiag = op.gram_diag;
    op.gram_inverse = [gdiag](const Vec& v) {
      Vec r(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] / gdiag[i];
      return r;
    };
  }
  return op;
}

LinearOperator dense_operator(std::vector<Vec> rows) {
  if (rows.empty()) throw std::invalid_argument("dense_operator: empty matrix");
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != n_cols)
      throw std::invalid_argument("dense_operator: ragged rows");

  auto mat = std::make_shared<std::vector<Vec>>(std::move(rows));

  // Gram matrix G = M^T M and its Cholesky factor
  std::vector<Vec> gram(n_cols, Vec(n_cols, 0.0));
  for (std::size_t i = 0; i < n_rows; ++i)
    for (std::size_t j = 0; j < n_cols; ++j)
      for (std::size_t k = j; k < n_cols; ++k)
        gram[j][k] += (*mat)[i][j] * (*mat)[i][k];
  double frob = 0.0;
  for (std::size_t j = 0; j < n_cols; ++j)
    for (std::size_t k = 0; k < n_cols; ++k) {
      if (k < j) gram[j][k] = gram[k][j];
      frob += gram[j][k] * gram[j][k];
    }

  LinearOperator op;
  op.dim_in = n_cols;
  op.dim_out = n_rows;
  op.gram_opnorm = std::sqrt(frob);
  op.apply = [mat](const Vec& x) { return linalg::matvec(*mat, x); };
  op.adjoint = [mat](const Vec& y) { return linalg::matvec_transpose(*mat, y); };

  auto chol = std::make_shared<std::vector<Vec>>(gram);
  if (linalg::cholesky(*chol)) {
    op.injective = true;
    op.gram_inverse = [chol](const Vec& v) {
      return linalg::cholesky_solve(*chol, v);
    };
  }
  return op;
}

}  // namespace pdsplit
