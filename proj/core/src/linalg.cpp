#include "covfmm/linalg.hpp"

#include <cmath>

namespace covfmm {

namespace {

void require_square_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols())
    throw ContractViolation(std::string(who) + ": matrix is not square");
  if (!is_symmetric(m))
    throw ContractViolation(std::string(who) + ": matrix is not symmetric");
}

// Unblocked Cholesky that stops at the first non-positive pivot.  Only runs
// on the error path, after Eigen's LLT has already refused the matrix.
long find_bad_pivot(const Matrix& m) {
  const Index n = m.rows();
  Matrix a = m;
  for (Index k = 0; k < n; ++k) {
    double d = a(k, k);
    for (Index j = 0; j < k; ++j) d -= a(k, j) * a(k, j);
    if (!(d > 0.0)) return static_cast<long>(k);
    d = std::sqrt(d);
    a(k, k) = d;
    for (Index i = k + 1; i < n; ++i) {
      double v = a(i, k);
      for (Index j = 0; j < k; ++j) v -= a(i, j) * a(k, j);
      a(i, k) = v / d;
    }
  }
  return static_cast<long>(n - 1);
}

Eigen::LLT<Matrix> factor_spd(const Matrix& m, const char* who) {
  require_square_symmetric(m, who);
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw DefinitenessError(std::string(who) + ": matrix is not positive definite",
                            find_bad_pivot(m));
  return llt;
}

}  // namespace

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = j + 1; i < m.rows(); ++i)
      if (std::abs(m(i, j) - m(j, i)) > tol * scale) return false;
  return true;
}

EigenDecomposition sym_eig(const Matrix& m) {
  require_square_symmetric(m, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError("sym_eig: eigensolver did not converge");
  // Eigen sorts ascending; flip to descending
  const Index n = m.rows();
  EigenDecomposition out;
  out.values = es.eigenvalues().reverse();
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  return out;
}

TruncatedSvd truncated_svd(const Matrix& m, Index p) {
  const Index kmax = std::min(m.rows(), m.cols());
  if (p < 1 || p > kmax)
    throw ArgumentError("truncated_svd: p must be in [1, min(rows, cols)], got " +
                        std::to_string(p));
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw NumericalError("truncated_svd: SVD did not converge");

  TruncatedSvd out;
  out.singular_values = svd.singularValues().head(p);
  out.left = svd.matrixU().leftCols(p);
  out.right = svd.matrixV().leftCols(p);

  // sign convention: largest-magnitude entry of each right vector positive
  for (Index k = 0; k < p; ++k) {
    Index at = 0;
    double best = -1.0;
    for (Index i = 0; i < out.right.rows(); ++i) {
      const double a = std::abs(out.right(i, k));
      if (a > best) {
        best = a;
        at = i;
      }
    }
    if (out.right(at, k) < 0.0) {
      out.right.col(k) = -out.right.col(k);
      out.left.col(k) = -out.left.col(k);
    }
  }
  return out;
}

Matrix spd_invert(const Matrix& m) {
  auto llt = factor_spd(m, "spd_invert");
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  // symmetric by construction: mirror the lower triangle
  for (Index j = 0; j < inv.cols(); ++j)
    for (Index i = j + 1; i < inv.rows(); ++i) inv(j, i) = inv(i, j);
  return inv;
}

Matrix spd_cholesky(const Matrix& m) {
  return factor_spd(m, "spd_cholesky").matrixL();
}

Matrix chol_sample(const Matrix& m, RandomStream& rng, Index n) {
  if (n < 1) throw ArgumentError("chol_sample: sample count must be positive");
  const Matrix l = spd_cholesky(m);
  const Index dim = m.rows();
  Matrix out(dim, n);
  Vector z(dim);
  for (Index c = 0; c < n; ++c) {
    for (Index i = 0; i < dim; ++i) z[i] = rng.normal();
    out.col(c) = l.triangularView<Eigen::Lower>() * z;
  }
  return out;
}

double condition_number(const Matrix& m) {
  require_square_symmetric(m, "condition_number");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("condition_number: eigensolver did not converge");
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(m.rows() - 1);
  if (!(lo > 0.0))
    throw DefinitenessError("condition_number: matrix is not positive definite", -1);
  return hi / lo;
}

}  // namespace covfmm
