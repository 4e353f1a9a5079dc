#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "mvkmf/error.hpp"

namespace mvkmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

// Flip each column so its largest-magnitude entry is positive. Ties go to the
// lowest row index, which makes eigen/singular vectors reproducible.
template <typename Derived>
void fix_column_signs(Eigen::MatrixBase<Derived>& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < m.rows(); ++i) {
      const double a = std::abs(m(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (m(best, j) < 0.0) m.col(j) = -m.col(j);
  }
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

struct TopEigen {
  Matrix vectors;  // n x k, columns ordered by descending eigenvalue
  Vector values;   // length k, descending
};

// Leading k eigenpairs of a symmetric matrix. Only the lower triangle is read.
inline TopEigen top_eigenvectors(const Matrix& sym, Index k) {
  require(sym.rows() == sym.cols(), ErrorKind::DimensionMismatch, "eigensolve needs a square matrix");
  require(k >= 1 && k <= sym.rows(), ErrorKind::BadParam, "eigenvector count out of range");
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  require(es.info() == Eigen::Success, ErrorKind::NonFinite, "symmetric eigensolve failed");
  const Index n = sym.rows();
  TopEigen out{Matrix(n, k), Vector(k)};
  for (Index j = 0; j < k; ++j) {
    out.vectors.col(j) = es.eigenvectors().col(n - 1 - j);
    out.values(j) = es.eigenvalues()(n - 1 - j);
  }
  fix_column_signs(out.vectors);
  return out;
}

struct PolarFactor {
  Matrix q;                // same shape as the input, orthonormal rows
  Vector singular_values;  // descending
  bool rank_deficient = false;
};

// For a wide matrix A (k x n, k <= n) returns Q = U V^T from the thin SVD
// A = U S V^T, the maximiser of tr(Q^T A) subject to Q Q^T = I.
inline PolarFactor polar_rows(const Matrix& a, double rank_tol = 1e-12) {
  require(a.rows() <= a.cols(), ErrorKind::DimensionMismatch, "polar factor expects a wide matrix");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  PolarFactor out;
  out.q = svd.matrixU() * svd.matrixV().transpose();
  out.singular_values = svd.singularValues();
  const Index k = a.rows();
  out.rank_deficient = k > 0 && out.singular_values(k - 1) < rank_tol;
  return out;
}

inline double orthonormality_error(const Matrix& rows) {
  const Matrix gram = rows * rows.transpose();
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace linalg
}  // namespace mvkmf
