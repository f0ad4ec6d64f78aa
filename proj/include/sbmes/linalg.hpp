#pragma once

#include <Eigen/Dense>

#include <vector>

namespace sbmes {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenpairs of a real symmetric matrix, eigenvalues in descending
/// algebraic order. Each eigenvector is normalized and signed so that its
/// largest-magnitude entry is positive (first such entry on ties).
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

/// Full eigendecomposition (LAPACK dsyevr on the lower triangle).
SymmetricEigen symmetric_eigen(const Matrix& m);

/// The `k` algebraically largest eigenpairs. Only the requested columns are
/// computed, which keeps n ~ 2000 embeddings at one tridiagonalization cost.
SymmetricEigen symmetric_eigen_top(const Matrix& m, int k);

void canonicalize_signs(Matrix& vectors);

bool is_symmetric(const Matrix& m, double tol);

Matrix symmetrize(const Matrix& m);

/// Symmetrizes and clips eigenvalues below `rel_floor * lambda_max`.
/// Returns the number of clipped eigenvalues through `clipped` when given.
Matrix psd_floor(const Matrix& m, double rel_floor = 1e-12, int* clipped = nullptr);

struct GuardedInverse {
  Matrix inverse;
  double condition = 0.0;
};

/// Inverse of a symmetric positive definite matrix through its
/// eigendecomposition. Throws kDegenerateConfiguration when the condition
/// number exceeds `max_condition` or an eigenvalue is nonpositive.
GuardedInverse spd_inverse(const Matrix& m, double max_condition = 1e12);

/// Squared Frobenius norm of a matrix list, entrywise.
double squared_norm(const std::vector<Matrix>& ms);

}  // namespace sbmes
