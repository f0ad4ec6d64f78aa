#include "sbmes/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "sbmes/error.hpp"

namespace sbmes {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNone: return "none";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kNotSymmetric: return "not_symmetric";
    case ErrorCode::kNotPsd: return "not_psd";
    case ErrorCode::kInsufficientSpectrum: return "insufficient_positive_spectrum";
    case ErrorCode::kIsolatedVertex: return "isolated_vertex";
    case ErrorCode::kDegenerateConfiguration: return "degenerate_latent_configuration";
    case ErrorCode::kInvalidScaling: return "invalid_scaling";
    case ErrorCode::kCovarianceNotPd: return "covariance_not_pd";
    case ErrorCode::kComponentCollapse: return "component_collapse";
    case ErrorCode::kLabelOutOfRange: return "label_out_of_range";
    case ErrorCode::kNothingToCompare: return "nothing_to_compare";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

namespace {

// Runs dsyevr for eigenvalue indices [il, iu] (1-based, ascending order) and
// returns them reordered descending.
SymmetricEigen run_syevr(const Matrix& m, lapack_int il, lapack_int iu, bool all) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "eigendecomposition needs a square matrix");
  }
  const lapack_int n = static_cast<lapack_int>(m.rows());
  SymmetricEigen out;
  if (n == 0) return out;
  Matrix a = m;
  const lapack_int want = all ? n : iu - il + 1;
  Vector w(n);
  Matrix z(n, want);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(want));
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', all ? 'A' : 'I', 'L', n, a.data(), n, 0.0, 0.0,
                     il, iu, 0.0, &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != want) {
    throw Error(ErrorCode::kInvalidArgument,
                "dsyevr failed (info=" + std::to_string(info) + ")");
  }
  out.values.resize(want);
  out.vectors.resize(n, want);
  for (lapack_int j = 0; j < want; ++j) {
    out.values(j) = w(want - 1 - j);
    out.vectors.col(j) = z.col(want - 1 - j);
  }
  canonicalize_signs(out.vectors);
  return out;
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& m) {
  const auto n = static_cast<lapack_int>(m.rows());
  return run_syevr(m, 1, n, true);
}

SymmetricEigen symmetric_eigen_top(const Matrix& m, int k) {
  const auto n = static_cast<lapack_int>(m.rows());
  if (k < 1 || k > n) {
    throw Error(ErrorCode::kInvalidArgument, "requested eigenpair count out of range");
  }
  if (k == n) return run_syevr(m, 1, n, true);
  return run_syevr(m, n - k + 1, n, false);
}

void canonicalize_signs(Matrix& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      const double a = std::abs(vectors(i, j));
      // Strictly greater keeps the first index among near-equal magnitudes.
      if (a > best_abs * (1.0 + 1e-12)) {
        best_abs = a;
        best = i;
      }
    }
    if (vectors(best, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = j + 1; i < m.rows(); ++i)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix psd_floor(const Matrix& m, double rel_floor, int* clipped) {
  const Matrix s = symmetrize(m);
  const SymmetricEigen eig = symmetric_eigen(s);
  const double lmax = eig.values.size() > 0 ? eig.values(0) : 0.0;
  const double floor = rel_floor * std::max(lmax, 0.0);
  int count = 0;
  Vector vals = eig.values;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) < floor) {
      vals(i) = floor;
      ++count;
    }
  }
  if (clipped) *clipped = count;
  if (count == 0) return s;
  Matrix out = eig.vectors * vals.asDiagonal() * eig.vectors.transpose();
  return symmetrize(out);
}

GuardedInverse spd_inverse(const Matrix& m, double max_condition) {
  const SymmetricEigen eig = symmetric_eigen(symmetrize(m));
  const Eigen::Index d = eig.values.size();
  const double lmax = eig.values(0);
  const double lmin = eig.values(d - 1);
  if (!(lmin > 0.0) || lmax / lmin > max_condition) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "degenerate latent configuration: second-moment matrix is singular or "
                "ill-conditioned (lambda_min=" + std::to_string(lmin) + ")");
  }
  GuardedInverse out;
  out.condition = lmax / lmin;
  out.inverse = eig.vectors * eig.values.cwiseInverse().asDiagonal() * eig.vectors.transpose();
  out.inverse = symmetrize(out.inverse);
  return out;
}

double squared_norm(const std::vector<Matrix>& ms) {
  double s = 0.0;
  for (const auto& m : ms) s += m.squaredNorm();
  return s;
}

}  // namespace sbmes
