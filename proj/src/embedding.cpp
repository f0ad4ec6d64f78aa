#include "sbmes/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "sbmes/error.hpp"

namespace sbmes {
namespace {

Embedding spectral_factor(const Matrix& m, int d, EmbeddingKind kind) {
  if (d < 1 || d > m.rows()) throw Error(ErrorCode::kInvalidArgument, "embedding rank out of range");
  SymmetricEigen top = symmetric_eigen_top(m, d);
  // Eigenvalues within rounding of zero count as zero.
  const double scale = m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
  const double floor = static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() * scale;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (!(top.values(k) > floor)) {
      throw Error(ErrorCode::kInsufficientSpectrum,
                  "insufficient positive spectrum: eigenvalue " + std::to_string(k + 1) +
                      " is " + std::to_string(top.values(k)));
    }
  }
  Embedding out;
  out.kind = kind;
  out.points = top.vectors * top.values.cwiseSqrt().asDiagonal();
  out.eigenvalues = std::move(top.values);
  return out;
}

}  // namespace

Embedding ase(const Matrix& adjacency, int d) {
  Embedding out = spectral_factor(adjacency, d, EmbeddingKind::kAse);
  out.degrees = adjacency.rowwise().sum();
  return out;
}

Matrix normalized_laplacian(const Matrix& m) {
  const Vector deg = m.rowwise().sum();
  for (Eigen::Index i = 0; i < deg.size(); ++i) {
    if (!(deg(i) > 0.0)) {
      throw Error(ErrorCode::kIsolatedVertex, "isolated vertex " + std::to_string(i + 1));
    }
  }
  const Vector scale = deg.cwiseSqrt().cwiseInverse();
  Matrix out = scale.asDiagonal() * m * scale.asDiagonal();
  return symmetrize(out);
}

Embedding lse(const Matrix& adjacency, int d) {
  Embedding out = spectral_factor(normalized_laplacian(adjacency), d, EmbeddingKind::kLse);
  out.degrees = adjacency.rowwise().sum();
  return out;
}

Embedding ase_to_lse(const Embedding& ase_embedding, const Vector& degrees) {
  if (ase_embedding.kind != EmbeddingKind::kAse) {
    throw Error(ErrorCode::kInvalidArgument, "ase_to_lse expects an ASE embedding");
  }
  if (degrees.size() != ase_embedding.points.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "degree vector length mismatch");
  }
  for (Eigen::Index i = 0; i < degrees.size(); ++i) {
    if (!(degrees(i) > 0.0)) throw Error(ErrorCode::kInvalidScaling, "nonpositive degree");
  }
  Embedding out;
  out.kind = EmbeddingKind::kLse;
  out.degrees = degrees;
  out.points = degrees.cwiseSqrt().cwiseInverse().asDiagonal() * ase_embedding.points;
  return out;
}

Matrix procrustes_align(const Matrix& source, const Matrix& target) {
  if (source.rows() != target.rows() || source.cols() != target.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "procrustes shapes disagree");
  }
  const Matrix cross = source.transpose() * target;
  if (cross.isZero(0.0)) return Matrix::Identity(source.cols(), source.cols());
  Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

void write_points(std::ostream& out, const Matrix& points) {
  char buf[32];
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", points(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace sbmes
