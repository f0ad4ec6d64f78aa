#pragma once

#include <ostream>

#include "sbmes/linalg.hpp"

namespace sbmes {

enum class EmbeddingKind { kAse, kLse };

struct Embedding {
  Matrix points;        // n x d, one vertex per row
  EmbeddingKind kind = EmbeddingKind::kAse;
  Vector degrees;       // row sums of the adjacency the embedding came from
  Vector eigenvalues;   // the d retained eigenvalues, descending; empty after ase_to_lse
};

/// Adjacency spectral embedding U_A^{(d)} (D_A^{(d)})^{1/2}. Throws
/// kInsufficientSpectrum when any of the top-d eigenvalues is not positive.
Embedding ase(const Matrix& adjacency, int d);

/// diag(M 1)^{-1/2} M diag(M 1)^{-1/2}; throws kIsolatedVertex on a
/// nonpositive row sum.
Matrix normalized_laplacian(const Matrix& m);

/// The same construction as ase() applied to normalized_laplacian(A).
Embedding lse(const Matrix& adjacency, int d);

/// Divides row i by sqrt(degrees[i]).
Embedding ase_to_lse(const Embedding& ase_embedding, const Vector& degrees);

/// Orthogonal W minimizing ||source W - target||_F, from the SVD of
/// source^T target. When the cross matrix is rank deficient any orthogonal
/// completion of the singular bases is returned, so W is valid but not unique;
/// an exactly zero cross matrix gives the identity.
Matrix procrustes_align(const Matrix& source, const Matrix& target);

/// One point per row, comma separated, 17 significant digits.
void write_points(std::ostream& out, const Matrix& points);

}  // namespace sbmes
