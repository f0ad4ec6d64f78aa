#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sbmes/linalg.hpp"
#include "sbmes/rng.hpp"

namespace sbmes {

/// Block labels are 0-based internally (block k in 0..K-1); text interfaces
/// print them 1-based.
using Labels = std::vector<int>;

/// Stochastic blockmodel parameters: symmetric PSD block matrix `B` with
/// entries in (0,1) and mixing proportions `pi` on the simplex. The rank `d`
/// is detected from the spectrum of `B`.
class BlockModel {
 public:
  /// Validates and constructs; throws Error on any violated invariant.
  static BlockModel create(Matrix b, Vector pi);

  int blocks() const { return static_cast<int>(b_.rows()); }
  int rank() const { return rank_; }
  const Matrix& b() const { return b_; }
  const Vector& pi() const { return pi_; }

 private:
  BlockModel(Matrix b, Vector pi, int rank) : b_(std::move(b)), pi_(std::move(pi)), rank_(rank) {}

  Matrix b_;
  Vector pi_;
  int rank_;
};

/// K latent positions (rows of `x`) with their mixing proportions. Plain data:
/// engines build these from iterates that may transiently violate the
/// invariants, so validation is a separate call.
struct LatentConfig {
  Matrix x;
  Vector pi;

  int blocks() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }

  /// Throws unless every pairwise dot product lies in (0,1), row norms are at
  /// most 1, and pi is a probability vector.
  void validate() const;
};

struct Graph {
  Matrix adjacency;                // symmetric 0/1, zero diagonal
  std::optional<Labels> labels;    // true block memberships when known

  int size() const { return static_cast<int>(adjacency.rows()); }
};

/// Symmetric square root U D^{1/2} U^T for full-rank B; the thin factor
/// U_r D_r^{1/2} (K x r) when B has rank r < K.
Matrix canonical_latent_positions(const Matrix& b);

Labels sample_labels(const Vector& pi, int n, Rng& rng);

/// Block-stacked labels with counts given by largest-remainder rounding of
/// n * pi (ties go to the lower block index).
Labels balanced_labels(const Vector& pi, int n);

std::vector<int> label_counts(const Labels& labels, int blocks);

Graph sample_sbm(const BlockModel& model, int n, Rng& rng,
                 std::optional<std::span<const int>> fixed_labels = std::nullopt);

/// Row i of the result is the latent position of block labels[i].
Matrix expand_latent_positions(const Matrix& x, std::span<const int> labels);

/// Upper-triangle edge list, one "i j" line per edge, 1-based vertices.
void write_edge_list(std::ostream& out, const Graph& graph);

}  // namespace sbmes
