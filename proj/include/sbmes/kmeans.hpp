#pragma once

#include "sbmes/graph_model.hpp"
#include "sbmes/linalg.hpp"
#include "sbmes/mixture.hpp"
#include "sbmes/rng.hpp"

namespace sbmes {

struct KMeansResult {
  Labels labels;
  Matrix centers;
  int iterations = 0;
  bool converged = false;        // assignments reached a fixed point
  int empty_cluster_events = 0;  // reseeds of empty clusters
};

/// Lloyd iteration from `init_centers` (K = rows). Points go to the nearest
/// center, ties to the lowest index. An empty cluster is reseeded at the point
/// farthest from its assigned center and counted.
KMeansResult kmeans(const Matrix& points, const Matrix& init_centers, int max_iter = 100);

/// Seeded k-means++ centers.
Matrix kmeans_plus_plus(const Matrix& points, int blocks, Rng& rng);

/// Starting state for non-oracle use: k-means++ then Lloyd on the ASE points,
/// proportions from cluster fractions, centers as latent positions, and the
/// engine's covariances at that configuration (cluster covariances for EM).
/// For the LSE engines `points` is the LSE and `ase_points` the ASE.
MixtureState kmeans_initial_state(Engine engine, const Matrix& points, const Matrix& ase_points,
                                  int blocks, Rng& rng);

}  // namespace sbmes
