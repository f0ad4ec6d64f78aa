#include "sbmes/kmeans.hpp"

#include <limits>
#include <vector>

namespace sbmes {
namespace {

int nearest(const Matrix& centers, const Eigen::Ref<const Eigen::RowVectorXd>& point, double* dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < centers.rows(); ++k) {
    const double d = (centers.row(k) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

Responsibilities one_hot(const Labels& labels, int blocks) {
  Responsibilities r;
  r.z = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), blocks);
  for (std::size_t i = 0; i < labels.size(); ++i) r.z(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, const Matrix& init_centers, int max_iter) {
  const Eigen::Index n = points.rows();
  const Eigen::Index blocks = init_centers.rows();
  if (blocks < 1 || blocks > n || init_centers.cols() != points.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "k-means needs 1 <= K <= n matching dimensions");
  }
  KMeansResult out;
  out.centers = init_centers;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int it = 1; it <= max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int k = nearest(out.centers, points.row(i), &dist[static_cast<std::size_t>(i)]);
      if (k != out.labels[static_cast<std::size_t>(i)]) {
        out.labels[static_cast<std::size_t>(i)] = k;
        changed = true;
      }
    }
    out.iterations = it;
    if (!changed) {
      out.converged = true;
      break;
    }
    Matrix sums = Matrix::Zero(blocks, points.cols());
    Vector sizes = Vector::Zero(blocks);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int k = out.labels[static_cast<std::size_t>(i)];
      sums.row(k) += points.row(i);
      sizes(k) += 1.0;
    }
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (Eigen::Index k = 0; k < blocks; ++k) {
      if (sizes(k) > 0.0) {
        out.centers.row(k) = sums.row(k) / sizes(k);
        continue;
      }
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
      }
      if (far < 0) far = 0;
      taken[static_cast<std::size_t>(far)] = true;
      out.centers.row(k) = points.row(far);
      ++out.empty_cluster_events;
    }
  }
  return out;
}

Matrix kmeans_plus_plus(const Matrix& points, int blocks, Rng& rng) {
  const Eigen::Index n = points.rows();
  if (blocks < 1 || blocks > n) throw Error(ErrorCode::kInvalidArgument, "k-means++ needs 1 <= K <= n");
  Matrix centers(blocks, points.cols());
  auto first = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n));
  centers.row(0) = points.row(std::min(first, n - 1));
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = (points.row(i) - centers.row(0)).squaredNorm();
  for (int k = 1; k < blocks; ++k) {
    const double total = d2.sum();
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2(i);
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.row(k) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), (points.row(i) - centers.row(k)).squaredNorm());
  }
  return centers;
}

MixtureState kmeans_initial_state(Engine engine, const Matrix& points, const Matrix& ase_points,
                                  int blocks, Rng& rng) {
  const KMeansResult km = kmeans(ase_points, kmeans_plus_plus(ase_points, blocks, rng));
  const Responsibilities hard = one_hot(km.labels, blocks);
  const int n = static_cast<int>(ase_points.rows());
  switch (engine) {
    case Engine::kFullGmmEm:
      return m_step_full_gmm(points, hard);
    case Engine::kEsAse: {
      Vector pi = hard.z.colwise().mean().transpose();
      return ase_curved_state(LatentConfig{km.centers, pi}, n);
    }
    case Engine::kEsLse: {
      Vector pi = hard.z.colwise().mean().transpose();
      return lse_curved_state(LatentConfig{km.centers, pi}, static_cast<double>(n) * pi, n);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown engine");
}

}  // namespace sbmes
