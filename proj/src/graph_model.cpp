#include "sbmes/graph_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sbmes/error.hpp"

namespace sbmes {
namespace {

void check_simplex(const Vector& pi) {
  if (pi.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty mixing proportions");
  for (Eigen::Index k = 0; k < pi.size(); ++k) {
    if (!(pi(k) >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative mixing proportion");
  }
  if (std::abs(pi.sum() - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "mixing proportions must sum to 1");
  }
}

}  // namespace

BlockModel BlockModel::create(Matrix b, Vector pi) {
  if (b.rows() == 0 || b.rows() != b.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "block matrix must be square and nonempty");
  }
  if (pi.size() != b.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "pi length must match block count");
  }
  if (!is_symmetric(b, 0.0)) throw Error(ErrorCode::kNotSymmetric, "block matrix not symmetric");
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double v = b.data()[i];
    if (!(v > 0.0 && v < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "block probabilities must lie in (0,1)");
    }
  }
  check_simplex(pi);
  const SymmetricEigen eig = symmetric_eigen(b);
  if (eig.values(eig.values.size() - 1) < -1e-10) {
    throw Error(ErrorCode::kNotPsd, "block matrix is not PSD");
  }
  const double cut = 1e-10 * eig.values(0);
  const int rank = static_cast<int>((eig.values.array() > cut).count());
  return BlockModel(std::move(b), std::move(pi), rank);
}

void LatentConfig::validate() const {
  if (x.rows() != pi.size()) {
    throw Error(ErrorCode::kInvalidArgument, "latent rows must match pi length");
  }
  check_simplex(pi);
  const Matrix gram = x * x.transpose();
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    if (x.row(i).norm() > 1.0) throw Error(ErrorCode::kInvalidArgument, "latent row norm exceeds 1");
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
      if (!(gram(i, j) > 0.0 && gram(i, j) < 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "latent dot products must lie in (0,1)");
      }
    }
  }
}

Matrix canonical_latent_positions(const Matrix& b) {
  if (!is_symmetric(b, 1e-12)) throw Error(ErrorCode::kNotSymmetric, "block matrix not symmetric");
  const SymmetricEigen eig = symmetric_eigen(b);
  const Eigen::Index k = eig.values.size();
  if (eig.values(k - 1) < -1e-10) throw Error(ErrorCode::kNotPsd, "block matrix is not PSD");
  const double cut = 1e-10 * eig.values(0);
  const Eigen::Index r = (eig.values.array() > cut).count();
  const Vector root = eig.values.head(r).cwiseSqrt();
  const Matrix factor = eig.vectors.leftCols(r) * root.asDiagonal();
  if (r == k) return factor * eig.vectors.transpose();
  return factor;
}

Labels sample_labels(const Vector& pi, int n, Rng& rng) {
  Vector cumulative(pi.size());
  std::partial_sum(pi.data(), pi.data() + pi.size(), cumulative.data());
  Labels labels(static_cast<std::size_t>(n));
  const int last = static_cast<int>(pi.size()) - 1;
  for (auto& label : labels) {
    const double u = uniform01(rng);
    int k = 0;
    while (k < last && u >= cumulative(k)) ++k;
    label = k;
  }
  return labels;
}

Labels balanced_labels(const Vector& pi, int n) {
  const auto blocks = static_cast<std::size_t>(pi.size());
  std::vector<int> counts(blocks);
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t k = 0; k < blocks; ++k) {
    const double share = n * pi(static_cast<Eigen::Index>(k));
    counts[k] = static_cast<int>(std::floor(share));
    assigned += counts[k];
    remainders.emplace_back(share - counts[k], k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i % blocks].second];
  Labels labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < blocks; ++k) labels.insert(labels.end(), counts[k], static_cast<int>(k));
  return labels;
}

std::vector<int> label_counts(const Labels& labels, int blocks) {
  std::vector<int> counts(static_cast<std::size_t>(blocks), 0);
  for (int label : labels) {
    if (label < 0 || label >= blocks) throw Error(ErrorCode::kLabelOutOfRange, "label out of range");
    ++counts[static_cast<std::size_t>(label)];
  }
  return counts;
}

Graph sample_sbm(const BlockModel& model, int n, Rng& rng,
                 std::optional<std::span<const int>> fixed_labels) {
  const int blocks = model.blocks();
  if (n < blocks) throw Error(ErrorCode::kInvalidArgument, "need n >= K");
  Labels labels;
  if (fixed_labels) {
    if (static_cast<int>(fixed_labels->size()) != n) {
      throw Error(ErrorCode::kInvalidArgument, "fixed labels must have length n");
    }
    labels.assign(fixed_labels->begin(), fixed_labels->end());
    for (int label : labels) {
      if (label < 0 || label >= blocks) throw Error(ErrorCode::kLabelOutOfRange, "label out of range");
    }
  } else {
    labels = sample_labels(model.pi(), n, rng);
  }
  Graph graph;
  graph.adjacency = Matrix::Zero(n, n);
  const Matrix& b = model.b();
  // Column-major sweep over the strict upper triangle; the draw order is part
  // of the reproducibility contract.
  for (int j = 1; j < n; ++j) {
    const int lj = labels[static_cast<std::size_t>(j)];
    for (int i = 0; i < j; ++i) {
      const double p = b(labels[static_cast<std::size_t>(i)], lj);
      if (uniform01(rng) < p) {
        graph.adjacency(i, j) = 1.0;
        graph.adjacency(j, i) = 1.0;
      }
    }
  }
  graph.labels = std::move(labels);
  return graph;
}

Matrix expand_latent_positions(const Matrix& x, std::span<const int> labels) {
  Matrix out(static_cast<Eigen::Index>(labels.size()), x.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int k = labels[i];
    if (k < 0 || k >= x.rows()) throw Error(ErrorCode::kLabelOutOfRange, "label out of range");
    out.row(static_cast<Eigen::Index>(i)) = x.row(k);
  }
  return out;
}

void write_edge_list(std::ostream& out, const Graph& graph) {
  const int n = graph.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (graph.adjacency(i, j) != 0.0) out << (i + 1) << ' ' << (j + 1) << '\n';
}

}  // namespace sbmes
