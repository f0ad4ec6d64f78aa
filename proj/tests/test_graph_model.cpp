#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "sbmes/error.hpp"
#include "sbmes/graph_model.hpp"

using namespace sbmes;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector half() { return Vector::Constant(2, 0.5); }

// Closed-form square root of a 2x2 SPD matrix: (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)).
Matrix sqrt2x2(const Matrix& m) {
  const double s = std::sqrt(m.determinant());
  const double t = std::sqrt(m.trace() + 2 * s);
  return (m + s * Matrix::Identity(2, 2)) / t;
}

}  // namespace

TEST_CASE("canonical latent positions of the balanced affinity model") {
  const Matrix b = m2(0.2, 0.15, 0.15, 0.2);
  const Matrix x = canonical_latent_positions(b);
  CHECK((x - sqrt2x2(b)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(x(0, 0) == doctest::Approx(0.4076).epsilon(1e-4));
  CHECK(x(0, 1) == doctest::Approx(0.1840).epsilon(1e-3));
  CHECK((x * x.transpose() - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("canonical latent positions: diagonal and core-periphery") {
  const Matrix x = canonical_latent_positions(0.25 * Matrix::Identity(2, 2));
  CHECK((x - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix cp = m2(0.2, 0.15, 0.15, 0.15);
  const Matrix y = canonical_latent_positions(cp);
  CHECK((y - sqrt2x2(cp)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(y(0, 0) - 0.3962) < 5e-5);
  CHECK(std::abs(y(0, 1) - 0.2074) < 5e-5);
  CHECK(std::abs(y(1, 1) - 0.3271) < 5e-5);
}

TEST_CASE("canonical latent positions reproduce B over random SPD inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 0.3);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + rep % 3;
    Matrix g(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) g(i, j) = u(rng);
    Matrix b = g * g.transpose() / k;
    const Matrix x = canonical_latent_positions(b);
    CHECK((x * x.transpose() - b).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("rank-deficient B yields the thin factor") {
  Vector v(3);
  v << 0.3, 0.5, 0.6;
  const Matrix b = v * v.transpose();
  const Matrix x = canonical_latent_positions(b);
  CHECK(x.cols() == 1);
  CHECK((x * x.transpose() - b).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(BlockModel::create(b, Vector::Constant(3, 1.0 / 3)).rank() == 1);
}

TEST_CASE("block model validation") {
  CHECK_THROWS_AS(BlockModel::create(m2(0.2, 0.1, 0.15, 0.2), half()), Error);
  CHECK_THROWS_AS(BlockModel::create(m2(0.2, 0.3, 0.3, 0.2), half()), Error);  // indefinite
  CHECK_THROWS_AS(BlockModel::create(m2(1.0, 0.1, 0.1, 0.5), half()), Error);
  Vector bad(2);
  bad << 0.6, 0.5;
  CHECK_THROWS_AS(BlockModel::create(m2(0.2, 0.1, 0.1, 0.2), bad), Error);
  const auto ok = BlockModel::create(m2(0.2, 0.15, 0.15, 0.2), half());
  CHECK(ok.rank() == 2);
  CHECK(ok.blocks() == 2);
  try {
    BlockModel::create(m2(0.2, 0.3, 0.3, 0.2), half());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotPsd);
  }
}

TEST_CASE("latent config validation") {
  LatentConfig ok{m2(0.4, 0.2, 0.2, 0.4), half()};
  CHECK_NOTHROW(ok.validate());
  LatentConfig neg{m2(0.4, -0.2, -0.3, 0.4), half()};
  CHECK_THROWS_AS(neg.validate(), Error);
  LatentConfig big{m2(0.9, 0.6, 0.6, 0.9), half()};
  CHECK_THROWS_AS(big.validate(), Error);
}

TEST_CASE("sampled graphs are symmetric with empty diagonal") {
  const auto model = BlockModel::create(m2(0.5, 0.4, 0.4, 0.5), half());
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    const Graph g = sample_sbm(model, 40, rng);
    CHECK(g.adjacency == g.adjacency.transpose());
    CHECK(g.adjacency.diagonal().cwiseAbs().sum() == 0.0);
    CHECK(((g.adjacency.array() == 0.0) || (g.adjacency.array() == 1.0)).all());
    REQUIRE(g.labels);
    CHECK(g.labels->size() == 40u);
  }
}

TEST_CASE("constant-probability edge density within three standard errors") {
  const double p = 0.3;
  const auto model = BlockModel::create(Matrix::Constant(2, 2, p), half());
  const int n = 200, reps = 100;
  double edges = 0, pairs = 0;
  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_seed(5, static_cast<std::uint64_t>(r)));
    const Graph g = sample_sbm(model, n, rng);
    edges += g.adjacency.sum() / 2;
    pairs += n * (n - 1) / 2.0;
  }
  const double se = std::sqrt(p * (1 - p) / pairs);
  CHECK(std::abs(edges / pairs - p) < 3 * se);
}

TEST_CASE("block-conditional edge frequencies converge to B") {
  const Matrix b = m2(0.2, 0.15, 0.15, 0.2);
  const auto model = BlockModel::create(b, half());
  const Labels fixed = balanced_labels(half(), 300);
  Matrix edges = Matrix::Zero(2, 2), pairs = Matrix::Zero(2, 2);
  for (int r = 0; r < 30; ++r) {
    Rng rng(derive_seed(8, static_cast<std::uint64_t>(r)));
    const Graph g = sample_sbm(model, 300, rng, std::span<const int>(fixed));
    for (int i = 0; i < 300; ++i)
      for (int j = i + 1; j < 300; ++j) {
        const int a = std::min(fixed[i], fixed[j]), c = std::max(fixed[i], fixed[j]);
        edges(a, c) += g.adjacency(i, j);
        pairs(a, c) += 1;
      }
  }
  for (int a = 0; a < 2; ++a)
    for (int c = a; c < 2; ++c) {
      const double f = edges(a, c) / pairs(a, c);
      CHECK(std::abs(f - b(a, c)) < 3 * std::sqrt(b(a, c) * (1 - b(a, c)) / pairs(a, c)));
    }
}

TEST_CASE("two-vertex graph edge frequency") {
  const auto model = BlockModel::create(m2(0.995, 0.99, 0.99, 0.995), half());
  const std::vector<int> fixed = {0, 1};
  int present = 0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_seed(3, static_cast<std::uint64_t>(r)));
    present += sample_sbm(model, 2, rng, std::span<const int>(fixed)).adjacency(0, 1) > 0;
  }
  CHECK(std::abs(present / double(reps) - 0.99) < 3 * std::sqrt(0.99 * 0.01 / reps));
}

TEST_CASE("sampling is deterministic given the seed") {
  const auto model = BlockModel::create(m2(0.5, 0.4, 0.4, 0.5), half());
  Rng a(42), b(42), c(43);
  const Graph ga = sample_sbm(model, 60, a), gb = sample_sbm(model, 60, b),
              gc = sample_sbm(model, 60, c);
  CHECK(ga.adjacency == gb.adjacency);
  CHECK(*ga.labels == *gb.labels);
  CHECK(ga.adjacency != gc.adjacency);
}

TEST_CASE("fixed labels are honored and out-of-range labels rejected") {
  const auto model = BlockModel::create(m2(0.5, 0.4, 0.4, 0.5), half());
  const std::vector<int> fixed = {1, 0, 1, 1, 0};
  Rng rng(1);
  CHECK(*sample_sbm(model, 5, rng, std::span<const int>(fixed)).labels == fixed);
  const std::vector<int> bad = {0, 2, 1, 1, 0};
  CHECK_THROWS_AS(sample_sbm(model, 5, rng, std::span<const int>(bad)), Error);
}

TEST_CASE("balanced labels use largest-remainder counts") {
  CHECK(label_counts(balanced_labels(half(), 301), 2) == std::vector<int>{151, 150});
  Vector pi(4);
  pi << 0.28, 0.22, 0.28, 0.22;
  const auto counts = label_counts(balanced_labels(pi, 501), 4);
  CHECK(counts == std::vector<int>{141, 110, 140, 110});
  const Labels l = balanced_labels(half(), 6);
  CHECK(l == Labels{0, 0, 0, 1, 1, 1});
}

TEST_CASE("categorical labels follow pi") {
  Vector pi(3);
  pi << 0.2, 0.3, 0.5;
  Rng rng(9);
  const auto counts = label_counts(sample_labels(pi, 20000, rng), 3);
  for (int k = 0; k < 3; ++k) {
    const double se = std::sqrt(pi(k) * (1 - pi(k)) / 20000);
    CHECK(std::abs(counts[static_cast<std::size_t>(k)] / 20000.0 - pi(k)) < 4 * se);
  }
}

TEST_CASE("expand latent positions") {
  Matrix x(2, 1);
  x << 0.3, 0.7;
  const std::vector<int> tau = {0, 1, 0};
  Matrix want(3, 1);
  want << 0.3, 0.7, 0.3;
  CHECK(expand_latent_positions(x, tau) == want);

  const Matrix x2 = m2(0.4076, 0.1840, 0.1840, 0.4076);
  const std::vector<int> t2 = {0, 0, 1};
  const Matrix e = expand_latent_positions(x2, t2);
  CHECK(e.row(0) == x2.row(0));
  CHECK(e.row(1) == x2.row(0));
  CHECK(e.row(2) == x2.row(1));

  const std::vector<int> same(5, 1);
  const Matrix all = expand_latent_positions(x2, same);
  for (int i = 0; i < 5; ++i) CHECK(all.row(i) == x2.row(1));

  const std::vector<int> bad = {0, 2};
  try {
    expand_latent_positions(x2, bad);
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kLabelOutOfRange);
  }
}

TEST_CASE("expanded canonical positions reproduce the edge-probability matrix") {
  const Matrix b = m2(0.5, 0.4, 0.4, 0.5);
  const Labels tau = balanced_labels(half(), 10);
  const Matrix xx = expand_latent_positions(canonical_latent_positions(b), tau);
  const Matrix p = xx * xx.transpose();
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) CHECK(std::abs(p(i, j) - b(tau[i], tau[j])) < 1e-10);
}

TEST_CASE("edge list export is upper-triangle and 1-based") {
  Graph g;
  g.adjacency = Matrix::Zero(3, 3);
  g.adjacency(0, 2) = g.adjacency(2, 0) = 1;
  g.adjacency(1, 2) = g.adjacency(2, 1) = 1;
  std::ostringstream out;
  write_edge_list(out, g);
  CHECK(out.str() == "1 3\n2 3\n");
}
