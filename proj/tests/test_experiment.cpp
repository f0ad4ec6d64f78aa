#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sbmes/config.hpp"
#include "sbmes/error.hpp"
#include "sbmes/experiment.hpp"

using namespace sbmes;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sbmes-test-" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ErrorCode parse_code(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("preset registry") {
  std::vector<std::string> names;
  for (const auto& p : builtin_presets()) names.push_back(p.name);
  CHECK(names == std::vector<std::string>{"m1", "m2", "m3", "m4", "affinity1", "affinity2",
                                          "coreperiph3", "coreperiph4", "connectome"});
  const auto& m2 = find_preset("m2");
  REQUIRE(m2.x);
  CHECK((*m2.x)(0, 0) == 0.4076);
  CHECK((*m2.x)(0, 1) == 0.1840);
  const auto& con = find_preset("connectome");
  REQUIRE(con.b);
  CHECK((*con.b)(1, 1) == 0.115);
  CHECK(con.pi.sum() == doctest::Approx(1.0));
  const auto& a1 = find_preset("affinity1");
  REQUIRE(a1.b);
  CHECK((*a1.b)(0, 0) == 0.5);
  CHECK((*a1.b)(0, 1) == 0.4);
  CHECK(a1.labels == LabelMode::kFixed);
  CHECK_THROWS_AS(find_preset("m9"), Error);
}

TEST_CASE("config parsing") {
  const auto c = parse(
      "[experiment]\nmodel = affinity2\nn_grid = 100:300:100\nreplications = 7\n"
      "methods = em_ase, es_ase\nseed = 99\nlse_covariance = half_left\n");
  CHECK(c.family == Family::kSbm);
  CHECK(c.n_grid == std::vector<int>{100, 200, 300});
  CHECK(c.replications == 7);
  CHECK(c.methods == std::vector<std::string>{"em_ase", "es_ase"});
  CHECK(c.seed == 99u);
  CHECK(c.lse_form == LseForm::kHalfLeft);
  CHECK(c.resolved_labels() == LabelMode::kFixed);
  CHECK((c.x * c.x.transpose() - c.b).cwiseAbs().maxCoeff() < 1e-10);

  const auto d = parse("[experiment]\nmodel = m1\nn_grid = 50 100\n");
  CHECK(d.family == Family::kMixtureOnly);
  CHECK(d.methods == known_methods());
  CHECK(d.tol_ase == 1e-5);
  CHECK(d.tol_lse == 1e-6);
  CHECK(d.max_iter == 10000);
  CHECK(d.lse_form == LseForm::kHalfBoth);

  const auto e = parse(
      "[experiment]\nmodel = inline\nfamily = sbm\nn_grid = 60\n"
      "[model]\nB = 0.3 0.1 | 0.1 0.3\npi = 0.5 0.5\n");
  CHECK(e.b(0, 1) == 0.1);
  CHECK(e.resolved_labels() == LabelMode::kCategorical);
}

TEST_CASE("config errors") {
  CHECK(parse_code("[experiment]\nn_grid = 10\n") == ErrorCode::kConfig);
  CHECK(parse_code("[experiment]\nmodel = nope\nn_grid = 10\n") == ErrorCode::kConfig);
  CHECK(parse_code("[experiment]\nmodel = m1\nn_grid = 10\nmethods = em_xyz\n") == ErrorCode::kConfig);
  CHECK(parse_code("[experiment]\nmodel = m1\nn_grid = 200 100\n") == ErrorCode::kConfig);
  CHECK(parse_code("[experiment]\nmodel = m1\nn_grid = 10\nreplications = 0\n") == ErrorCode::kConfig);
  CHECK(parse_code("[experiment]\nmodel = m1\nn_grid = 10\nlse_covariance = full\n") == ErrorCode::kConfig);
  CHECK(parse_code("[experiment]\nmodel = m1\nn_grid = 10\nmoments = both\n") == ErrorCode::kConfig);
  CHECK(parse_code("[experiment]\nmodel = inline\nfamily = sbm\nn_grid = 10\n"
                   "[model]\nB = 0.3 0.4 | 0.4 0.3\npi = 0.5 0.5\n") == ErrorCode::kConfig);
  CHECK(parse_code("[model]\nx = 1\n") == ErrorCode::kConfig);
}

TEST_CASE("replication data is deterministic and shared by methods") {
  const auto c = preset_config("affinity1", {200}, 3, known_methods(), 17);
  const auto a = simulate_replication(c, 200, 1), b = simulate_replication(c, 200, 1);
  CHECK(a.ase == b.ase);
  CHECK(a.lse == b.lse);
  CHECK(a.truth == b.truth);
  CHECK(simulate_replication(c, 200, 2).ase != a.ase);

  const auto r = run_replication(c, 200, 1);
  CHECK(r.input_hash_by_method.at("em_ase") == r.input_hash_by_method.at("es_ase"));
  CHECK(r.input_hash_by_method.at("em_ase") == r.input_hash_by_method.at("kmeans_ase"));
  CHECK(r.input_hash_by_method.at("em_lse") == r.input_hash_by_method.at("es_lse"));
  CHECK(r.input_hash_by_method.at("em_lse") == r.input_hash_by_method.at("kmeans_lse"));
  CHECK(r.input_hash_by_method.at("em_ase") != r.input_hash_by_method.at("em_lse"));
  CHECK(r.input_hash_by_method.at("em_ase") == hash_matrix(a.ase));
  CHECK(r.ari_by_method.size() == 6u);
  CHECK(r.param_err_by_method.count("kmeans_ase") == 0u);
  for (const auto& [m, ari] : r.ari_by_method) {
    CHECK(ari <= 1.0);
    CHECK(r.failure_by_method.at(m) == "none");
  }
}

TEST_CASE("mixture-only replications follow the truth") {
  const auto c = preset_config("m2", {400}, 2, {"em_ase", "es_ase"}, 5);
  const auto d = simulate_replication(c, 400, 0);
  CHECK(d.ase.rows() == 400);
  CHECK(d.true_counts.sum() == 400.0);
  const auto t = truth_states(c, d);
  CHECK((t.ase.nu - c.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.lse_init.pi - c.pi).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single replication with k-means only") {
  const auto c = preset_config("m1", {100}, 1, {"kmeans_ase"}, 3);
  const auto rs = run_experiment(c);
  REQUIRE(rs.size() == 1u);
  CHECK(rs[0].ari_by_method.size() == 1u);
  CHECK_THROWS_AS(emit_tables(rs, c.methods, scratch("km").string()), Error);
  try {
    emit_tables(rs, c.methods, scratch("km").string());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNothingToCompare);
  }
}

TEST_CASE("full run writes four tables and is reproducible") {
  const auto c = preset_config("affinity1", {100, 150}, 6, known_methods(), 21);
  const auto dir1 = scratch("run1"), dir2 = scratch("run2");
  const auto r1 = run_experiment(c, 1);
  const auto r2 = run_experiment(c, 3);
  REQUIRE(r1.size() == 12u);
  CHECK(r1.front().n == 100);
  CHECK(r1.back().n == 150);
  const auto files = emit_tables(r1, c.methods, dir1.string());
  emit_tables(r2, c.methods, dir2.string());
  CHECK(files == std::vector<std::string>{"delta_em_es_ase.csv", "delta_em_es_lse.csv",
                                          "delta_kmeans_em.csv", "delta_kmeans_es.csv"});
  for (const auto& f : files) {
    CHECK(slurp(dir1 / f) == slurp(dir2 / f));
    CHECK(slurp(dir1 / f).rfind("n,median,ci_lo,ci_hi,method_a,method_b\n", 0) == 0);
  }
  CHECK(slurp(dir1 / kReplicationsFile) == slurp(dir2 / kReplicationsFile));

  write_manifest(dir1.string(), c, r1);
  const std::string manifest = slurp(dir1 / kManifestFile);
  CHECK(manifest.find("seed=21\n") != std::string::npos);
  CHECK(manifest.find("replication_records=12\n") != std::string::npos);
  CHECK(manifest.find("config_hash=") != std::string::npos);

  std::istringstream rec(slurp(dir1 / kReplicationsFile));
  const auto back = read_replications(rec);
  REQUIRE(back.size() == r1.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].n == r1[i].n);
    CHECK(back[i].replication == r1[i].replication);
    CHECK(back[i].seed == r1[i].seed);
    CHECK(back[i].ari_by_method == r1[i].ari_by_method);
    CHECK(back[i].input_hash_by_method == r1[i].input_hash_by_method);
    CHECK(back[i].iterations_by_method == r1[i].iterations_by_method);
  }
  const auto again = scratch("run3");
  emit_tables(back, c.methods, again.string());
  for (const auto& f : files) CHECK(slurp(again / f) == slurp(dir1 / f));
}

TEST_CASE("replication record rejects malformed input") {
  std::istringstream bad("replication\tn\n0\tten\n");
  CHECK_THROWS_AS(read_replications(bad), Error);
}

#ifdef SBMES_BENCH_PATH
TEST_CASE("command-line smoke test") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "[experiment]\nmodel = affinity1\nn_grid = 100\nreplications = 6\nseed = 4\n"
        << "output = " << (dir / "out").string() << "\n";
  }
  const std::string bench = SBMES_BENCH_PATH;
  CHECK(std::system((bench + " run -q " + (dir / "run.ini").string()).c_str()) == 0);
  CHECK(fs::exists(dir / "out" / "delta_em_es_ase.csv"));
  CHECK(fs::exists(dir / "out" / kManifestFile));
  CHECK(std::system((bench + " table " + (dir / "out").string() + " > " +
                     (dir / "table.txt").string()).c_str()) == 0);
  CHECK(std::system((bench + " presets > " + (dir / "presets.txt").string()).c_str()) == 0);
  CHECK(slurp(dir / "presets.txt").find("connectome") != std::string::npos);
  CHECK(std::system((bench + " run " + (dir / "missing.ini").string() + " 2>/dev/null").c_str()) != 0);
}
#endif
