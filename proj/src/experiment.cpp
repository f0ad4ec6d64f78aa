#include "sbmes/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "sbmes/embedding.hpp"
#include "sbmes/error.hpp"
#include "sbmes/kmeans.hpp"
#include "sbmes/rng.hpp"

namespace sbmes {
namespace {

constexpr int kMaxAttempts = 100;

bool resamplable(ErrorCode code) {
  return code == ErrorCode::kInsufficientSpectrum || code == ErrorCode::kIsolatedVertex ||
         code == ErrorCode::kInvalidScaling;
}

Vector realized_counts(const Labels& labels, int blocks) {
  const std::vector<int> counts = label_counts(labels, blocks);
  Vector out(blocks);
  for (int k = 0; k < blocks; ++k) out(k) = counts[static_cast<std::size_t>(k)];
  return out;
}

// Draws X_i ~ sum_k pi_k N(nu_k, Sigma(nu_k | x, pi) / n) and forms the LSE
// through A = X X^T, whose row sums are X (X^T 1).
void draw_mixture(const ExperimentConfig& c, int n, Rng& rng, ReplicationData& data) {
  const LatentConfig config{c.x, c.pi};
  data.truth = sample_labels(c.pi, n, rng);
  std::vector<Eigen::LLT<Matrix>> factors;
  for (int k = 0; k < c.blocks(); ++k) {
    factors.emplace_back(psd_floor(ase_covariance(k, config) / static_cast<double>(n)));
  }
  const int d = c.dim();
  data.ase.resize(n, d);
  Vector z(d);
  for (int i = 0; i < n; ++i) {
    const int k = data.truth[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) z(j) = standard_normal(rng);
    data.ase.row(i) = c.x.row(k) + (factors[static_cast<std::size_t>(k)].matrixL() * z).transpose();
  }
  Embedding ase_embedding;
  ase_embedding.points = data.ase;
  const Vector degrees = data.ase * data.ase.colwise().sum().transpose();
  data.lse = ase_to_lse(ase_embedding, degrees).points;
}

void draw_sbm(const ExperimentConfig& c, int n, Rng& rng, ReplicationData& data) {
  const BlockModel model = BlockModel::create(c.b, c.pi);
  Graph graph;
  if (c.resolved_labels() == LabelMode::kFixed) {
    const Labels fixed = balanced_labels(c.pi, n);
    graph = sample_sbm(model, n, rng, std::span<const int>(fixed));
  } else {
    graph = sample_sbm(model, n, rng);
  }
  data.truth = *graph.labels;
  Embedding embedding = ase(graph.adjacency, c.dim());
  const Matrix target = expand_latent_positions(c.x, data.truth);
  embedding.points = embedding.points * procrustes_align(embedding.points, target);
  data.ase = embedding.points;
  for (Eigen::Index i = 0; i < embedding.degrees.size(); ++i) {
    if (!(embedding.degrees(i) > 0.0)) {
      throw Error(ErrorCode::kIsolatedVertex, "isolated vertex in sampled graph");
    }
  }
  data.lse = ase_to_lse(embedding, embedding.degrees).points;
}

struct MethodSpec {
  std::string engine;     // kmeans | em | es
  bool lse = false;
};

MethodSpec split_method(const std::string& name) {
  const auto cut = name.rfind('_');
  return {name.substr(0, cut), name.substr(cut + 1) == "lse"};
}

}  // namespace

std::uint64_t hash_matrix(const Matrix& m) {
  const Eigen::Index dims[2] = {m.rows(), m.cols()};
  const std::uint64_t h = fnv1a(dims, sizeof dims);
  return fnv1a(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), h);
}

ReplicationData simulate_replication(const ExperimentConfig& c, int n, int rep) {
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    ReplicationData data;
    data.seed = derive_seed(c.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep),
                            static_cast<std::uint64_t>(attempt));
    data.resamples = attempt;
    Rng rng(data.seed);
    try {
      if (c.family == Family::kMixtureOnly) {
        draw_mixture(c, n, rng, data);
      } else {
        draw_sbm(c, n, rng, data);
      }
    } catch (const Error& e) {
      if (resamplable(e.code())) continue;
      throw;
    }
    data.true_counts = realized_counts(data.truth, c.blocks());
    return data;
  }
  throw Error(ErrorCode::kInsufficientSpectrum,
              "embedding failed on " + std::to_string(kMaxAttempts) + " consecutive draws");
}

TruthStates truth_states(const ExperimentConfig& c, const ReplicationData& data) {
  const int n = static_cast<int>(data.ase.rows());
  const LatentConfig config{c.x, c.pi};
  TruthStates t;
  t.ase = ase_curved_state(config, n);
  t.lse = lse_curved_state(config, data.true_counts, n, std::nullopt, nullptr, c.lse_form);
  t.lse_init = lse_curved_state(config, static_cast<double>(n) * c.pi, n, std::nullopt, nullptr,
                                c.lse_form);
  return t;
}

PairedResult run_replication(const ExperimentConfig& c, int n, int rep) {
  const ReplicationData data = simulate_replication(c, n, rep);
  const TruthStates truth = truth_states(c, data);
  PairedResult result;
  result.replication = rep;
  result.n = n;
  result.seed = data.seed;
  result.resamples = data.resamples;

  std::optional<EmpiricalMoments> plug_in;
  std::string plug_in_failure;
  if (c.empirical_moments) {
    try {
      plug_in = empirical_moments(data.ase);
    } catch (const Error& e) {
      plug_in_failure = std::string(to_string(e.code()));
    }
  }

  for (const std::string& method : c.methods) {
    const MethodSpec spec = split_method(method);
    const Matrix& points = spec.lse ? data.lse : data.ase;
    result.input_hash_by_method[method] = hash_matrix(points);
    if (spec.engine == "kmeans") {
      const Matrix& centers = spec.lse ? truth.lse_init.means : truth.ase.means;
      const KMeansResult km = kmeans(points, centers, c.max_iter);
      result.ari_by_method[method] = adjusted_rand_index(km.labels, data.truth);
      result.converged_by_method[method] = km.converged;
      result.iterations_by_method[method] = km.iterations;
      result.failure_by_method[method] = "none";
      continue;
    }
    RunOptions options;
    options.tol = spec.lse ? c.tol_lse : c.tol_ase;
    options.max_iter = c.max_iter;
    options.lse_form = c.lse_form;
    MixtureState init = spec.lse ? truth.lse_init : truth.ase;
    Engine engine = Engine::kFullGmmEm;
    if (spec.engine == "em") {
      init.nu = init.means;
      init.counts.resize(0);
    } else {
      engine = spec.lse ? Engine::kEsLse : Engine::kEsAse;
      options.plug_in = plug_in;
    }
    RunResult run;
    if (spec.engine == "es" && !plug_in_failure.empty()) {
      run.state = init;
      run.responsibilities = e_step(points, init);
      run.report.failure = ErrorCode::kInvalidScaling;
    } else {
      run = run_to_convergence(engine, points, &data.ase, init, options);
    }
    result.ari_by_method[method] =
        adjusted_rand_index(cluster_assign(run.responsibilities), data.truth);
    result.param_err_by_method[method] = parameter_squared_error(
        run.state, spec.lse ? truth.lse : truth.ase,
        spec.lse ? ParameterFlavor::kLse : ParameterFlavor::kAse);
    result.converged_by_method[method] = run.report.converged;
    result.iterations_by_method[method] = run.report.iterations;
    result.failure_by_method[method] = std::string(to_string(run.report.failure));
  }
  return result;
}

std::vector<PairedResult> run_experiment(const ExperimentConfig& c, int jobs) {
  validate(c);
  std::vector<std::pair<int, int>> tasks;
  for (int n : c.n_grid)
    for (int rep = 0; rep < c.replications; ++rep) tasks.emplace_back(n, rep);
  // Duplicate sizes in a nondecreasing grid would produce identical streams.
  tasks.erase(std::unique(tasks.begin(), tasks.end()), tasks.end());
  std::vector<PairedResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = run_replication(c, tasks[i].first, tasks[i].second);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, jobs);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<std::string> emit_tables(const std::vector<PairedResult>& results,
                                     const std::vector<std::string>& methods,
                                     const std::string& dir) {
  if (results.empty()) throw Error(ErrorCode::kInvalidArgument, "no results to tabulate");
  auto has = [&](const std::string& m) {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
  };
  struct Table {
    std::string file;
    std::vector<std::pair<std::string, std::string>> pairs;
  };
  std::vector<Table> tables;
  for (const char* emb : {"ase", "lse"}) {
    const std::string em = std::string("em_") + emb, es = std::string("es_") + emb;
    if (has(em) && has(es)) tables.push_back({std::string("delta_em_es_") + emb + ".csv", {{em, es}}});
  }
  for (const char* other : {"em", "es"}) {
    Table t{std::string("delta_kmeans_") + other + ".csv", {}};
    for (const char* emb : {"ase", "lse"}) {
      const std::string km = std::string("kmeans_") + emb, o = std::string(other) + "_" + emb;
      if (has(km) && has(o)) t.pairs.emplace_back(km, o);
    }
    if (!t.pairs.empty()) tables.push_back(std::move(t));
  }
  if (tables.empty()) throw Error(ErrorCode::kNothingToCompare, "nothing to compare");
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  for (const auto& t : tables) {
    std::vector<DifferenceRow> rows;
    for (const auto& [a, b] : t.pairs) {
      auto part = paired_difference_table(results, a, b);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    std::ofstream out(std::filesystem::path(dir) / t.file);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + t.file);
    write_difference_csv(out, rows);
    files.push_back(t.file);
  }
  std::ofstream rec(std::filesystem::path(dir) / kReplicationsFile);
  if (!rec) throw Error(ErrorCode::kIo, "cannot write replication record");
  write_replications(rec, results);
  return files;
}

void write_manifest(const std::string& dir, const ExperimentConfig& c,
                    const std::vector<PairedResult>& results) {
  std::filesystem::create_directories(dir);
  const std::string text = canonical_text(c);
  int resamples = 0;
  for (const auto& r : results) resamples += r.resamples;
  std::ofstream out(std::filesystem::path(dir) / kManifestFile);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest");
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a(text.data(), text.size())));
  out << "version=" << kVersion << '\n'
      << "seed=" << c.seed << '\n'
      << "config_hash=" << hash << '\n'
      << "replication_records=" << results.size() << '\n'
      << "resamples=" << resamples << '\n'
      << "flagged=" << count_flagged(results) << '\n'
      << "[config]\n"
      << text;
}

void write_replications(std::ostream& out, const std::vector<PairedResult>& results) {
  out << "replication\tn\tseed\tresamples\tmethod\tari\tparam_err\tconverged\titerations\tfailure"
         "\tinput_hash\n";
  for (const auto& r : results) {
    for (const auto& [method, ari] : r.ari_by_method) {
      const auto pe = r.param_err_by_method.find(method);
      out << r.replication << '\t' << r.n << '\t' << r.seed << '\t' << r.resamples << '\t' << method
          << '\t' << format_real(ari) << '\t'
          << (pe == r.param_err_by_method.end() ? std::string("NA") : format_real(pe->second)) << '\t'
          << (r.converged_by_method.at(method) ? 1 : 0) << '\t' << r.iterations_by_method.at(method)
          << '\t' << r.failure_by_method.at(method) << '\t' << r.input_hash_by_method.at(method)
          << '\n';
    }
  }
}

std::vector<PairedResult> read_replications(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, "empty replication record");
  std::map<std::pair<int, int>, PairedResult> by_key;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(row, cell, '\t')) f.push_back(cell);
    if (f.size() != 11) throw Error(ErrorCode::kIo, "malformed replication record line: " + line);
    const int rep = std::stoi(f[0]), n = std::stoi(f[1]);
    PairedResult& r = by_key[{n, rep}];
    r.replication = rep;
    r.n = n;
    r.seed = std::stoull(f[2]);
    r.resamples = std::stoi(f[3]);
    const std::string& method = f[4];
    r.ari_by_method[method] = std::stod(f[5]);
    if (f[6] != "NA") r.param_err_by_method[method] = std::stod(f[6]);
    r.converged_by_method[method] = f[7] == "1";
    r.iterations_by_method[method] = std::stoi(f[8]);
    r.failure_by_method[method] = f[9];
    r.input_hash_by_method[method] = std::stoull(f[10]);
  }
  std::vector<PairedResult> out;
  for (auto& [key, r] : by_key) out.push_back(std::move(r));
  return out;
}

int count_flagged(const std::vector<PairedResult>& results) {
  int flagged = 0;
  for (const auto& r : results) {
    for (const auto& [method, ok] : r.converged_by_method) {
      const auto f = r.failure_by_method.find(method);
      if (!ok || (f != r.failure_by_method.end() && f->second != "none")) ++flagged;
    }
  }
  return flagged;
}

}  // namespace sbmes
