#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sbmes/config.hpp"
#include "sbmes/evaluation.hpp"
#include "sbmes/graph_model.hpp"
#include "sbmes/mixture.hpp"

namespace sbmes {

inline constexpr const char* kVersion = "0.1.0";

/// One replication's data, shared by every method.
struct ReplicationData {
  Matrix ase;          // aligned ASE points (or the simulated mixture sample)
  Matrix lse;          // degree-scaled ASE
  Labels truth;
  Vector true_counts;  // realized block sizes
  std::uint64_t seed = 0;
  int resamples = 0;
};

/// Draws the data for replication `rep` at sample size `n`. Embedding
/// failures (nonpositive spectrum, isolated vertex, nonpositive degree)
/// are resampled from the next derived seed, up to 100 attempts.
ReplicationData simulate_replication(const ExperimentConfig& config, int n, int rep);

/// Truth at the sample: curved ASE state, curved LSE state with the realized
/// block sizes, and the LSE initial state (block sizes n * pi).
struct TruthStates {
  MixtureState ase;
  MixtureState lse;
  MixtureState lse_init;
};
TruthStates truth_states(const ExperimentConfig& config, const ReplicationData& data);

/// Runs every configured method on one replication, initialized at truth.
PairedResult run_replication(const ExperimentConfig& config, int n, int rep);

/// All (n, replication) pairs over `jobs` worker threads; the result is
/// ordered by (n, replication) regardless of scheduling.
std::vector<PairedResult> run_experiment(const ExperimentConfig& config, int jobs = 1);

/// Writes the paired-difference tables, the per-replication record and the
/// manifest into `dir`; returns the table file names. Throws
/// kNothingToCompare when no method pair is available.
std::vector<std::string> emit_tables(const std::vector<PairedResult>& results,
                                     const std::vector<std::string>& methods,
                                     const std::string& dir);

void write_manifest(const std::string& dir, const ExperimentConfig& config,
                    const std::vector<PairedResult>& results);

/// Tab-separated per-(replication, method) record, read back by the
/// `table` subcommand.
void write_replications(std::ostream& out, const std::vector<PairedResult>& results);
std::vector<PairedResult> read_replications(std::istream& in);

inline constexpr const char* kReplicationsFile = "replications.tsv";
inline constexpr const char* kManifestFile = "manifest.txt";

/// Number of (replication, method) entries that failed or did not converge.
int count_flagged(const std::vector<PairedResult>& results);

std::uint64_t hash_matrix(const Matrix& m);

}  // namespace sbmes
