#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sbmes/mixture.hpp"

namespace sbmes {

/// Hubert-Arabie adjusted Rand index. Labels may be arbitrary integers.
/// Throws for n < 2 or unequal lengths. Two single-cluster partitions score 1.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

enum class ParameterFlavor { kAse, kLse };

/// Squared Euclidean distance between the stacked vectors (pi; means; all
/// covariance entries). kAse stacks the latent positions `nu`, kLse the
/// E-step means. Components of `est` are first matched to `truth` by the
/// permutation minimizing total squared mean distance.
double parameter_squared_error(const MixtureState& est, const MixtureState& truth,
                               ParameterFlavor flavor);

/// Distribution-free interval for the median: order statistics (l, n+1-l)
/// with l the largest index such that P(Binomial(n, 1/2) < l) <= (1-level)/2.
/// Needs at least 6 values.
std::pair<double, double> median_ci(std::vector<double> values, double level = 0.95);

double median(std::vector<double> values);

struct PairedResult {
  int replication = 0;
  int n = 0;
  std::uint64_t seed = 0;
  int resamples = 0;
  std::map<std::string, double> ari_by_method;
  std::map<std::string, double> param_err_by_method;
  std::map<std::string, bool> converged_by_method;
  std::map<std::string, int> iterations_by_method;
  std::map<std::string, std::uint64_t> input_hash_by_method;
  std::map<std::string, std::string> failure_by_method;  // "none" when clean
};

struct DifferenceRow {
  int n = 0;
  double median = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int count = 0;
  std::string method_a;
  std::string method_b;
};

/// Per sample size: median and order-statistic CI of ARI_a - ARI_b, the
/// difference taken per replication. Rows come in increasing n; sizes with
/// fewer than 6 paired replications report NaN bounds.
std::vector<DifferenceRow> paired_difference_table(const std::vector<PairedResult>& results,
                                                   const std::string& method_a,
                                                   const std::string& method_b);

/// CSV with header "n,median,ci_lo,ci_hi,method_a,method_b".
void write_difference_csv(std::ostream& out, const std::vector<DifferenceRow>& rows);

/// Shortest round-trip decimal form used by every CSV writer ("%.17g").
std::string format_real(double v);

}  // namespace sbmes
