#include "sbmes/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

namespace sbmes {
namespace {

double choose2(double v) { return v * (v - 1.0) / 2.0; }

std::vector<int> compact(std::span<const int> labels, int& distinct) {
  std::map<int, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int v : labels) out.push_back(ids.emplace(v, static_cast<int>(ids.size())).first->second);
  distinct = static_cast<int>(ids.size());
  return out;
}

}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "label vectors differ in length");
  if (a.size() < 2) throw Error(ErrorCode::kInvalidArgument, "ARI needs at least two items");
  int ra = 0, rb = 0;
  const std::vector<int> ca = compact(a, ra);
  const std::vector<int> cb = compact(b, rb);
  std::vector<double> table(static_cast<std::size_t>(ra) * rb, 0.0);
  std::vector<double> rows(static_cast<std::size_t>(ra), 0.0), cols(static_cast<std::size_t>(rb), 0.0);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    table[static_cast<std::size_t>(ca[i]) * rb + cb[i]] += 1.0;
    rows[static_cast<std::size_t>(ca[i])] += 1.0;
    cols[static_cast<std::size_t>(cb[i])] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (double v : table) index += choose2(v);
  for (double v : rows) sum_a += choose2(v);
  for (double v : cols) sum_b += choose2(v);
  const double expected = sum_a * sum_b / choose2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial in the same way
  return (index - expected) / (max_index - expected);
}

double parameter_squared_error(const MixtureState& est, const MixtureState& truth,
                               ParameterFlavor flavor) {
  const int blocks = truth.blocks();
  const Matrix& est_means = flavor == ParameterFlavor::kAse ? est.nu : est.means;
  const Matrix& true_means = flavor == ParameterFlavor::kAse ? truth.nu : truth.means;
  if (est.blocks() != blocks || est_means.rows() != blocks || true_means.rows() != blocks ||
      est_means.cols() != true_means.cols() || est.sigmas.size() != truth.sigmas.size()) {
    throw Error(ErrorCode::kInvalidArgument, "parameter dimensions disagree");
  }
  std::vector<int> perm(static_cast<std::size_t>(blocks));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int k = 0; k < blocks; ++k) {
      cost += (est_means.row(perm[static_cast<std::size_t>(k)]) - true_means.row(k)).squaredNorm();
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  double err = 0.0;
  for (int k = 0; k < blocks; ++k) {
    const int e = best[static_cast<std::size_t>(k)];
    err += std::pow(est.pi(e) - truth.pi(k), 2);
    err += (est_means.row(e) - true_means.row(k)).squaredNorm();
    err += (est.sigmas[static_cast<std::size_t>(e)] - truth.sigmas[static_cast<std::size_t>(k)])
               .squaredNorm();
  }
  return err;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

std::pair<double, double> median_ci(std::vector<double> values, double level) {
  const std::size_t n = values.size();
  if (n < 6) throw Error(ErrorCode::kInvalidArgument, "median CI needs at least 6 values");
  const double tail = (1.0 - level) / 2.0;
  // cdf[j] = P(B <= j) for B ~ Binomial(n, 1/2), accumulated in log space.
  double cdf = 0.0;
  std::size_t l = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) -
                           static_cast<double>(n) * std::log(2.0);
    cdf += std::exp(log_pmf);
    if (cdf > tail * (1.0 + 1e-12)) break;
    l = j + 1;  // P(B <= l - 1) <= tail
  }
  if (l == 0) throw Error(ErrorCode::kInvalidArgument, "too few values for the requested level");
  std::sort(values.begin(), values.end());
  return {values[l - 1], values[n - l]};
}

std::vector<DifferenceRow> paired_difference_table(const std::vector<PairedResult>& results,
                                                   const std::string& method_a,
                                                   const std::string& method_b) {
  std::map<int, std::vector<double>> by_n;
  for (const auto& r : results) {
    const auto ia = r.ari_by_method.find(method_a);
    const auto ib = r.ari_by_method.find(method_b);
    if (ia == r.ari_by_method.end() || ib == r.ari_by_method.end()) continue;
    by_n[r.n].push_back(ia->second - ib->second);
  }
  std::vector<DifferenceRow> rows;
  for (auto& [n, deltas] : by_n) {
    DifferenceRow row;
    row.n = n;
    row.count = static_cast<int>(deltas.size());
    row.method_a = method_a;
    row.method_b = method_b;
    row.median = median(deltas);
    if (deltas.size() >= 6) {
      std::tie(row.ci_lo, row.ci_hi) = median_ci(deltas);
    } else {
      row.ci_lo = row.ci_hi = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_difference_csv(std::ostream& out, const std::vector<DifferenceRow>& rows) {
  out << "n,median,ci_lo,ci_hi,method_a,method_b\n";
  for (const auto& r : rows) {
    out << r.n << ',' << format_real(r.median) << ',' << format_real(r.ci_lo) << ','
        << format_real(r.ci_hi) << ',' << r.method_a << ',' << r.method_b << '\n';
  }
}

}  // namespace sbmes
