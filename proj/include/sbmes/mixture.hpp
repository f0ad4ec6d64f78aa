#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sbmes/error.hpp"
#include "sbmes/graph_model.hpp"
#include "sbmes/limit_covariance.hpp"
#include "sbmes/linalg.hpp"

namespace sbmes {

/// Current iterate of a mixture fit.
///
/// `means` and `sigmas` are what the E-step evaluates densities with; for the
/// ASE engines `means == nu`, for the LSE curved engine `means` are the scaled
/// latent positions nu_k / sqrt(sum_l n_l nu_l^T nu_k) and `sigmas` already
/// carry the 1/n (ASE) or 1/n^2 (LSE) factor. For full-GMM EM `nu` mirrors the
/// free component means and `sigmas` are free parameters.
struct MixtureState {
  Vector pi;
  Matrix nu;
  Matrix means;
  std::vector<Matrix> sigmas;
  Vector counts;  // n_k; populated for the LSE curved engine only

  int blocks() const { return static_cast<int>(pi.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
};

struct Responsibilities {
  Matrix z;               // n x K, rows sum to one
  int underflow_rows = 0; // rows with no finite component, set uniform
};

/// Per-iteration side information collected by the engines.
struct IterationDiagnostics {
  double condition = 0.0;  // largest condition number of Delta / Delta-tilde inverted
  int clamped_terms = 0;
  int floored_eigenvalues = 0;
  int ridge_events = 0;
  int underflow_rows = 0;
  double asymmetry = 0.0;
};

struct RunReport {
  int iterations = 0;
  bool converged = false;
  double final_step_norm = 0.0;
  std::vector<double> trace;       // step norm per iteration
  std::vector<double> conditions;  // Delta / Delta-tilde condition number per iteration
  ErrorCode failure = ErrorCode::kNone;
  std::string failure_message;
  int clamped_terms = 0;
  int floored_eigenvalues = 0;
  int ridge_events = 0;
  int underflow_rows = 0;
  double max_asymmetry = 0.0;
};

struct RunResult {
  MixtureState state;
  Responsibilities responsibilities;
  RunReport report;
};

enum class Engine { kFullGmmEm, kEsAse, kEsLse };
enum class ModelKind { kFullGmm, kCurvedGmm };

inline constexpr double kDefaultTolAse = 1e-5;
inline constexpr double kDefaultTolLse = 1e-6;
inline constexpr int kDefaultMaxIter = 10000;

struct RunOptions {
  double tol = kDefaultTolAse;
  int max_iter = kDefaultMaxIter;
  /// When set, the curved engines hold Delta, mu and Delta-tilde at these
  /// values instead of recomputing them from each iterate.
  std::optional<EmpiricalMoments> plug_in;
  LseForm lse_form = LseForm::kHalfBoth;
};

/// Log of the multivariate normal density, via a Cholesky factor of `cov`.
/// Throws kCovarianceNotPd when the factorization fails.
double gaussian_log_density(const Vector& point, const Vector& mean, const Matrix& cov);

/// Posterior memberships under `state.means`, `state.sigmas`, `state.pi`,
/// normalized by log-sum-exp.
Responsibilities e_step(const Matrix& points, const MixtureState& state);

/// Component covariances as a function of all means and proportions (tied
/// form; a separable model simply ignores the other components).
using VarianceFunctions =
    std::function<std::vector<Matrix>(const Matrix& means, const Vector& pi)>;

/// Curved-GMM S-step: weighted proportions and means, covariances from the
/// variance functions at the new means. Throws kComponentCollapse on a
/// component with total responsibility below 1e-10.
MixtureState s_step_cgmm(const Matrix& points, const Responsibilities& resp,
                         const VarianceFunctions& variance,
                         IterationDiagnostics* diag = nullptr);

/// Full-GMM M-step with unconstrained covariances. A covariance that fails
/// to factor gets a 1e-10 * trace/d ridge (1e-10 when the trace is zero).
MixtureState m_step_full_gmm(const Matrix& points, const Responsibilities& resp,
                             IterationDiagnostics* diag = nullptr);

/// State whose densities are N(nu_k, Sigma(nu_k | x, pi) / n).
MixtureState ase_curved_state(const LatentConfig& config, int n,
                              const std::optional<EmpiricalMoments>& plug_in = std::nullopt,
                              IterationDiagnostics* diag = nullptr);

/// State whose densities are N(nu_k / sqrt(sum_l n_l nu_l^T nu_k),
/// Sigma-tilde(nu_k | x, pi) / n^2), with the covariance symmetrized.
MixtureState lse_curved_state(const LatentConfig& config, const Vector& counts, int n,
                              const std::optional<EmpiricalMoments>& plug_in = std::nullopt,
                              IterationDiagnostics* diag = nullptr,
                              LseForm form = LseForm::kHalfBoth);

std::pair<Responsibilities, MixtureState> em_iteration(const Matrix& points,
                                                       const MixtureState& state,
                                                       IterationDiagnostics* diag = nullptr);

std::pair<Responsibilities, MixtureState> es_ase_iteration(
    const Matrix& ase_points, const MixtureState& state,
    const std::optional<EmpiricalMoments>& plug_in = std::nullopt,
    IterationDiagnostics* diag = nullptr);

/// E-step on the LSE points, S-step on the ASE points, n_k = n * pi_k.
std::pair<Responsibilities, MixtureState> es_lse_iteration(
    const Matrix& lse_points, const Matrix& ase_points, const MixtureState& state,
    const std::optional<EmpiricalMoments>& plug_in = std::nullopt,
    IterationDiagnostics* diag = nullptr, LseForm form = LseForm::kHalfBoth);

/// (pi_1..pi_{K-1}, entries of means row by row): the vector whose successive
/// Euclidean distance is the convergence criterion.
Vector parameter_vector(const MixtureState& state);

using Iteration = std::function<std::pair<Responsibilities, MixtureState>(
    const MixtureState&, IterationDiagnostics&)>;

/// Shared driver: repeats `step` until the parameter-vector step norm drops
/// below `tol` or `max_iter` iterations ran. An engine error stops the run
/// with converged = false; the last good state is returned.
RunResult run_iterations(const Iteration& step, const MixtureState& init, double tol,
                         int max_iter, const Matrix& points);

/// `points` are the embedding the E-step sees; `ase_points` is required for
/// kEsLse (and for plug-in moments) and ignored otherwise.
RunResult run_to_convergence(Engine engine, const Matrix& points, const Matrix* ase_points,
                             const MixtureState& init, const RunOptions& options);

/// Generic curved-GMM ES fit with caller-provided variance functions.
RunResult run_curved(const Matrix& points, const VarianceFunctions& variance,
                     const MixtureState& init, const RunOptions& options);

/// Row-wise argmax; ties resolve to the lowest component index.
Labels cluster_assign(const Responsibilities& resp);

/// cgmm: (d+1)K - 1. full_gmm: additionally K (d + d(d-1)/2).
int parameter_count(ModelKind kind, int blocks, int dim);

/// Comma-separated text: the pi line, K rows of nu, then the K covariance
/// blocks stacked (d rows each).
void write_state(std::ostream& out, const MixtureState& state);

}  // namespace sbmes
