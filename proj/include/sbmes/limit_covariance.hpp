#pragma once

#include <optional>
#include <vector>

#include "sbmes/graph_model.hpp"
#include "sbmes/linalg.hpp"

namespace sbmes {

// Limit parameters of the spectral embeddings for a K-point latent
// distribution sum_k pi_k delta(nu_k). Expectations are finite sums over the
// rows of LatentConfig::x.

struct CovarianceDiagnostics {
  int clamped_terms = 0;   // Bernoulli variances evaluated at a clamped Gram entry
  double condition = 0.0;  // condition number of the inverted second-moment matrix
  double asymmetry = 0.0;  // ||S - S^T||_F / ||S||_F of the raw LSE covariance
};

/// Plug-in moments computed from an ASE point cloud.
struct EmpiricalMoments {
  Matrix delta;        // sum_i X_i X_i^T / n
  Vector mu;           // sum_i X_i / n
  Matrix delta_tilde;  // sum_i X_i X_i^T / (X_i^T mu) / n
};

struct AseLimitParams {
  Matrix delta;
  std::vector<Matrix> sigmas;  // Sigma(nu_k | x, pi), unscaled by n
  CovarianceDiagnostics diagnostics;
};

struct LseLimitParams {
  Vector mu;
  Matrix delta_tilde;
  std::vector<Matrix> sigmas_tilde;  // raw, possibly asymmetric; unscaled by n^2
  std::vector<Vector> scaled_means;  // nu_k / sqrt(sum_l n_l nu_l^T nu_k)
  CovarianceDiagnostics diagnostics;
};

inline constexpr double kMaxCondition = 1e12;
inline constexpr double kGramClamp = 1e-6;

/// p(1-p) for a Gram entry; entries outside (0,1) are clamped to
/// [kGramClamp, 1-kGramClamp] first and counted in `clamped`.
double bernoulli_variance(double p, int* clamped = nullptr);

/// Delta = sum_k pi_k nu_k nu_k^T. Throws kDegenerateConfiguration when its
/// condition number exceeds kMaxCondition.
Matrix ase_delta(const LatentConfig& config);

/// Delta^{-1} (sum_j pi_j nu_j nu_j^T p_kj (1 - p_kj)) Delta^{-1}, p_kj = nu_k^T nu_j.
Matrix ase_covariance(int k, const LatentConfig& config, CovarianceDiagnostics* diag = nullptr);

/// Same with a caller-supplied Delta (e.g. the empirical plug-in).
Matrix ase_covariance(int k, const LatentConfig& config, const Matrix& delta,
                      CovarianceDiagnostics* diag = nullptr);

Vector lse_mu(const LatentConfig& config);

/// sum_k pi_k nu_k nu_k^T / (nu_k^T mu); throws kInvalidScaling if some
/// nu_k^T mu <= 0.
Matrix lse_delta_tilde(const LatentConfig& config);

/// Which centering term the right factor of the LSE covariance carries.
///   kHalfBoth: nu_k^T / (2 nu_k^T mu), the symmetric limit covariance.
///   kHalfLeft: nu_k^T / (nu_k^T mu), only the left factor halved; not
///              symmetric and, after symmetrization, typically indefinite.
enum class LseForm { kHalfBoth, kHalfLeft };

/// The tied LSE covariance
///   sum_j pi_j (Dt^{-1} nu_j / (nu_j^T mu) - nu_k / (2 nu_k^T mu))
///              (nu_j^T Dt^{-1} / (nu_j^T mu) - nu_k^T / (c nu_k^T mu))
///              p_kj (1 - p_kj) / (nu_k^T mu),
/// c = 2 for kHalfBoth and 1 for kHalfLeft. Returned as computed;
/// `diag->asymmetry` reports the relative skew part.
Matrix lse_covariance(int k, const LatentConfig& config, CovarianceDiagnostics* diag = nullptr,
                      LseForm form = LseForm::kHalfBoth);

Matrix lse_covariance(int k, const LatentConfig& config, const Vector& mu,
                      const Matrix& delta_tilde, CovarianceDiagnostics* diag = nullptr,
                      LseForm form = LseForm::kHalfBoth);

/// nu_k / sqrt(sum_l counts_l nu_k^T nu_l).
Vector lse_scaled_mean(int k, const Matrix& x, const Vector& counts);

/// Throws kInvalidScaling if some X_i^T mu_hat <= 0.
EmpiricalMoments empirical_moments(const Matrix& ase_points);

AseLimitParams ase_limit_params(const LatentConfig& config,
                                const std::optional<EmpiricalMoments>& plug_in = std::nullopt);

LseLimitParams lse_limit_params(const LatentConfig& config, const Vector& counts,
                                const std::optional<EmpiricalMoments>& plug_in = std::nullopt,
                                LseForm form = LseForm::kHalfBoth);

}  // namespace sbmes
