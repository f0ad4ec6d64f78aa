#include "sbmes/limit_covariance.hpp"

#include <algorithm>
#include <cmath>

#include "sbmes/error.hpp"

namespace sbmes {
namespace {

void check_index(int k, const LatentConfig& config) {
  if (k < 0 || k >= config.blocks()) throw Error(ErrorCode::kInvalidArgument, "block index out of range");
  if (config.pi.size() != config.x.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "latent rows must match pi length");
  }
}

Vector projections_on(const Matrix& x, const Vector& mu) {
  Vector proj = x * mu;
  for (Eigen::Index k = 0; k < proj.size(); ++k) {
    if (!(proj(k) > 0.0)) {
      throw Error(ErrorCode::kInvalidScaling, "latent position has nonpositive projection on mu");
    }
  }
  return proj;
}

Matrix second_moment(const LatentConfig& config) {
  const Matrix& x = config.x;
  return x.transpose() * config.pi.asDiagonal() * x;
}

}  // namespace

double bernoulli_variance(double p, int* clamped) {
  if (!(p > 0.0 && p < 1.0)) {
    p = std::clamp(p, kGramClamp, 1.0 - kGramClamp);
    if (std::isnan(p)) p = kGramClamp;
    if (clamped) ++*clamped;
  }
  return p * (1.0 - p);
}

Matrix ase_delta(const LatentConfig& config) {
  if (config.pi.size() != config.x.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "latent rows must match pi length");
  }
  Matrix delta = second_moment(config);
  spd_inverse(delta, kMaxCondition);  // condition guard only
  return delta;
}

Matrix ase_covariance(int k, const LatentConfig& config, CovarianceDiagnostics* diag) {
  check_index(k, config);
  return ase_covariance(k, config, second_moment(config), diag);
}

Matrix ase_covariance(int k, const LatentConfig& config, const Matrix& delta,
                      CovarianceDiagnostics* diag) {
  check_index(k, config);
  const GuardedInverse inv = spd_inverse(delta, kMaxCondition);
  const Matrix& x = config.x;
  const Eigen::Index d = x.cols();
  int clamped = 0;
  Matrix inner = Matrix::Zero(d, d);
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    const double v = bernoulli_variance(x.row(k).dot(x.row(j)), &clamped);
    inner.noalias() += config.pi(j) * v * x.row(j).transpose() * x.row(j);
  }
  if (diag) {
    diag->clamped_terms += clamped;
    diag->condition = std::max(diag->condition, inv.condition);
  }
  return inv.inverse * inner * inv.inverse;
}

Vector lse_mu(const LatentConfig& config) {
  if (config.pi.size() != config.x.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "latent rows must match pi length");
  }
  return config.x.transpose() * config.pi;
}

Matrix lse_delta_tilde(const LatentConfig& config) {
  const Vector mu = lse_mu(config);
  const Vector proj = projections_on(config.x, mu);
  const Vector w = config.pi.cwiseQuotient(proj);
  return config.x.transpose() * w.asDiagonal() * config.x;
}

Matrix lse_covariance(int k, const LatentConfig& config, CovarianceDiagnostics* diag,
                      LseForm form) {
  check_index(k, config);
  return lse_covariance(k, config, lse_mu(config), lse_delta_tilde(config), diag, form);
}

Matrix lse_covariance(int k, const LatentConfig& config, const Vector& mu,
                      const Matrix& delta_tilde, CovarianceDiagnostics* diag, LseForm form) {
  check_index(k, config);
  const Matrix& x = config.x;
  const Vector proj = projections_on(x, mu);
  const GuardedInverse inv = spd_inverse(delta_tilde, kMaxCondition);
  const Eigen::Index d = x.cols();
  const Vector nu_k = x.row(k).transpose();
  const double proj_k = proj(k);
  int clamped = 0;
  Matrix sum = Matrix::Zero(d, d);
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    const Vector a = inv.inverse * x.row(j).transpose() / proj(j);
    const Vector left = a - nu_k / (2.0 * proj_k);
    const Vector right = a - nu_k / (form == LseForm::kHalfBoth ? 2.0 * proj_k : proj_k);
    const double v = bernoulli_variance(nu_k.dot(x.row(j)), &clamped);
    sum.noalias() += config.pi(j) * (v / proj_k) * left * right.transpose();
  }
  if (diag) {
    diag->clamped_terms += clamped;
    diag->condition = std::max(diag->condition, inv.condition);
    const double norm = sum.norm();
    if (norm > 0.0) {
      diag->asymmetry = std::max(diag->asymmetry, (sum - sum.transpose()).norm() / (2.0 * norm));
    }
  }
  return sum;
}

Vector lse_scaled_mean(int k, const Matrix& x, const Vector& counts) {
  if (k < 0 || k >= x.rows() || counts.size() != x.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "scaled mean arguments disagree");
  }
  const double s = (x * x.row(k).transpose()).dot(counts);
  if (!(s > 0.0)) throw Error(ErrorCode::kInvalidScaling, "nonpositive LSE scaling denominator");
  return x.row(k).transpose() / std::sqrt(s);
}

EmpiricalMoments empirical_moments(const Matrix& ase_points) {
  const Eigen::Index n = ase_points.rows();
  if (n < ase_points.cols() || n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "need at least d points for empirical moments");
  }
  EmpiricalMoments m;
  m.delta = ase_points.transpose() * ase_points / static_cast<double>(n);
  m.mu = ase_points.colwise().mean().transpose();
  const Vector proj = ase_points * m.mu;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(proj(i) > 0.0)) throw Error(ErrorCode::kInvalidScaling, "invalid empirical scaling");
  }
  m.delta_tilde = ase_points.transpose() * proj.cwiseInverse().asDiagonal() * ase_points /
                  static_cast<double>(n);
  m.delta = symmetrize(m.delta);
  m.delta_tilde = symmetrize(m.delta_tilde);
  return m;
}

AseLimitParams ase_limit_params(const LatentConfig& config,
                                const std::optional<EmpiricalMoments>& plug_in) {
  AseLimitParams out;
  out.delta = plug_in ? plug_in->delta : second_moment(config);
  for (int k = 0; k < config.blocks(); ++k) {
    out.sigmas.push_back(ase_covariance(k, config, out.delta, &out.diagnostics));
  }
  return out;
}

LseLimitParams lse_limit_params(const LatentConfig& config, const Vector& counts,
                                const std::optional<EmpiricalMoments>& plug_in, LseForm form) {
  LseLimitParams out;
  if (plug_in) {
    out.mu = plug_in->mu;
    out.delta_tilde = plug_in->delta_tilde;
  } else {
    out.mu = lse_mu(config);
    out.delta_tilde = lse_delta_tilde(config);
  }
  for (int k = 0; k < config.blocks(); ++k) {
    out.sigmas_tilde.push_back(
        lse_covariance(k, config, out.mu, out.delta_tilde, &out.diagnostics, form));
    out.scaled_means.push_back(lse_scaled_mean(k, config.x, counts));
  }
  return out;
}

}  // namespace sbmes
