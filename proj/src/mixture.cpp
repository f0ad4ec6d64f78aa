#include "sbmes/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace sbmes {
namespace {

constexpr double kCollapseMass = 1e-10;

struct Component {
  Eigen::LLT<Matrix> llt;
  double log_norm = 0.0;  // -(d log(2 pi) + log det) / 2
};

Component factor(const Matrix& cov) {
  Component c;
  c.llt.compute(cov);
  if (c.llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kCovarianceNotPd, "covariance not PD");
  }
  const Matrix& l = c.llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double diag = l(i, i);
    if (!(diag > 0.0)) throw Error(ErrorCode::kCovarianceNotPd, "covariance not PD");
    log_det += 2.0 * std::log(diag);
  }
  const double d = static_cast<double>(cov.rows());
  c.log_norm = -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
  return c;
}

double log_density(const Component& c, const Vector& residual) {
  const Vector w = c.llt.matrixL().solve(residual);
  return c.log_norm - 0.5 * w.squaredNorm();
}

void merge(IterationDiagnostics* into, const CovarianceDiagnostics& from) {
  if (!into) return;
  into->clamped_terms += from.clamped_terms;
  into->condition = std::max(into->condition, from.condition);
  into->asymmetry = std::max(into->asymmetry, from.asymmetry);
}

Matrix floored(const Matrix& m, IterationDiagnostics* diag) {
  int clipped = 0;
  Matrix out = psd_floor(m, 1e-12, &clipped);
  if (diag) diag->floored_eigenvalues += clipped;
  return out;
}

// Proportions and weighted means; shared by every S/M-step.
void weighted_moments(const Matrix& points, const Responsibilities& resp, Vector& pi,
                      Matrix& means, Vector& mass) {
  const Eigen::Index n = points.rows();
  if (resp.z.rows() != n) {
    throw Error(ErrorCode::kInvalidArgument, "responsibilities and points disagree");
  }
  mass = resp.z.colwise().sum().transpose();
  for (Eigen::Index k = 0; k < mass.size(); ++k) {
    if (!(mass(k) >= kCollapseMass)) {
      throw Error(ErrorCode::kComponentCollapse,
                  "component collapse: component " + std::to_string(k + 1) + " has no mass");
    }
  }
  pi = mass / static_cast<double>(n);
  means = mass.cwiseInverse().asDiagonal() * (resp.z.transpose() * points);
}

}  // namespace

double gaussian_log_density(const Vector& point, const Vector& mean, const Matrix& cov) {
  if (point.size() != mean.size() || cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw Error(ErrorCode::kInvalidArgument, "density dimensions disagree");
  }
  return log_density(factor(cov), point - mean);
}

Responsibilities e_step(const Matrix& points, const MixtureState& state) {
  const Eigen::Index n = points.rows();
  const int blocks = state.blocks();
  if (state.means.rows() != blocks || static_cast<int>(state.sigmas.size()) != blocks ||
      state.means.cols() != points.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "mixture state and points disagree");
  }
  std::vector<Component> comps;
  comps.reserve(static_cast<std::size_t>(blocks));
  for (const auto& s : state.sigmas) comps.push_back(factor(s));
  Vector log_pi(blocks);
  for (int k = 0; k < blocks; ++k) {
    log_pi(k) = state.pi(k) > 0.0 ? std::log(state.pi(k)) : -std::numeric_limits<double>::infinity();
  }
  Responsibilities out;
  out.z.resize(n, blocks);
  Vector terms(blocks);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector x = points.row(i).transpose();
    for (int k = 0; k < blocks; ++k) {
      terms(k) = std::isinf(log_pi(k))
                     ? log_pi(k)
                     : log_pi(k) + log_density(comps[static_cast<std::size_t>(k)],
                                               x - state.means.row(k).transpose());
    }
    const double top = terms.maxCoeff();
    if (!std::isfinite(top)) {
      out.z.row(i).setConstant(1.0 / blocks);
      ++out.underflow_rows;
      continue;
    }
    // Scalar exp: the vectorized one clamps -inf to a denormal.
    const Vector w = (terms.array() - top).unaryExpr([](double t) { return std::exp(t); }).matrix();
    out.z.row(i) = (w / w.sum()).transpose();
  }
  return out;
}

MixtureState s_step_cgmm(const Matrix& points, const Responsibilities& resp,
                         const VarianceFunctions& variance, IterationDiagnostics* diag) {
  MixtureState next;
  Vector mass;
  weighted_moments(points, resp, next.pi, next.means, mass);
  next.nu = next.means;
  for (Matrix& s : variance(next.means, next.pi)) next.sigmas.push_back(floored(s, diag));
  return next;
}

MixtureState m_step_full_gmm(const Matrix& points, const Responsibilities& resp,
                             IterationDiagnostics* diag) {
  MixtureState next;
  Vector mass;
  weighted_moments(points, resp, next.pi, next.means, mass);
  next.nu = next.means;
  const Eigen::Index d = points.cols();
  for (Eigen::Index k = 0; k < next.pi.size(); ++k) {
    const Matrix centered = points.rowwise() - next.means.row(k);
    Matrix cov = centered.transpose() * resp.z.col(k).asDiagonal() * centered / mass(k);
    cov = symmetrize(cov);
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
      const double avg = cov.trace() / static_cast<double>(d);
      cov += 1e-10 * (avg > 0.0 ? avg : 1.0) * Matrix::Identity(d, d);
      if (diag) ++diag->ridge_events;
    }
    next.sigmas.push_back(std::move(cov));
  }
  return next;
}

MixtureState ase_curved_state(const LatentConfig& config, int n,
                              const std::optional<EmpiricalMoments>& plug_in,
                              IterationDiagnostics* diag) {
  const AseLimitParams params = ase_limit_params(config, plug_in);
  merge(diag, params.diagnostics);
  MixtureState s;
  s.pi = config.pi;
  s.nu = config.x;
  s.means = config.x;
  for (const Matrix& sigma : params.sigmas) {
    s.sigmas.push_back(floored(sigma / static_cast<double>(n), diag));
  }
  return s;
}

MixtureState lse_curved_state(const LatentConfig& config, const Vector& counts, int n,
                              const std::optional<EmpiricalMoments>& plug_in,
                              IterationDiagnostics* diag, LseForm form) {
  const LseLimitParams params = lse_limit_params(config, counts, plug_in, form);
  merge(diag, params.diagnostics);
  MixtureState s;
  s.pi = config.pi;
  s.nu = config.x;
  s.counts = counts;
  s.means.resize(config.x.rows(), config.x.cols());
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  for (int k = 0; k < config.blocks(); ++k) {
    s.means.row(k) = params.scaled_means[static_cast<std::size_t>(k)].transpose();
    s.sigmas.push_back(floored(params.sigmas_tilde[static_cast<std::size_t>(k)] / n2, diag));
  }
  return s;
}

std::pair<Responsibilities, MixtureState> em_iteration(const Matrix& points,
                                                       const MixtureState& state,
                                                       IterationDiagnostics* diag) {
  Responsibilities resp = e_step(points, state);
  if (diag) diag->underflow_rows += resp.underflow_rows;
  MixtureState next = m_step_full_gmm(points, resp, diag);
  return {std::move(resp), std::move(next)};
}

std::pair<Responsibilities, MixtureState> es_ase_iteration(
    const Matrix& ase_points, const MixtureState& state,
    const std::optional<EmpiricalMoments>& plug_in, IterationDiagnostics* diag) {
  Responsibilities resp = e_step(ase_points, state);
  if (diag) diag->underflow_rows += resp.underflow_rows;
  Vector pi, mass;
  Matrix nu;
  weighted_moments(ase_points, resp, pi, nu, mass);
  MixtureState next = ase_curved_state(LatentConfig{nu, pi},
                                       static_cast<int>(ase_points.rows()), plug_in, diag);
  return {std::move(resp), std::move(next)};
}

std::pair<Responsibilities, MixtureState> es_lse_iteration(
    const Matrix& lse_points, const Matrix& ase_points, const MixtureState& state,
    const std::optional<EmpiricalMoments>& plug_in, IterationDiagnostics* diag, LseForm form) {
  if (lse_points.rows() != ase_points.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "LSE and ASE point counts disagree");
  }
  Responsibilities resp = e_step(lse_points, state);
  if (diag) diag->underflow_rows += resp.underflow_rows;
  Vector pi, mass;
  Matrix nu;
  weighted_moments(ase_points, resp, pi, nu, mass);
  const int n = static_cast<int>(ase_points.rows());
  const Vector counts = static_cast<double>(n) * pi;
  MixtureState next = lse_curved_state(LatentConfig{nu, pi}, counts, n, plug_in, diag, form);
  return {std::move(resp), std::move(next)};
}

Vector parameter_vector(const MixtureState& state) {
  const Eigen::Index k = state.pi.size();
  const Eigen::Index d = state.means.cols();
  Vector v(k - 1 + k * d);
  v.head(k - 1) = state.pi.head(k - 1);
  Eigen::Index at = k - 1;
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < d; ++c) v(at++) = state.means(r, c);
  return v;
}

RunResult run_iterations(const Iteration& step, const MixtureState& init, double tol,
                         int max_iter, const Matrix& points) {
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");
  RunResult out;
  out.state = init;
  RunReport& report = out.report;
  Vector previous = parameter_vector(init);
  bool have_resp = false;
  for (int it = 1; it <= max_iter; ++it) {
    IterationDiagnostics diag;
    try {
      auto [resp, next] = step(out.state, diag);
      const Vector current = parameter_vector(next);
      const double norm = (current - previous).norm();
      out.responsibilities = std::move(resp);
      have_resp = true;
      out.state = std::move(next);
      previous = current;
      report.iterations = it;
      report.final_step_norm = norm;
      report.trace.push_back(norm);
      report.conditions.push_back(diag.condition);
      report.clamped_terms += diag.clamped_terms;
      report.floored_eigenvalues += diag.floored_eigenvalues;
      report.ridge_events += diag.ridge_events;
      report.underflow_rows += diag.underflow_rows;
      report.max_asymmetry = std::max(report.max_asymmetry, diag.asymmetry);
      if (norm < tol) {
        report.converged = true;
        break;
      }
    } catch (const Error& e) {
      report.failure = e.code();
      report.failure_message = e.what();
      break;
    }
  }
  if (!have_resp) {
    try {
      out.responsibilities = e_step(points, out.state);
    } catch (const Error&) {
      out.responsibilities.z =
          Matrix::Constant(points.rows(), init.blocks(), 1.0 / init.blocks());
      out.responsibilities.underflow_rows = static_cast<int>(points.rows());
    }
  }
  return out;
}

RunResult run_to_convergence(Engine engine, const Matrix& points, const Matrix* ase_points,
                             const MixtureState& init, const RunOptions& options) {
  Iteration step;
  switch (engine) {
    case Engine::kFullGmmEm:
      step = [&points](const MixtureState& s, IterationDiagnostics& d) {
        return em_iteration(points, s, &d);
      };
      break;
    case Engine::kEsAse:
      step = [&points, &options](const MixtureState& s, IterationDiagnostics& d) {
        return es_ase_iteration(points, s, options.plug_in, &d);
      };
      break;
    case Engine::kEsLse:
      if (!ase_points) throw Error(ErrorCode::kInvalidArgument, "ES for the LSE needs ASE points");
      step = [&points, ase_points, &options](const MixtureState& s, IterationDiagnostics& d) {
        return es_lse_iteration(points, *ase_points, s, options.plug_in, &d, options.lse_form);
      };
      break;
  }
  return run_iterations(step, init, options.tol, options.max_iter, points);
}

RunResult run_curved(const Matrix& points, const VarianceFunctions& variance,
                     const MixtureState& init, const RunOptions& options) {
  Iteration step = [&](const MixtureState& s, IterationDiagnostics& d) {
    Responsibilities resp = e_step(points, s);
    d.underflow_rows += resp.underflow_rows;
    MixtureState next = s_step_cgmm(points, resp, variance, &d);
    return std::pair{std::move(resp), std::move(next)};
  };
  return run_iterations(step, init, options.tol, options.max_iter, points);
}

Labels cluster_assign(const Responsibilities& resp) {
  Labels labels(static_cast<std::size_t>(resp.z.rows()));
  for (Eigen::Index i = 0; i < resp.z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < resp.z.cols(); ++k)
      if (resp.z(i, k) > resp.z(i, best)) best = k;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

int parameter_count(ModelKind kind, int blocks, int dim) {
  if (blocks < 1 || dim < 1) throw Error(ErrorCode::kInvalidArgument, "K and d must be positive");
  const int curved = (dim + 1) * blocks - 1;
  if (kind == ModelKind::kCurvedGmm) return curved;
  return curved + blocks * (dim + dim * (dim - 1) / 2);
}

void write_state(std::ostream& out, const MixtureState& state) {
  auto row = [&out](const auto& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v(j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  };
  row(state.pi);
  for (Eigen::Index k = 0; k < state.nu.rows(); ++k) row(state.nu.row(k));
  for (const Matrix& s : state.sigmas)
    for (Eigen::Index i = 0; i < s.rows(); ++i) row(s.row(i));
}

}  // namespace sbmes
