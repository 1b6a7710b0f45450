#include "hetclutter/cyclic_glrt.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hetclutter/error.hpp"

namespace hetclutter {

namespace {

// Below this Sherman-Morrison denominator the downdated inverse loses too
// many digits; the sweep refactors B_h instead.
constexpr double kMinDowndateDenominator = 1e-3;

void check_shapes(const CVector& z, const CMatrix& secondary, const CVector& v) {
  const auto n = z.size();
  if (n < 1) throw Error(ErrorCode::DimensionMismatch, "empty cell-under-test vector");
  if (secondary.rows() != n || v.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "z, Z and v must share the dimension N");
  }
  if (secondary.cols() < n) {
    throw Error(ErrorCode::InvalidArgument, "need K >= N secondary snapshots");
  }
}

double sum_log(const std::vector<double>& values) {
  double acc = 0.0;
  for (double x : values) acc += std::log(x);
  return acc;
}

double loglik_constant(int n, int k) {
  return n * (k + 1.0) * std::log((k + 1.0) / (std::numbers::e * std::numbers::pi));
}

CMatrix weighted_gram(const CMatrix& secondary, const std::vector<double>& gammas) {
  Eigen::VectorXd w(secondary.cols());
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = 1.0 / gammas[k];
  return secondary * w.cast<cdouble>().asDiagonal() * secondary.adjoint();
}

// Σ_{k≠skip} z_k z_k† / γ_k, summed term by term.
CMatrix gram_excluding(const CMatrix& secondary, const std::vector<double>& gammas, Eigen::Index skip) {
  const auto n = secondary.rows();
  CMatrix out = CMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < secondary.cols(); ++k) {
    if (k == skip) continue;
    out.noalias() += (1.0 / gammas[k]) * (secondary.col(k) * secondary.col(k).adjoint());
  }
  return out;
}

class Auditor {
 public:
  Auditor(const CyclicOptions& opts, Hypothesis hyp, const CVector& z, const CMatrix& secondary,
          const CVector& v, CycleDiagnostics& diag)
      : enabled_(opts.audit), hyp_(hyp), z_(z), secondary_(secondary), v_(v), diag_(diag) {}

  void step(cdouble alpha, const std::vector<double>& gammas) {
    if (!enabled_) return;
    const double current = partially_compressed_loglik(hyp_, z_, secondary_, v_, alpha, gammas);
    ++diag_.audited_steps;
    if (has_previous_) record_step(diag_, previous_, current);
    previous_ = current;
    has_previous_ = true;
  }

  static void record_step(CycleDiagnostics& diag, double before, double after) {
    const double scale = std::abs(before);
    const double drop = before - after;
    if (drop > 0.0) {
      const double rel = scale > 0.0 ? drop / scale : drop;
      diag.worst_relative_drop = std::max(diag.worst_relative_drop, rel);
      if (drop > 1e-9 * scale) ++diag.monotone_violations;
    }
  }

 private:
  bool enabled_;
  Hypothesis hyp_;
  const CVector& z_;
  const CMatrix& secondary_;
  const CVector& v_;
  CycleDiagnostics& diag_;
  double previous_ = 0.0;
  bool has_previous_ = false;
};

}  // namespace

void CyclicOptions::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be nonnegative");
  if (!(gamma_clamp[0] > 0.0) || !(gamma_clamp[1] > gamma_clamp[0])) {
    throw Error(ErrorCode::InvalidArgument, "gamma_clamp must be positive and ordered");
  }
}

double GammaBounds::clamp(double g, bool* engaged) const {
  double out = g;
  if (!(g >= lo)) out = lo;  // also catches NaN
  else if (g > hi) out = hi;
  if (engaged) *engaged = out != g;
  return out;
}

double data_scale(const CMatrix& secondary) {
  if (secondary.size() == 0) return 0.0;
  return secondary.squaredNorm() / (static_cast<double>(secondary.cols()) * secondary.rows());
}

std::vector<GammaBounds> gamma_bounds(const CMatrix& secondary, const CyclicOptions& opts) {
  const double s = data_scale(secondary);
  if (!(s > 0.0)) throw Error(ErrorCode::ZeroVector, "secondary data are all zero");
  std::vector<GammaBounds> out;
  out.reserve(secondary.cols());
  for (Eigen::Index k = 0; k < secondary.cols(); ++k) {
    double sk = secondary.col(k).squaredNorm() / static_cast<double>(secondary.rows());
    if (!(sk > 0.0)) sk = s;
    out.push_back({opts.gamma_clamp[0] * sk, opts.gamma_clamp[1] * sk});
  }
  return out;
}

std::vector<double> CycleState::relative_changes() const {
  std::vector<double> out;
  for (std::size_t t = 1; t < loglik_trace.size(); ++t) {
    out.push_back(std::abs(loglik_trace[t] - loglik_trace[t - 1]) / std::abs(loglik_trace[t - 1]));
  }
  return out;
}

std::vector<double> init_gammas(const CVector& z, const CMatrix& secondary, InitMode mode,
                                const std::vector<GammaBounds>& bounds) {
  if (bounds.size() != static_cast<std::size_t>(secondary.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "one gamma bound per secondary vector");
  }
  const double zz = z.squaredNorm();
  if (!(zz > 0.0)) throw Error(ErrorCode::ZeroVector, "cell under test is zero");
  std::vector<double> gammas(secondary.cols(), 1.0);
  if (mode == InitMode::Unit) return gammas;
  for (Eigen::Index k = 0; k < secondary.cols(); ++k) {
    const auto zk = secondary.col(k);
    const double raw = mode == InitMode::MpPseudoinverse ? std::norm(zk.dot(z)) / (zz * zz)
                                                         : zk.squaredNorm() / zz;
    gammas[k] = bounds[k].clamp(raw);
  }
  return gammas;
}

std::vector<double> init_gammas(const CVector& z, const CMatrix& secondary, InitMode mode,
                                const CyclicOptions& opts) {
  return init_gammas(z, secondary, mode, gamma_bounds(secondary, opts));
}

cdouble estimate_alpha(const CVector& z, const CVector& v, const CMatrix& a_inv) {
  const CVector av = a_inv * v;
  const double denom = v.dot(av).real();
  if (!(denom > 0.0)) throw Error(ErrorCode::DegenerateSteering, "v†A⁻¹v is not positive");
  // v†A⁻¹z = (A⁻¹v)†z since A⁻¹ is Hermitian.
  return av.dot(z) / denom;
}

double gamma_from_quadform(double q, int n, int k, const GammaBounds& bounds, bool* clamped) {
  if (k + 1 - n < 1) throw Error(ErrorCode::InvalidArgument, "need K >= N");
  const double raw = (static_cast<double>(k + 1 - n) / n) * q;
  return bounds.clamp(raw, clamped);
}

double gamma_coordinate_update(const CVector& zh, const CMatrix& bh_inv, int n, int k,
                               const GammaBounds& bounds, bool* clamped) {
  if (zh.size() != bh_inv.rows()) throw Error(ErrorCode::DimensionMismatch, "gamma update");
  const double q = zh.dot(bh_inv * zh).real();
  return gamma_from_quadform(std::max(q, 0.0), n, k, bounds, clamped);
}

double partially_compressed_loglik(Hypothesis hypothesis, const CVector& z, const CMatrix& secondary,
                                   const CVector& v, cdouble alpha, const std::vector<double>& gammas) {
  const int n = static_cast<int>(z.size());
  const int k = static_cast<int>(secondary.cols());
  if (static_cast<int>(gammas.size()) != k) {
    throw Error(ErrorCode::DimensionMismatch, "one gamma per secondary snapshot");
  }
  for (double g : gammas) {
    if (!(g > 0.0)) throw Error(ErrorCode::InvalidArgument, "gammas must be positive");
  }
  const CVector r = hypothesis == Hypothesis::H1 ? CVector(z - alpha * v) : z;
  CMatrix s = weighted_gram(secondary, gammas);
  s.noalias() += r * r.adjoint();
  return loglik_constant(n, k) - n * sum_log(gammas) - (k + 1.0) * logdet(s);
}

CycleState run_hypothesis(Hypothesis hypothesis, const CVector& z, const CMatrix& secondary,
                          const CVector& v, const CyclicOptions& opts) {
  opts.validate();
  check_shapes(z, secondary, v);
  const int n = static_cast<int>(z.size());
  const int k = static_cast<int>(secondary.cols());
  const bool h1 = hypothesis == Hypothesis::H1;
  // With K = N, α can put z − αv in the span of N − 1 secondaries; sending
  // the remaining γ to infinity then raises the H1 likelihood without bound.
  if (h1 && k == n) throw Error(ErrorCode::InvalidArgument, "the H1 recursion needs K > N");
  const std::vector<GammaBounds> bounds = gamma_bounds(secondary, opts);
  const double constant = loglik_constant(n, k);

  CycleState state;
  state.hypothesis = hypothesis;
  state.gammas = init_gammas(z, secondary, opts.init_mode, bounds);
  CycleDiagnostics& diag = state.diagnostics;
  Auditor auditor(opts, hypothesis, z, secondary, v, diag);

  CVector residual = z;
  auto accumulator = [&] {
    CMatrix s = weighted_gram(secondary, state.gammas);
    s.noalias() += residual * residual.adjoint();
    return s;
  };
  auto loglik = [&](const CholeskyFactor& s_chol) {
    return constant - n * sum_log(state.gammas) - (k + 1.0) * s_chol.logdet();
  };

  auto refactored_update = [&](int h, bool* clamped) {
    CMatrix b = gram_excluding(secondary, state.gammas, h);
    b.noalias() += residual * residual.adjoint();
    return gamma_from_quadform(cholesky(b).inv_quadform(secondary.col(h)), n, k, bounds[h], clamped);
  };

  CholeskyFactor s_chol = cholesky(accumulator());
  state.loglik_trace.push_back(loglik(s_chol));
  auditor.step(state.alpha, state.gammas);
  CMatrix s_inv;
  CVector u(n);
  if (opts.fast_path) s_inv = s_chol.inverse();

  for (int t = 1; t <= opts.max_iters; ++t) {
    if (h1) {
      const CholeskyFactor a_chol = cholesky(weighted_gram(secondary, state.gammas));
      const CVector wv = a_chol.solve_lower(v);
      const double denom = wv.squaredNorm();
      if (!(denom > 0.0)) throw Error(ErrorCode::DegenerateSteering, "v†A⁻¹v is not positive");
      state.alpha = wv.dot(a_chol.solve_lower(z)) / denom;
      residual = z - state.alpha * v;
      if (opts.fast_path) {
        s_inv = a_chol.inverse();
        sm_update_inv_inplace(s_inv, residual, 1.0);
      }
      auditor.step(state.alpha, state.gammas);
    }

    for (int h = 0; h < k; ++h) {
      const auto zh = secondary.col(h);
      const double c_old = 1.0 / state.gammas[h];
      bool clamped = false;
      if (opts.fast_path) {
        // With M = S⁻¹, u = M z_h and w = z_h†u, removing z_h z_h†/γ_h gives
        // B_h⁻¹ z_h = u / (1 − c w), so q = w / (1 − c w). Downdate and
        // update then collapse into one rank-one correction along u.
        u.noalias() = s_inv * zh;
        const double w = zh.dot(u).real();
        const double denom = 1.0 - c_old * w;
        if (denom > kMinDowndateDenominator) {
          const double q = std::max(w / denom, 0.0);
          state.gammas[h] = gamma_from_quadform(q, n, k, bounds[h], &clamped);
          const double c_new = 1.0 / state.gammas[h];
          const double beta = c_old / denom - c_new / (denom * denom * (1.0 + c_new * q));
          s_inv.noalias() += beta * (u * u.adjoint());
        } else {
          ++diag.fast_path_fallbacks;
          state.gammas[h] = refactored_update(h, &clamped);
          s_inv = cholesky(accumulator()).inverse();
        }
      } else {
        state.gammas[h] = refactored_update(h, &clamped);
      }
      if (clamped) ++diag.clamp_events;
      auditor.step(state.alpha, state.gammas);
    }

    s_chol = cholesky(accumulator());
    if (opts.fast_path) s_inv = s_chol.inverse();
    const double previous = state.loglik_trace.back();
    const double current = loglik(s_chol);
    state.loglik_trace.push_back(current);
    state.iterations = t;
    if (!opts.audit) Auditor::record_step(diag, previous, current);
    state.delta_loglik_final = std::abs(current - previous) / std::abs(previous);
    if (state.delta_loglik_final < opts.epsilon) {
      state.converged = true;
      break;
    }
  }

  state.logdet_accumulator = s_chol.logdet();
  state.A_inv = cholesky(weighted_gram(secondary, state.gammas)).inverse();
  return state;
}

DetectionOutcome detect(const CVector& z, const CMatrix& secondary, const CVector& v,
                        const CyclicOptions& opts) {
  DetectionOutcome out;
  out.h1 = run_hypothesis(Hypothesis::H1, z, secondary, v, opts);
  out.h0 = run_hypothesis(Hypothesis::H0, z, secondary, v, opts);
  const double n = static_cast<double>(z.size());
  const double k = static_cast<double>(secondary.cols());
  out.log_statistic = (n / (k + 1.0)) * (sum_log(out.h0.gammas) - sum_log(out.h1.gammas)) +
                      out.h0.logdet_accumulator - out.h1.logdet_accumulator;
  if (!std::isfinite(out.log_statistic)) {
    throw Error(ErrorCode::NotPositiveDefinite, "statistic is not finite");
  }
  out.converged = out.h1.converged && out.h0.converged;
  return out;
}

}  // namespace hetclutter
