#pragma once

// Cyclic-estimation approximation of the GLRT for heterogeneous clutter:
// target amplitude and per-cell power levels are estimated by coordinate
// ascent on the partially-compressed likelihoods (covariance already
// maximized out), once under each hypothesis.

#include <array>
#include <limits>
#include <vector>

#include "hetclutter/clutter_sim.hpp"
#include "hetclutter/linalg.hpp"

namespace hetclutter {

enum class InitMode { MpPseudoinverse, PowerRatio, Unit };

struct CyclicOptions {
  int max_iters = 20;
  /// Relative log-likelihood change below which the recursion stops. Zero
  /// runs the full max_iters budget.
  double epsilon = 0.0;
  InitMode init_mode = InitMode::MpPseudoinverse;
  /// Bounds on γ_k relative to the power ‖z_k‖²/N of its own snapshot.
  std::array<double, 2> gamma_clamp{1e-12, 1e12};
  /// Sherman-Morrison sweeps instead of refactoring every B_h.
  bool fast_path = true;
  /// Re-evaluate the full log-likelihood after every coordinate step and
  /// count monotonicity violations. Expensive; meant for verification runs.
  bool audit = false;

  void validate() const;
};

struct GammaBounds {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  double clamp(double g, bool* engaged = nullptr) const;
};

/// s = (1/K) Σ ‖z_k‖² / N.
double data_scale(const CMatrix& secondary);
/// Bounds for γ_k: gamma_clamp × ‖z_k‖²/N (× s for an all-zero z_k). Scaling
/// z_k by c scales its bounds by |c|², so clamping never breaks the
/// invariance to per-vector scalings.
std::vector<GammaBounds> gamma_bounds(const CMatrix& secondary, const CyclicOptions& opts);

struct CycleDiagnostics {
  int clamp_events = 0;
  int fast_path_fallbacks = 0;
  int audited_steps = 0;
  int monotone_violations = 0;
  /// Largest relative decrease seen between consecutive audited steps (or
  /// consecutive iterations when not auditing); 0 when ascent held.
  double worst_relative_drop = 0.0;
};

struct CycleState {
  Hypothesis hypothesis = Hypothesis::H0;
  cdouble alpha{0.0, 0.0};
  std::vector<double> gammas;
  /// (Σ z_k z_k† / γ_k)⁻¹ at the final γ estimates.
  CMatrix A_inv;
  /// ln det[(z − αv)(z − αv)† + Σ z_k z_k† / γ_k] at the final estimates.
  double logdet_accumulator = 0.0;
  /// L(0) at the initial γ (α = 0), then one entry per completed iteration.
  std::vector<double> loglik_trace;
  int iterations = 0;
  double delta_loglik_final = 0.0;
  /// The relative-change stopping rule fired (never with epsilon = 0).
  bool converged = false;
  CycleDiagnostics diagnostics;

  /// |L(t) − L(t−1)| / |L(t−1)| for t = 1..iterations.
  std::vector<double> relative_changes() const;
};

struct DetectionOutcome {
  /// Natural log of the GLRT approximation.
  double log_statistic = 0.0;
  CycleState h1;
  CycleState h0;
  bool converged = false;
};

/// Initial γ estimates. Clamped to the bounds except in unit mode.
std::vector<double> init_gammas(const CVector& z, const CMatrix& secondary, InitMode mode,
                                const std::vector<GammaBounds>& bounds);
std::vector<double> init_gammas(const CVector& z, const CMatrix& secondary, InitMode mode,
                                const CyclicOptions& opts = {});

/// α̂ = v†A⁻¹z / v†A⁻¹v.
cdouble estimate_alpha(const CVector& z, const CVector& v, const CMatrix& a_inv);

/// Stationary point ((K+1−N)/N)·q of f₂(γ) = γ^N det^{K+1}(B + z z†/γ),
/// where q = z†B⁻¹z.
double gamma_from_quadform(double q, int n, int k, const GammaBounds& bounds = {},
                           bool* clamped = nullptr);
double gamma_coordinate_update(const CVector& zh, const CMatrix& bh_inv, int n, int k,
                               const GammaBounds& bounds = {}, bool* clamped = nullptr);

/// N(K+1)·ln((K+1)/(eπ)) − N·Σ ln γ_k − (K+1)·ln det[(z−αv)(z−αv)† + Σ z_k z_k†/γ_k].
/// Under H0 α is ignored.
double partially_compressed_loglik(Hypothesis hypothesis, const CVector& z, const CMatrix& secondary,
                                   const CVector& v, cdouble alpha, const std::vector<double>& gammas);

/// Needs K ≥ N, and K > N under H1: at K = N the H1 likelihood has no
/// maximum and the recursion would chase γ to infinity.
CycleState run_hypothesis(Hypothesis hypothesis, const CVector& z, const CMatrix& secondary,
                          const CVector& v, const CyclicOptions& opts = {});

DetectionOutcome detect(const CVector& z, const CMatrix& secondary, const CVector& v,
                        const CyclicOptions& opts = {});

}  // namespace hetclutter
