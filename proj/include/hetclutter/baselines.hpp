#pragma once

// Estimate-and-plug competitors: the normalized matched filter fed with a
// sample, normalized, recursive fixed-point, or persymmetric recursive
// covariance estimate.

#include "hetclutter/linalg.hpp"

namespace hetclutter {

enum class CovKind { Scm, Nscm, Recursive, PersymmetricRecursive };
enum class CovInit { Nscm, Identity };

struct CovEstimatorSpec {
  CovKind kind = CovKind::Nscm;
  int iterations = 3;
  CovInit init = CovInit::Nscm;

  void validate() const;
};

/// (1/K) Σ z_k z_k†. May be singular.
CMatrix scm(const CMatrix& secondary);

/// (N/K) Σ z_k z_k† / ‖z_k‖²; trace is exactly N.
CMatrix nscm(const CMatrix& secondary);

/// M ← (N/K) Σ z_k z_k† / (z_k† M⁻¹ z_k), `iterations` times from `init`.
CMatrix recursive_fp(const CMatrix& secondary, int iterations, CovInit init = CovInit::Nscm);

/// J·conj(M)·J, with J the exchange matrix.
CMatrix exchange_conjugate(const CMatrix& m);

/// (M + J·conj(M)·J) / 2.
CMatrix persymmetrize(const CMatrix& m);

/// recursive_fp with persymmetrization after every step, starting from the
/// persymmetrized NSCM.
CMatrix persym_recursive_fp(const CMatrix& secondary, int iterations);

CMatrix estimate_covariance(const CMatrix& secondary, const CovEstimatorSpec& spec);

/// |v†M⁻¹z|² / ((v†M⁻¹v)(z†M⁻¹z)), in [0, 1].
double nmf_statistic(const CVector& z, const CVector& v, const CMatrix& m);

}  // namespace hetclutter
