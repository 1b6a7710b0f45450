#pragma once

// Dense complex kernels for small Hermitian positive-definite matrices.

#include <complex>

#include <Eigen/Dense>

namespace hetclutter {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Lower-triangular factor L of a Hermitian positive-definite M = L·L†.
/// Only the lower triangle of the input is read.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const CMatrix& m);

  Eigen::Index dim() const { return lower_.rows(); }
  const CMatrix& lower() const { return lower_; }

  /// ln det M = 2 Σ ln L_ii.
  double logdet() const;
  /// x† M⁻¹ x via one forward substitution.
  double inv_quadform(const CVector& x) const;
  /// M⁻¹ b.
  CVector solve(const CVector& b) const;
  /// L⁻¹ b.
  CVector solve_lower(const CVector& b) const;
  CMatrix inverse() const;

 private:
  CMatrix lower_;
};

CholeskyFactor cholesky(const CMatrix& m);
double logdet(const CMatrix& m);
double inv_quadform(const CMatrix& m, const CVector& x);

/// Returns (M + c·x·x†)⁻¹ given M⁻¹. Throws DowndateSingular when the
/// Sherman-Morrison denominator 1 + c·x†M⁻¹x is at or below 1e-10, in which
/// case the caller should refactor from scratch.
CMatrix sm_update_inv(const CMatrix& minv, const CVector& x, double c);

/// In-place variant of sm_update_inv; `minv` is left untouched on throw.
void sm_update_inv_inplace(CMatrix& minv, const CVector& x, double c);

/// Unitary U with U·w = ‖w‖·e₁ (first entry real and nonnegative).
CMatrix householder_align(const CVector& w);

/// R^(-1/2) built from the Hermitian eigendecomposition of R.
CMatrix hermitian_inv_sqrt(const CMatrix& r);

/// T = U·R^(-1/2) with U aligning R^(-1/2)·v onto e₁, so that T·R·T† = I and
/// T·v = c·e₁ with c > 0.
CMatrix whitening_rotation(const CMatrix& r, const CVector& v);

/// zk†(z z†)⁺zk with the Moore-Penrose inverse, i.e. |zk†z|² / ‖z‖⁴.
double pinv_rank1_quadform(const CVector& z, const CVector& zk);

/// ‖M − M†‖_F ≤ tol·‖M‖_F.
bool is_hermitian(const CMatrix& m, double tol = 1e-12);

}  // namespace hetclutter
