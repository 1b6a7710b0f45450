#include "hetclutter/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "hetclutter/error.hpp"

namespace hetclutter {

namespace {

void require_same_dim(Eigen::Index n, Eigen::Index m, const char* what) {
  if (n != m) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(n) + " vs " + std::to_string(m));
  }
}

}  // namespace

CholeskyFactor::CholeskyFactor(const CMatrix& m) {
  const Eigen::Index n = m.rows();
  if (n < 1 || m.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "cholesky needs a nonempty square matrix");
  }
  const double trace = m.diagonal().real().sum();
  if (!(trace > 0.0) || !std::isfinite(trace)) {
    throw Error(ErrorCode::NotPositiveDefinite, "nonpositive or nonfinite trace");
  }
  const double floor = 1e-14 * trace / static_cast<double>(n);

  lower_ = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j).real();
    for (Eigen::Index k = 0; k < j; ++k) d -= std::norm(lower_(j, k));
    if (!(d > floor)) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "pivot " + std::to_string(j) + " = " + std::to_string(d));
    }
    const double ljj = std::sqrt(d);
    lower_(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      cdouble s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= lower_(i, k) * std::conj(lower_(j, k));
      lower_(i, j) = s / ljj;
    }
  }
}

double CholeskyFactor::logdet() const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < dim(); ++i) acc += std::log(lower_(i, i).real());
  return 2.0 * acc;
}

CVector CholeskyFactor::solve_lower(const CVector& b) const {
  require_same_dim(dim(), b.size(), "solve");
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

double CholeskyFactor::inv_quadform(const CVector& x) const {
  return solve_lower(x).squaredNorm();
}

CVector CholeskyFactor::solve(const CVector& b) const {
  CVector y = solve_lower(b);
  return lower_.adjoint().triangularView<Eigen::Upper>().solve(y);
}

CMatrix CholeskyFactor::inverse() const {
  const CMatrix linv =
      lower_.triangularView<Eigen::Lower>().solve(CMatrix::Identity(dim(), dim()));
  return linv.adjoint() * linv;
}

CholeskyFactor cholesky(const CMatrix& m) { return CholeskyFactor(m); }

double logdet(const CMatrix& m) { return cholesky(m).logdet(); }

double inv_quadform(const CMatrix& m, const CVector& x) {
  require_same_dim(m.rows(), x.size(), "inv_quadform");
  return cholesky(m).inv_quadform(x);
}

void sm_update_inv_inplace(CMatrix& minv, const CVector& x, double c) {
  require_same_dim(minv.rows(), x.size(), "sm_update_inv");
  if (c == 0.0) return;
  const CVector y = minv * x;
  const double denom = 1.0 + c * x.dot(y).real();
  if (!(denom > 1e-10)) {
    throw Error(ErrorCode::DowndateSingular, "denominator " + std::to_string(denom));
  }
  minv.noalias() -= (c / denom) * (y * y.adjoint());
}

CMatrix sm_update_inv(const CMatrix& minv, const CVector& x, double c) {
  CMatrix out = minv;
  sm_update_inv_inplace(out, x, c);
  return out;
}

CMatrix householder_align(const CVector& w) {
  const Eigen::Index n = w.size();
  const double norm = w.norm();
  if (n < 1 || !(norm > 0.0)) throw Error(ErrorCode::ZeroVector, "householder_align");

  // Rotate the phase of w so its first entry is real and nonnegative, then
  // reflect x onto ‖w‖·e₁.
  const cdouble phase = std::abs(w(0)) > 0.0 ? w(0) / std::abs(w(0)) : cdouble(1.0, 0.0);
  const CVector x = std::conj(phase) * w;

  CVector u = x;
  const double tail = x.tail(n - 1).squaredNorm();
  // x₀ − ‖w‖ without cancellation.
  u(0) = -tail / (x(0).real() + norm);

  CMatrix h = CMatrix::Identity(n, n);
  const double unorm2 = u.squaredNorm();
  if (unorm2 > 0.0 && tail > 0.0) h -= (2.0 / unorm2) * (u * u.adjoint());
  return h * std::conj(phase);
}

CMatrix hermitian_inv_sqrt(const CMatrix& r) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(r);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "eigendecomposition failed");
  }
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 0.0)) {
    throw Error(ErrorCode::NotPositiveDefinite, "nonpositive eigenvalue");
  }
  const CMatrix& vecs = eig.eigenvectors();
  return vecs * lambda.cwiseSqrt().cwiseInverse().cast<cdouble>().asDiagonal() * vecs.adjoint();
}

CMatrix whitening_rotation(const CMatrix& r, const CVector& v) {
  require_same_dim(r.rows(), v.size(), "whitening_rotation");
  const CMatrix r_inv_sqrt = hermitian_inv_sqrt(r);
  return householder_align(r_inv_sqrt * v) * r_inv_sqrt;
}

double pinv_rank1_quadform(const CVector& z, const CVector& zk) {
  require_same_dim(z.size(), zk.size(), "pinv_rank1_quadform");
  const double zz = z.squaredNorm();
  if (!(zz > 0.0)) throw Error(ErrorCode::ZeroVector, "pinv_rank1_quadform: z = 0");
  return std::norm(zk.dot(z)) / (zz * zz);
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).norm() <= tol * m.norm();
}

}  // namespace hetclutter
