#include "hetclutter/baselines.hpp"

#include <algorithm>

#include "hetclutter/error.hpp"

namespace hetclutter {

namespace {

Eigen::VectorXd column_powers(const CMatrix& secondary) {
  Eigen::VectorXd p = secondary.colwise().squaredNorm().transpose();
  if (p.size() == 0 || !(p.minCoeff() > 0.0)) {
    throw Error(ErrorCode::ZeroVector, "secondary snapshot with zero norm");
  }
  return p;
}

CMatrix normalized_gram(const CMatrix& secondary, const Eigen::VectorXd& weights) {
  const double n = static_cast<double>(secondary.rows());
  const double k = static_cast<double>(secondary.cols());
  const CMatrix scaled = secondary * weights.cwiseInverse().cwiseSqrt().cast<cdouble>().asDiagonal();
  CMatrix out = (n / k) * (scaled * scaled.adjoint());
  return (out + out.adjoint()) * 0.5;
}

CMatrix fixed_point_step(const CMatrix& secondary, const CMatrix& current) {
  const CholeskyFactor chol = cholesky(current);
  Eigen::VectorXd quad(secondary.cols());
  for (Eigen::Index k = 0; k < secondary.cols(); ++k) {
    quad(k) = chol.inv_quadform(secondary.col(k));
    if (!(quad(k) > 0.0)) throw Error(ErrorCode::ZeroVector, "secondary snapshot with zero norm");
  }
  return normalized_gram(secondary, quad);
}

}  // namespace

void CovEstimatorSpec::validate() const {
  if ((kind == CovKind::Recursive || kind == CovKind::PersymmetricRecursive) && iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "recursive estimators need iterations >= 1");
  }
}

CMatrix scm(const CMatrix& secondary) {
  if (secondary.cols() < 1) throw Error(ErrorCode::InvalidArgument, "scm needs K >= 1");
  return (secondary * secondary.adjoint()) / static_cast<double>(secondary.cols());
}

CMatrix nscm(const CMatrix& secondary) {
  return normalized_gram(secondary, column_powers(secondary));
}

CMatrix recursive_fp(const CMatrix& secondary, int iterations, CovInit init) {
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  if (secondary.cols() < secondary.rows()) {
    throw Error(ErrorCode::InvalidArgument, "recursive estimate needs K >= N");
  }
  const auto n = secondary.rows();
  CMatrix m = init == CovInit::Nscm ? nscm(secondary) : CMatrix::Identity(n, n);
  for (int i = 0; i < iterations; ++i) m = fixed_point_step(secondary, m);
  return m;
}

CMatrix exchange_conjugate(const CMatrix& m) {
  // (J·conj(M)·J)(i, j) = conj(M(n−1−i, n−1−j)).
  return m.reverse().conjugate();
}

CMatrix persymmetrize(const CMatrix& m) { return 0.5 * (m + exchange_conjugate(m)); }

CMatrix persym_recursive_fp(const CMatrix& secondary, int iterations) {
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  if (secondary.cols() < secondary.rows()) {
    throw Error(ErrorCode::InvalidArgument, "recursive estimate needs K >= N");
  }
  CMatrix m = persymmetrize(nscm(secondary));
  for (int i = 0; i < iterations; ++i) m = persymmetrize(fixed_point_step(secondary, m));
  return m;
}

CMatrix estimate_covariance(const CMatrix& secondary, const CovEstimatorSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case CovKind::Scm: return scm(secondary);
    case CovKind::Nscm: return nscm(secondary);
    case CovKind::Recursive: return recursive_fp(secondary, spec.iterations, spec.init);
    case CovKind::PersymmetricRecursive: return persym_recursive_fp(secondary, spec.iterations);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown covariance estimator");
}

double nmf_statistic(const CVector& z, const CVector& v, const CMatrix& m) {
  if (z.size() != m.rows() || v.size() != m.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "nmf_statistic");
  }
  if (!(z.squaredNorm() > 0.0) || !(v.squaredNorm() > 0.0)) {
    throw Error(ErrorCode::ZeroVector, "nmf_statistic needs nonzero z and v");
  }
  const CholeskyFactor chol = cholesky(m);
  const CVector wz = chol.solve_lower(z);
  const CVector wv = chol.solve_lower(v);
  const double value = std::norm(wv.dot(wz)) / (wv.squaredNorm() * wz.squaredNorm());
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace hetclutter
