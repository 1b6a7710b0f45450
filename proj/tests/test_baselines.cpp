#include "doctest.h"

#include <limits>

#include "hetclutter/baselines.hpp"
#include "hetclutter/clutter_sim.hpp"
#include "hetclutter/detector.hpp"
#include "hetclutter/error.hpp"
#include "support.hpp"

using namespace hetclutter;
using namespace testsupport;

namespace {

CMatrix scaled_columns(SplitMix64& rng, const CMatrix& zs) {
  CMatrix out = zs;
  for (Eigen::Index k = 0; k < out.cols(); ++k) out.col(k) *= random_scaling(rng, 1e-3, 1e3);
  return out;
}

// One fixed-point step written out with an explicit long double inverse.
CMatrix oracle_step(const CMatrix& zs, const CMatrix& m) {
  const LMatrix inv = inverse(to_long(m));
  const std::size_t n = zs.rows();
  LMatrix acc(n, LVector(n, 0));
  for (const LVector& zk : columns(zs)) add_outer(acc, zk, 1.0L / dot(zk, matvec(inv, zk)).real());
  CMatrix out = to_double(acc);
  return out * (static_cast<double>(n) / zs.cols());
}

CMatrix oracle_persymmetrize(const CMatrix& m) {
  const Eigen::Index n = m.rows();
  CMatrix j = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) j(i, n - 1 - i) = 1.0;
  return 0.5 * (m + j * m.conjugate() * j);
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("sample covariance examples and direct sum") {
  CMatrix e1(2, 1);
  e1 << 1.0, 0.0;
  CHECK((scm(e1) - CMatrix(Eigen::Vector2cd(1.0, 0.0).asDiagonal())).norm() == 0.0);
  CMatrix basis = std::sqrt(2.0) * CMatrix::Identity(2, 2);
  CHECK((scm(basis) - CMatrix::Identity(2, 2)).norm() <= 1e-15);
  SplitMix64 rng(400);
  const CMatrix zs = random_matrix(rng, 5, 9);
  CMatrix direct = CMatrix::Zero(5, 5);
  for (int k = 0; k < 9; ++k) direct += zs.col(k) * zs.col(k).adjoint();
  CHECK((scm(zs) - direct / 9.0).norm() <= 1e-12 * direct.norm());
  CHECK_THROWS_AS(scm(CMatrix(3, 0)), Error);
}

TEST_CASE("normalized sample covariance") {
  SplitMix64 rng(401);
  const CMatrix one = random_matrix(rng, 4, 1);
  const CMatrix expect = 4.0 * one * one.adjoint() / one.squaredNorm();
  CHECK((nscm(one) - expect).norm() <= 1e-13);
  for (int t = 0; t < 100; ++t) {
    const CMatrix zs = random_matrix(rng, 2 + t % 7, 3 + t % 11);
    const CMatrix m = nscm(zs);
    CHECK(std::abs(m.trace() - cdouble(static_cast<double>(zs.rows()))) <= 1e-12);
    CHECK(is_hermitian(m, 0.0));
    CHECK((nscm(scaled_columns(rng, zs)) - m).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CMatrix with_zero = random_matrix(rng, 3, 4);
  with_zero.col(2).setZero();
  CHECK_THROWS_AS(nscm(with_zero), Error);
}

TEST_CASE("normalized sample covariance tracks the shape of R on a large sample") {
  ClutterScenario s;
  s.K = 10000;
  const DataSet d = gen_dataset(s, 402, 0);
  const CMatrix m = nscm(d.Z);
  // Off-diagonal magnitudes fall off monotonically with lag.
  for (int lag = 1; lag < 8; ++lag) {
    double cur = 0.0, prev = 0.0;
    for (int i = 0; i + lag < 8; ++i) cur += std::abs(m(i, i + lag)) / (8 - lag);
    for (int i = 0; i + lag - 1 < 8; ++i) prev += std::abs(m(i, i + lag - 1)) / (9 - lag);
    CHECK(cur < prev);
  }
  // Texture drops out: the limit matches the one for Gaussian clutter.
  ClutterScenario gaussian = s;
  gaussian.nu = std::numeric_limits<double>::infinity();
  CHECK((m - nscm(gen_dataset(gaussian, 4020, 0).Z)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("recursive fixed point") {
  // Orthonormal-scaled basis is a fixed point from the identity.
  const CMatrix basis = std::sqrt(4.0) * CMatrix::Identity(4, 4);
  CHECK((recursive_fp(basis, 5, CovInit::Identity) - CMatrix::Identity(4, 4)).norm() <= 1e-14);
  CHECK((persym_recursive_fp(basis, 5) - CMatrix::Identity(4, 4)).norm() <= 1e-14);

  SplitMix64 rng(403);
  for (int t = 0; t < 50; ++t) {
    const CMatrix zs = random_matrix(rng, 3 + t % 5, 12);
    const CMatrix m = recursive_fp(zs, 3);
    CMatrix o = nscm(zs);
    for (int i = 0; i < 3; ++i) o = oracle_step(zs, o);
    CHECK((m - o).norm() <= 1e-9 * o.norm());
    CMatrix oi = CMatrix::Identity(zs.rows(), zs.rows());
    for (int i = 0; i < 2; ++i) oi = oracle_step(zs, oi);
    CHECK((recursive_fp(zs, 2, CovInit::Identity) - oi).norm() <= 1e-9 * oi.norm());
    const CMatrix scaled = scaled_columns(rng, zs);
    CHECK((recursive_fp(scaled, 3) - m).cwiseAbs().maxCoeff() <= 1e-12 * m.cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(recursive_fp(random_matrix(rng, 4, 3), 3), Error);
  CHECK_THROWS_AS(recursive_fp(random_matrix(rng, 4, 6), 0), Error);
}

TEST_CASE("persymmetrization") {
  const CMatrix r = exp_covariance(6, 0.8);
  CHECK((persymmetrize(r) - r).norm() == 0.0);
  SplitMix64 rng(404);
  for (int t = 0; t < 100; ++t) {
    const CMatrix h = random_hermitian(rng, 4);
    const CMatrix p = persymmetrize(h);
    CHECK((p - oracle_persymmetrize(h)).norm() <= 1e-14 * h.norm());
    CHECK((exchange_conjugate(p) - p).norm() <= 1e-14 * p.norm());
    CHECK(is_hermitian(p, 1e-15));
    CHECK((persymmetrize(p) - p).norm() <= 1e-14 * p.norm());
  }
}

TEST_CASE("persymmetric recursive estimate") {
  ClutterScenario s;
  SplitMix64 rng(405);
  for (int t = 0; t < 50; ++t) {
    const DataSet d = gen_dataset(s, 405, t);
    const CMatrix m = persym_recursive_fp(d.Z, 3);
    CHECK((exchange_conjugate(m) - m).norm() <= 1e-12 * m.norm());
    CMatrix o = oracle_persymmetrize(nscm(d.Z));
    for (int i = 0; i < 3; ++i) o = oracle_persymmetrize(oracle_step(d.Z, o));
    CHECK((m - o).norm() <= 1e-9 * o.norm());
    CHECK((persym_recursive_fp(scaled_columns(rng, d.Z), 3) - m).cwiseAbs().maxCoeff() <=
          1e-12 * m.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("estimator dispatch and validation") {
  SplitMix64 rng(406);
  const CMatrix zs = random_matrix(rng, 4, 8);
  CHECK((estimate_covariance(zs, {CovKind::Scm, 3, CovInit::Nscm}) - scm(zs)).norm() == 0.0);
  CHECK((estimate_covariance(zs, {CovKind::Nscm, 3, CovInit::Nscm}) - nscm(zs)).norm() == 0.0);
  CHECK((estimate_covariance(zs, {CovKind::Recursive, 2, CovInit::Identity}) -
         recursive_fp(zs, 2, CovInit::Identity)).norm() == 0.0);
  CHECK((estimate_covariance(zs, {CovKind::PersymmetricRecursive, 3, CovInit::Nscm}) -
         persym_recursive_fp(zs, 3)).norm() == 0.0);
  CHECK_THROWS_AS(CovEstimatorSpec({CovKind::Recursive, 0, CovInit::Nscm}).validate(), Error);
  CHECK_NOTHROW(CovEstimatorSpec({CovKind::Nscm, 0, CovInit::Nscm}).validate());
}

TEST_CASE("NMF statistic examples and invariances") {
  SplitMix64 rng(407);
  for (int t = 0; t < 100; ++t) {
    const CMatrix m = random_pd(rng, 5);
    const CVector v = random_vector(rng, 5);
    const CVector z = random_vector(rng, 5);
    CHECK(nmf_statistic(random_scaling(rng, 0.01, 100.0) * v, v, m) == doctest::Approx(1.0).epsilon(1e-12));
    const double base = nmf_statistic(z, v, m);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    CHECK(std::abs(nmf_statistic(random_scaling(rng, 1e-3, 1e3) * z, v, uniform(rng, 0.01, 100.0) * m) - base) <=
          1e-12);
    // Whitened-cosine oracle.
    const LMatrix inv = inverse(to_long(m));
    const LVector zl = to_long(z), vl = to_long(v);
    const long double num = std::norm(dot(vl, matvec(inv, zl)));
    const long double den = dot(vl, matvec(inv, vl)).real() * dot(zl, matvec(inv, zl)).real();
    CHECK(std::abs(base - static_cast<double>(num / den)) <= 1e-12);
  }
  CVector z(2), v(2);
  z << 1.0, 0.0;
  v << 0.0, 1.0;
  CHECK(nmf_statistic(z, v, CMatrix::Identity(2, 2)) == 0.0);
  CHECK_THROWS_AS(nmf_statistic(CVector::Zero(2), v, CMatrix::Identity(2, 2)), Error);
  CHECK_THROWS_AS(nmf_statistic(z, v, -CMatrix::Identity(2, 2)), Error);
  CHECK_THROWS_AS(nmf_statistic(z, v, CMatrix::Identity(3, 3)), Error);
}

TEST_CASE("detector wrappers") {
  const DetectorSpec p = DetectorSpec::proposed();
  CHECK(p.is_proposed());
  CHECK(p.name == "proposed");
  CHECK(DetectorSpec::nmf({CovKind::Nscm, 3, CovInit::Nscm}).name == "nmf-nscm");
  CHECK(DetectorSpec::nmf({CovKind::Recursive, 3, CovInit::Nscm}).name == "nmf-recursive");
  CHECK(DetectorSpec::nmf({CovKind::PersymmetricRecursive, 3, CovInit::Nscm}).name == "nmf-persymmetric");
  CHECK(DetectorSpec::nmf({CovKind::Scm, 3, CovInit::Nscm}, "mine").name == "mine");
  ClutterScenario s;
  const DataSet d = gen_dataset(s, 408, 0);
  CHECK(p.evaluate(d.z, d.Z, d.v).statistic == detect(d.z, d.Z, d.v).log_statistic);
  const DetectorSpec n = DetectorSpec::nmf({CovKind::Recursive, 3, CovInit::Nscm});
  CHECK(n.evaluate(d.z, d.Z, d.v).statistic == nmf_statistic(d.z, d.v, recursive_fp(d.Z, 3)));
}

}  // TEST_SUITE
