#pragma once

// Random inputs and independent reference computations for the unit and
// acceptance tests. Nothing here calls into the library's numerics: the
// determinant, inverse, and cyclic-recursion references are written out in
// long double with plain Gaussian elimination.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "hetclutter/linalg.hpp"
#include "hetclutter/rng.hpp"

namespace testsupport {

using hetclutter::CMatrix;
using hetclutter::CVector;
using hetclutter::cdouble;
using hetclutter::SplitMix64;

using lcomplex = std::complex<long double>;
using LMatrix = std::vector<std::vector<lcomplex>>;
using LVector = std::vector<lcomplex>;

inline double uniform(SplitMix64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double normal(SplitMix64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline CVector random_vector(SplitMix64& rng, Eigen::Index n) {
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cdouble(normal(rng), normal(rng));
  return v;
}

inline CMatrix random_matrix(SplitMix64& rng, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = cdouble(normal(rng), normal(rng));
  return m;
}

/// G·G† + shift·I, well conditioned for shift ~ n.
inline CMatrix random_pd(SplitMix64& rng, Eigen::Index n, double shift = 0.5) {
  const CMatrix g = random_matrix(rng, n, n);
  return g * g.adjoint() + shift * CMatrix::Identity(n, n);
}

inline CMatrix random_hermitian(SplitMix64& rng, Eigen::Index n) {
  const CMatrix g = random_matrix(rng, n, n);
  return 0.5 * (g + g.adjoint());
}

inline CMatrix random_unitary(SplitMix64& rng, Eigen::Index n) {
  Eigen::HouseholderQR<CMatrix> qr(random_matrix(rng, n, n));
  return qr.householderQ();
}

/// Nonzero complex scalar with log-uniform magnitude in [lo, hi].
inline cdouble random_scaling(SplitMix64& rng, double lo, double hi) {
  const double mag = std::exp(uniform(rng, std::log(lo), std::log(hi)));
  return std::polar(mag, uniform(rng, 0.0, 2.0 * M_PI));
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

// ---- long double reference algebra -------------------------------------

inline LMatrix to_long(const CMatrix& m) {
  LMatrix out(m.rows(), std::vector<lcomplex>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = lcomplex(m(i, j).real(), m(i, j).imag());
  return out;
}

inline LVector to_long(const CVector& v) {
  LVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = lcomplex(v(i).real(), v(i).imag());
  return out;
}

inline CMatrix to_double(const LMatrix& m) {
  CMatrix out(m.size(), m.empty() ? 0 : m[0].size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j)
      out(i, j) = cdouble(static_cast<double>(m[i][j].real()), static_cast<double>(m[i][j].imag()));
  return out;
}

/// Determinant by Gaussian elimination with partial pivoting.
inline lcomplex det(LMatrix a) {
  const std::size_t n = a.size();
  lcomplex d = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (p != c) {
      std::swap(a[p], a[c]);
      d = -d;
    }
    d *= a[c][c];
    if (a[c][c] == lcomplex(0)) return 0;
    for (std::size_t r = c + 1; r < n; ++r) {
      const lcomplex f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return d;
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
inline LMatrix inverse(LMatrix a) {
  const std::size_t n = a.size();
  LMatrix inv(n, LVector(n, 0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    std::swap(a[p], a[c]);
    std::swap(inv[p], inv[c]);
    const lcomplex piv = a[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] /= piv;
      inv[c][k] /= piv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const lcomplex f = a[r][c];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

inline LVector matvec(const LMatrix& m, const LVector& x) {
  LVector y(m.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += m[i][j] * x[j];
  return y;
}

/// x† y.
inline lcomplex dot(const LVector& x, const LVector& y) {
  lcomplex s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

inline void add_outer(LMatrix& m, const LVector& x, long double w) {
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) m[i][j] += w * x[i] * std::conj(x[j]);
}

/// Columns of an N×K matrix as long double vectors.
inline std::vector<LVector> columns(const CMatrix& z) {
  std::vector<LVector> out;
  for (Eigen::Index k = 0; k < z.cols(); ++k) out.push_back(to_long(CVector(z.col(k))));
  return out;
}

/// Partially-compressed log-likelihood assembled term by term; `residual` is
/// z − αv (or z under H0).
inline long double reference_loglik(const LVector& residual, const std::vector<LVector>& zk,
                                    const std::vector<long double>& gammas) {
  const std::size_t n = residual.size();
  const std::size_t k = zk.size();
  LMatrix s(n, LVector(n, 0));
  add_outer(s, residual, 1.0L);
  long double sum_log = 0;
  for (std::size_t i = 0; i < k; ++i) {
    add_outer(s, zk[i], 1.0L / gammas[i]);
    sum_log += std::log(gammas[i]);
  }
  const long double kk = static_cast<long double>(k) + 1.0L;
  const long double e = std::exp(1.0L);
  const long double pi = 3.141592653589793238462643383279502884L;
  return n * kk * std::log(kk / (e * pi)) - n * sum_log - kk * std::log(std::abs(det(s)));
}

struct ReferenceRun {
  lcomplex alpha = 0;
  std::vector<long double> gammas;
  long double logdet_s = 0;
};

/// Straight-line version of the cyclic recursion: explicit B_h assembly,
/// explicit inverses, no rank-one tricks. MP-pseudoinverse initialization,
/// no clamping (tests use generic data).
inline ReferenceRun reference_recursion(bool h1, const CVector& z_in, const CMatrix& z_sec, const CVector& v_in,
                                        int iterations) {
  const LVector z = to_long(z_in);
  const LVector v = to_long(v_in);
  const std::vector<LVector> zk = columns(z_sec);
  const std::size_t n = z.size();
  const std::size_t k = zk.size();
  const long double zz = dot(z, z).real();

  ReferenceRun run;
  for (std::size_t i = 0; i < k; ++i) run.gammas.push_back(std::norm(dot(zk[i], z)) / (zz * zz));

  LVector residual = z;
  for (int t = 0; t < iterations; ++t) {
    if (h1) {
      LMatrix a(n, LVector(n, 0));
      for (std::size_t i = 0; i < k; ++i) add_outer(a, zk[i], 1.0L / run.gammas[i]);
      const LMatrix a_inv = inverse(a);
      const LVector av = matvec(a_inv, v);
      const LVector az = matvec(a_inv, z);
      run.alpha = dot(v, az) / dot(v, av);
      for (std::size_t i = 0; i < n; ++i) residual[i] = z[i] - run.alpha * v[i];
    }
    for (std::size_t h = 0; h < k; ++h) {
      LMatrix b(n, LVector(n, 0));
      add_outer(b, residual, 1.0L);
      for (std::size_t i = 0; i < k; ++i)
        if (i != h) add_outer(b, zk[i], 1.0L / run.gammas[i]);
      const LVector bz = matvec(inverse(b), zk[h]);
      const long double q = dot(zk[h], bz).real();
      run.gammas[h] = (static_cast<long double>(k + 1 - n) / n) * q;
    }
  }
  LMatrix s(n, LVector(n, 0));
  add_outer(s, residual, 1.0L);
  for (std::size_t i = 0; i < k; ++i) add_outer(s, zk[i], 1.0L / run.gammas[i]);
  run.logdet_s = std::log(std::abs(det(s)));
  return run;
}

/// Statistic from two reference runs, same formula as the detector.
inline long double reference_statistic(const ReferenceRun& h1, const ReferenceRun& h0, std::size_t n) {
  const long double k = static_cast<long double>(h1.gammas.size());
  long double s0 = 0, s1 = 0;
  for (auto g : h0.gammas) s0 += std::log(g);
  for (auto g : h1.gammas) s1 += std::log(g);
  return (n / (k + 1)) * (s0 - s1) + h0.logdet_s - h1.logdet_s;
}

// ---- derivative-free minimizers ----------------------------------------

/// Golden-section minimum of a unimodal f on [a, b].
inline double golden_section(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                             int max_iter = 400) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && std::abs(b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Nested golden-section search over a box: the inner search minimizes over
/// y for each x, the outer over x.
inline std::pair<double, double> golden_section_2d(const std::function<double(double, double)>& f, double x0,
                                                   double x1, double y0, double y1, double tol = 1e-11) {
  auto inner = [&](double x) { return golden_section([&](double y) { return f(x, y); }, y0, y1, tol); };
  const double x = golden_section([&](double xx) { return f(xx, inner(xx)); }, x0, x1, tol);
  return {x, inner(x)};
}

}  // namespace testsupport
