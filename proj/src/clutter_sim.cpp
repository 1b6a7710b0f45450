#include "hetclutter/clutter_sim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "hetclutter/error.hpp"

namespace hetclutter {

void ClutterScenario::validate() const {
  if (N < 2) throw Error(ErrorCode::InvalidArgument, "N must be at least 2");
  if (K < N) throw Error(ErrorCode::InvalidArgument, "K must be at least N");
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidRho, "rho must lie in [0, 1)");
  if (!(nu > 0.0)) throw Error(ErrorCode::InvalidArgument, "nu must be positive");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw Error(ErrorCode::InvalidArgument, "sigma2 must be finite and nonnegative");
  }
  if (!std::isfinite(doppler) || std::isnan(snr_db)) {
    throw Error(ErrorCode::InvalidArgument, "doppler and snr_db must be numbers");
  }
}

CVector steering_vector(int n, double doppler) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "steering vector length must be positive");
  CVector v(n);
  for (int i = 0; i < n; ++i) {
    // Reduce to a fractional cycle first so long vectors keep full phase
    // accuracy; the fma term is the rounding error of the product.
    const double product = doppler * i;
    const double cycles = (product - std::floor(product)) + std::fma(doppler, static_cast<double>(i), -product);
    v(i) = std::polar(1.0, 2.0 * std::numbers::pi * cycles);
  }
  return v;
}

CMatrix exp_covariance(int n, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidRho, std::to_string(rho));
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "covariance size must be positive");
  std::vector<double> powers(n);
  powers[0] = 1.0;
  for (int i = 1; i < n; ++i) powers[i] = std::pow(rho, i);
  CMatrix r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = powers[std::abs(i - j)];
  return r;
}

double sample_texture(double nu, SplitMix64& rng) {
  if (std::isinf(nu)) return 1.0;
  std::gamma_distribution<double> gamma(nu, 1.0 / nu);
  double g = gamma(rng);
  // Tiny shapes can underflow to exactly zero; texture must stay positive.
  while (!(g > 0.0)) g = gamma(rng);
  return std::sqrt(g);
}

CVector complex_gaussian(Eigen::Index n, SplitMix64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CVector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    g(i) = cdouble(re, im);
  }
  return g;
}

CVector sample_snapshot(const CMatrix& r_factor, double tau, double sigma2, SplitMix64& speckle_rng,
                        SplitMix64& noise_rng) {
  const Eigen::Index n = r_factor.rows();
  CVector x = r_factor.triangularView<Eigen::Lower>() * complex_gaussian(n, speckle_rng);
  x *= tau;
  const CVector noise = complex_gaussian(n, noise_rng);
  if (sigma2 > 0.0) x += std::sqrt(sigma2) * noise;
  return x;
}

cdouble alpha_from_snr(double snr_linear, const CVector& v, const CMatrix& r, double sigma2) {
  if (!(snr_linear >= 0.0)) throw Error(ErrorCode::InvalidArgument, "SNR must be nonnegative");
  const Eigen::Index n = r.rows();
  const CMatrix loaded = r + sigma2 * CMatrix::Identity(n, n);
  const double gain = inv_quadform(loaded, v);
  return cdouble(std::sqrt(snr_linear / gain), 0.0);
}

DatasetGenerator::DatasetGenerator(const ClutterScenario& scenario, CutTexture cut_mode)
    : scenario_(scenario), cut_mode_(cut_mode) {
  scenario_.validate();
  r_ = exp_covariance(scenario_.N, scenario_.rho);
  r_factor_ = cholesky(r_).lower();
  v_ = steering_vector(scenario_.N, scenario_.doppler);
  alpha_ = scenario_.hypothesis == Hypothesis::H1
               ? alpha_from_snr(db_to_linear(scenario_.snr_db), v_, r_, scenario_.sigma2)
               : cdouble(0.0, 0.0);
}

DataSet DatasetGenerator::generate(std::uint64_t seed, std::uint64_t trial) const {
  const int n = scenario_.N;
  const int k = scenario_.K;

  DataSet out;
  out.v = v_;
  out.truth.hypothesis = scenario_.hypothesis;
  out.truth.alpha = alpha_;
  out.truth.R = r_;
  out.truth.gammas.resize(k);
  out.Z.resize(n, k);

  for (int s = 0; s <= k; ++s) {
    SplitMix64 texture_rng = substream(seed, trial, s, StreamComponent::Texture);
    SplitMix64 speckle_rng = substream(seed, trial, s, StreamComponent::Speckle);
    SplitMix64 noise_rng = substream(seed, trial, s, StreamComponent::Noise);
    double tau = sample_texture(scenario_.nu, texture_rng);
    if (s == 0 && cut_mode_ == CutTexture::Design) tau = 1.0;
    CVector x = sample_snapshot(r_factor_, tau, scenario_.sigma2, speckle_rng, noise_rng);
    if (s == 0) {
      out.truth.cut_gamma = tau * tau;
      out.z = std::move(x);
    } else {
      out.truth.gammas[s - 1] = tau * tau;
      out.Z.col(s - 1) = x;
    }
  }
  if (scenario_.hypothesis == Hypothesis::H1) out.z += alpha_ * v_;
  return out;
}

DataSet gen_dataset(const ClutterScenario& scenario, std::uint64_t seed, std::uint64_t trial,
                    CutTexture cut_mode) {
  return DatasetGenerator(scenario, cut_mode).generate(seed, trial);
}

}  // namespace hetclutter
