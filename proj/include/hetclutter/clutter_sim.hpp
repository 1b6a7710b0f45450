#pragma once

// Compound-Gaussian clutter simulator: correlated complex Gaussian speckle
// scaled by a per-cell Gamma texture, optional thermal noise, and a
// steering-vector target calibrated to a requested SNR.

#include <cstdint>
#include <vector>

#include "hetclutter/linalg.hpp"
#include "hetclutter/rng.hpp"

namespace hetclutter {

enum class Hypothesis { H0, H1 };

/// How the texture of the cell under test is drawn. Design mode keeps the CUT
/// at unit power (γ normalized to the CUT); sirp mode draws it like any other
/// cell, which deliberately breaks the design model.
enum class CutTexture { Design, Sirp };

struct ClutterScenario {
  int N = 8;
  int K = 16;
  double rho = 0.95;
  double nu = 0.5;  // +inf means unit texture everywhere (homogeneous)
  double sigma2 = 0.0;
  double doppler = 0.0;
  double snr_db = 0.0;
  Hypothesis hypothesis = Hypothesis::H0;

  /// Throws InvalidArgument / InvalidRho on violated invariants.
  void validate() const;
};

struct GroundTruth {
  Hypothesis hypothesis = Hypothesis::H0;
  cdouble alpha{0.0, 0.0};
  double cut_gamma = 1.0;
  std::vector<double> gammas;
  CMatrix R;
};

struct DataSet {
  CVector z;  // cell under test
  CMatrix Z;  // N×K, one secondary snapshot per column
  CVector v;
  GroundTruth truth;
};

CVector steering_vector(int n, double doppler);

/// Toeplitz ρ^|m₁−m₂|.
CMatrix exp_covariance(int n, double rho);

/// τ = sqrt(g), g ~ Gamma(shape ν, scale 1/ν), so E[τ²] = 1.
double sample_texture(double nu, SplitMix64& rng);

/// One standard circular complex Gaussian vector, CN(0, I).
CVector complex_gaussian(Eigen::Index n, SplitMix64& rng);

/// τ·L·g + σ·n. Speckle and noise come from separate streams so that changing
/// σ² or τ leaves the other draws unchanged.
CVector sample_snapshot(const CMatrix& r_factor, double tau, double sigma2, SplitMix64& speckle_rng,
                        SplitMix64& noise_rng);

/// |α| such that |α|²·v†(R + σ²I)⁻¹v = SNR; α is real and nonnegative.
cdouble alpha_from_snr(double snr_linear, const CVector& v, const CMatrix& r, double sigma2);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Caches the per-scenario quantities (R, its factor, v, α) so Monte Carlo
/// loops only pay for the draws.
class DatasetGenerator {
 public:
  explicit DatasetGenerator(const ClutterScenario& scenario, CutTexture cut_mode = CutTexture::Design);

  /// Trial `trial` of the stream keyed by `seed`. Pure: identical arguments
  /// give bit-identical data.
  DataSet generate(std::uint64_t seed, std::uint64_t trial) const;

  const ClutterScenario& scenario() const { return scenario_; }
  const CMatrix& covariance() const { return r_; }
  const CVector& steering() const { return v_; }
  cdouble alpha() const { return alpha_; }

 private:
  ClutterScenario scenario_;
  CutTexture cut_mode_;
  CMatrix r_;
  CMatrix r_factor_;
  CVector v_;
  cdouble alpha_;
};

DataSet gen_dataset(const ClutterScenario& scenario, std::uint64_t seed, std::uint64_t trial,
                    CutTexture cut_mode = CutTexture::Design);

}  // namespace hetclutter
