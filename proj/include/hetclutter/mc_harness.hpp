#pragma once

// Monte Carlo engine: threshold calibration at a target Pfa, Pd-vs-SNR curves,
// Pfa sensitivity sweeps, and convergence profiling of the cyclic recursion.
//
// Every trial draws from substreams keyed by (seed, trial index), and results
// are gathered by trial index, so reports do not depend on the thread count.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hetclutter/clutter_sim.hpp"
#include "hetclutter/detector.hpp"

namespace hetclutter {

struct HarnessConfig {
  unsigned threads = 1;
  CutTexture cut_mode = CutTexture::Design;
};

/// Runs body(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Wilson score interval for `successes` out of `trials`.
struct Interval {
  double low = 0.0;
  double high = 1.0;
};
Interval wilson_interval(std::int64_t successes, std::int64_t trials, double confidence = 0.95);

/// True when p0 lies inside the Wilson interval of the observed count, i.e.
/// the score test at the given confidence does not reject p = p0.
bool wilson_contains(std::int64_t successes, std::int64_t trials, double p0, double confidence);

struct ProbabilityEstimate {
  double value = 0.0;
  std::int64_t successes = 0;
  std::int64_t trials = 0;
  Interval ci;
};
ProbabilityEstimate make_estimate(std::int64_t successes, std::int64_t trials, double confidence = 0.95);

/// Ascent bookkeeping pooled over trials (only the cyclic detector fills it).
struct AscentAudit {
  std::int64_t detections = 0;
  std::int64_t audited_steps = 0;
  std::int64_t monotone_violations = 0;
  double worst_relative_drop = 0.0;

  void merge(const AscentAudit& other);
};

struct StatisticSample {
  std::vector<double> values;
  AscentAudit audit;
};

/// Detector statistics on trials 0..ntrials−1 of `scenario` under `seed`.
StatisticSample collect_statistics(const DetectorSpec& detector, const ClutterScenario& scenario,
                                   std::int64_t ntrials, std::uint64_t seed, const HarnessConfig& cfg = {});

/// With m = round(n·pfa): the (m+1)-th largest statistic, so the rule
/// "statistic > threshold" has exactly m exceedances on the sample when the
/// statistics are distinct. Throws InsufficientTrials when m < 1.
double threshold_from_sample(std::vector<double> statistics, double pfa);

std::int64_t count_exceedances(const std::vector<double>& statistics, double threshold);

struct Calibration {
  double threshold = 0.0;
  std::int64_t trials = 0;
  std::int64_t exceedances = 0;
  AscentAudit audit;
};

Calibration calibrate_threshold(const DetectorSpec& detector, const ClutterScenario& scenario_h0, double pfa,
                                std::int64_t ntrials, std::uint64_t seed, const HarnessConfig& cfg = {});

struct CurvePoint {
  double axis_value = 0.0;
  ProbabilityEstimate estimate;
};

struct Curve {
  std::vector<CurvePoint> points;
  AscentAudit audit;
};

/// Pd at each SNR (dB) on the H1 scenario; every point reuses the same draws.
Curve estimate_pd(const DetectorSpec& detector, double threshold, const ClutterScenario& scenario_h1,
                  const std::vector<double>& snr_grid_db, std::int64_t ntrials, std::uint64_t seed,
                  const HarnessConfig& cfg = {});

enum class SweepAxis { Rho, Nu };

/// Empirical Pfa at each mismatched value of `axis`, clutter only.
Curve pfa_sensitivity(const DetectorSpec& detector, double threshold, const ClutterScenario& nominal,
                      SweepAxis axis, const std::vector<double>& values, std::int64_t ntrials,
                      std::uint64_t seed, const HarnessConfig& cfg = {}, double confidence = 0.95);

struct ConvergenceProfile {
  std::int64_t trials = 0;
  /// Mean |L(t) − L(t−1)| / |L(t−1)| for t = 1..max_iters.
  std::vector<double> mean_delta_h1;
  std::vector<double> mean_delta_h0;
  AscentAudit audit;
};

/// Runs both recursions on clutter-only data with a fixed iteration budget.
ConvergenceProfile convergence_profile(const ClutterScenario& scenario, std::int64_t ntrials, int max_iters,
                                       std::uint64_t seed, const HarnessConfig& cfg = {},
                                       CyclicOptions base = {});

struct SweepSpec {
  SweepAxis axis = SweepAxis::Rho;
  std::vector<double> values;
};

struct ConvergenceSpec {
  std::int64_t trials = 1000;
  int max_iters = 20;
};

struct ExperimentPlan {
  ClutterScenario scenario;
  std::vector<DetectorSpec> detectors;
  double pfa_target = 1e-2;
  std::int64_t calib_trials = 0;  // 0 means ceil(100 / pfa_target)
  std::int64_t pd_trials = 1000;
  std::vector<double> snr_grid_db;
  std::optional<SweepSpec> sweep;
  std::int64_t sweep_trials = 0;  // 0 means calib_trials
  std::optional<ConvergenceSpec> convergence;
  std::uint64_t master_seed = 1;
  CutTexture cut_mode = CutTexture::Design;

  std::int64_t effective_calib_trials() const;
  std::int64_t effective_sweep_trials() const;
  /// Throws InvalidArgument on violated invariants.
  void validate() const;
  /// Non-fatal issues, e.g. too few calibration trials for the target Pfa.
  std::vector<std::string> warnings() const;
};

struct DetectorReport {
  std::string name;
  std::optional<Calibration> calibration;
  std::vector<CurvePoint> pd_curve;
  std::vector<CurvePoint> pfa_sweep;
  AscentAudit audit;
  std::string error;  // empty unless this detector failed
};

struct McReport {
  std::vector<DetectorReport> detectors;
  std::optional<ConvergenceProfile> convergence;
  std::vector<std::string> warnings;
  std::optional<SweepAxis> sweep_axis;
  double elapsed_seconds = 0.0;
};

/// Stage seeds derived from the master seed; all detectors see the same draws.
enum class Stage : std::uint64_t { Calibration = 1, Pd = 2, Sweep = 3, Convergence = 4 };
std::uint64_t stage_seed(std::uint64_t master_seed, Stage stage);

McReport run_plan(const ExperimentPlan& plan, const HarnessConfig& cfg = {});

const char* to_string(SweepAxis axis);

}  // namespace hetclutter
