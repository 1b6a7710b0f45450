#include "hetclutter/mc_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "hetclutter/error.hpp"

namespace hetclutter {

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double confidence) {
  if (trials <= 0) return {0.0, 1.0};
  const boost::math::normal standard;
  const double z = boost::math::quantile(standard, 0.5 + confidence / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = (z / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  // The bounds are exactly 0 and 1 at the extremes; rounding would miss them.
  return {successes <= 0 ? 0.0 : std::max(0.0, center - half),
          successes >= trials ? 1.0 : std::min(1.0, center + half)};
}

bool wilson_contains(std::int64_t successes, std::int64_t trials, double p0, double confidence) {
  const Interval ci = wilson_interval(successes, trials, confidence);
  return ci.low <= p0 && p0 <= ci.high;
}

ProbabilityEstimate make_estimate(std::int64_t successes, std::int64_t trials, double confidence) {
  ProbabilityEstimate e;
  e.successes = successes;
  e.trials = trials;
  e.value = trials > 0 ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  e.ci = wilson_interval(successes, trials, confidence);
  // Guard the containment invariant against last-bit rounding at 0 and 1.
  e.ci.low = std::min(e.ci.low, e.value);
  e.ci.high = std::max(e.ci.high, e.value);
  return e;
}

void AscentAudit::merge(const AscentAudit& other) {
  detections += other.detections;
  audited_steps += other.audited_steps;
  monotone_violations += other.monotone_violations;
  worst_relative_drop = std::max(worst_relative_drop, other.worst_relative_drop);
}

namespace {

AscentAudit audit_of(const DetectorEval& eval) {
  AscentAudit a;
  a.detections = 1;
  a.audited_steps = eval.audited_steps;
  a.monotone_violations = eval.monotone_violations;
  a.worst_relative_drop = eval.worst_relative_drop;
  return a;
}

AscentAudit pool_audits(const std::vector<AscentAudit>& audits) {
  AscentAudit total;
  for (const auto& a : audits) total.merge(a);
  return total;
}

void require_trials(std::int64_t ntrials) {
  if (ntrials < 1) throw Error(ErrorCode::InvalidArgument, "need at least one trial");
}

}  // namespace

StatisticSample collect_statistics(const DetectorSpec& detector, const ClutterScenario& scenario,
                                   std::int64_t ntrials, std::uint64_t seed, const HarnessConfig& cfg) {
  require_trials(ntrials);
  const DatasetGenerator gen(scenario, cfg.cut_mode);
  StatisticSample out;
  out.values.resize(ntrials);
  std::vector<AscentAudit> audits(ntrials);
  parallel_for(ntrials, cfg.threads, [&](std::size_t i) {
    const DataSet data = gen.generate(seed, i);
    const DetectorEval eval = detector.evaluate(data.z, data.Z, data.v);
    out.values[i] = eval.statistic;
    audits[i] = audit_of(eval);
  });
  out.audit = pool_audits(audits);
  return out;
}

double threshold_from_sample(std::vector<double> statistics, double pfa) {
  if (!(pfa > 0.0 && pfa < 1.0)) throw Error(ErrorCode::InvalidArgument, "pfa must lie in (0, 1)");
  const auto n = static_cast<std::int64_t>(statistics.size());
  const auto m = static_cast<std::int64_t>(std::llround(static_cast<double>(n) * pfa));
  if (m < 1 || m >= n) {
    throw Error(ErrorCode::InsufficientTrials,
                std::to_string(n) + " trials give " + std::to_string(m) + " expected exceedances");
  }
  std::nth_element(statistics.begin(), statistics.begin() + m, statistics.end(), std::greater<>());
  return statistics[m];
}

std::int64_t count_exceedances(const std::vector<double>& statistics, double threshold) {
  return std::count_if(statistics.begin(), statistics.end(), [&](double s) { return s > threshold; });
}

Calibration calibrate_threshold(const DetectorSpec& detector, const ClutterScenario& scenario_h0, double pfa,
                                std::int64_t ntrials, std::uint64_t seed, const HarnessConfig& cfg) {
  ClutterScenario h0 = scenario_h0;
  h0.hypothesis = Hypothesis::H0;
  const StatisticSample sample = collect_statistics(detector, h0, ntrials, seed, cfg);
  Calibration out;
  out.threshold = threshold_from_sample(sample.values, pfa);
  out.trials = ntrials;
  out.exceedances = count_exceedances(sample.values, out.threshold);
  out.audit = sample.audit;
  return out;
}

Curve estimate_pd(const DetectorSpec& detector, double threshold, const ClutterScenario& scenario_h1,
                  const std::vector<double>& snr_grid_db, std::int64_t ntrials, std::uint64_t seed,
                  const HarnessConfig& cfg) {
  require_trials(ntrials);
  if (!std::isfinite(threshold)) throw Error(ErrorCode::InvalidArgument, "threshold must be finite");
  ClutterScenario clutter = scenario_h1;
  clutter.hypothesis = Hypothesis::H0;
  const DatasetGenerator gen(clutter, cfg.cut_mode);

  std::vector<cdouble> alphas;
  for (double snr_db : snr_grid_db) {
    alphas.push_back(alpha_from_snr(db_to_linear(snr_db), gen.steering(), gen.covariance(), clutter.sigma2));
  }
  const std::size_t points = snr_grid_db.size();
  std::vector<char> hits(ntrials * points, 0);
  std::vector<AscentAudit> audits(ntrials);
  parallel_for(ntrials, cfg.threads, [&](std::size_t i) {
    const DataSet data = gen.generate(seed, i);
    for (std::size_t p = 0; p < points; ++p) {
      const CVector z = data.z + alphas[p] * data.v;
      const DetectorEval eval = detector.evaluate(z, data.Z, data.v);
      hits[i * points + p] = eval.statistic > threshold;
      audits[i].merge(audit_of(eval));
    }
  });

  Curve curve;
  for (std::size_t p = 0; p < points; ++p) {
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < ntrials; ++i) count += hits[i * points + p];
    curve.points.push_back({snr_grid_db[p], make_estimate(count, ntrials)});
  }
  curve.audit = pool_audits(audits);
  return curve;
}

Curve pfa_sensitivity(const DetectorSpec& detector, double threshold, const ClutterScenario& nominal,
                      SweepAxis axis, const std::vector<double>& values, std::int64_t ntrials,
                      std::uint64_t seed, const HarnessConfig& cfg, double confidence) {
  require_trials(ntrials);
  Curve curve;
  for (double value : values) {
    ClutterScenario mismatched = nominal;
    mismatched.hypothesis = Hypothesis::H0;
    (axis == SweepAxis::Rho ? mismatched.rho : mismatched.nu) = value;
    const StatisticSample sample = collect_statistics(detector, mismatched, ntrials, seed, cfg);
    curve.points.push_back({value, make_estimate(count_exceedances(sample.values, threshold), ntrials, confidence)});
    curve.audit.merge(sample.audit);
  }
  return curve;
}

ConvergenceProfile convergence_profile(const ClutterScenario& scenario, std::int64_t ntrials, int max_iters,
                                       std::uint64_t seed, const HarnessConfig& cfg, CyclicOptions base) {
  require_trials(ntrials);
  base.max_iters = max_iters;
  base.epsilon = 0.0;
  base.validate();
  ClutterScenario h0 = scenario;
  h0.hypothesis = Hypothesis::H0;
  const DatasetGenerator gen(h0, cfg.cut_mode);

  std::vector<std::vector<double>> deltas_h1(ntrials), deltas_h0(ntrials);
  std::vector<AscentAudit> audits(ntrials);
  parallel_for(ntrials, cfg.threads, [&](std::size_t i) {
    const DataSet data = gen.generate(seed, i);
    const CycleState s1 = run_hypothesis(Hypothesis::H1, data.z, data.Z, data.v, base);
    const CycleState s0 = run_hypothesis(Hypothesis::H0, data.z, data.Z, data.v, base);
    deltas_h1[i] = s1.relative_changes();
    deltas_h0[i] = s0.relative_changes();
    for (const CycleState* s : {&s1, &s0}) {
      AscentAudit a;
      a.audited_steps = s->diagnostics.audited_steps;
      a.monotone_violations = s->diagnostics.monotone_violations;
      a.worst_relative_drop = s->diagnostics.worst_relative_drop;
      audits[i].merge(a);
    }
    audits[i].detections = 1;
  });

  ConvergenceProfile out;
  out.trials = ntrials;
  out.mean_delta_h1.assign(max_iters, 0.0);
  out.mean_delta_h0.assign(max_iters, 0.0);
  for (std::int64_t i = 0; i < ntrials; ++i) {
    for (int t = 0; t < max_iters; ++t) {
      out.mean_delta_h1[t] += deltas_h1[i][t];
      out.mean_delta_h0[t] += deltas_h0[i][t];
    }
  }
  for (int t = 0; t < max_iters; ++t) {
    out.mean_delta_h1[t] /= static_cast<double>(ntrials);
    out.mean_delta_h0[t] /= static_cast<double>(ntrials);
  }
  out.audit = pool_audits(audits);
  return out;
}

std::int64_t ExperimentPlan::effective_calib_trials() const {
  return calib_trials > 0 ? calib_trials : static_cast<std::int64_t>(std::ceil(100.0 / pfa_target - 1e-9));
}

std::int64_t ExperimentPlan::effective_sweep_trials() const {
  return sweep_trials > 0 ? sweep_trials : effective_calib_trials();
}

void ExperimentPlan::validate() const {
  scenario.validate();
  if (!(pfa_target > 0.0 && pfa_target < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "pfa_target must lie in (0, 1)");
  }
  if (calib_trials < 0 || pd_trials < 1 || sweep_trials < 0) {
    throw Error(ErrorCode::InvalidArgument, "trial counts must be positive");
  }
  if (detectors.empty()) {
    throw Error(ErrorCode::InvalidArgument, "plan has an empty detector list");
  }
  for (const auto& d : detectors) {
    if (d.name.empty()) throw Error(ErrorCode::InvalidArgument, "detector without a name");
    if (const auto* o = std::get_if<CyclicOptions>(&d.config)) o->validate();
    else std::get<CovEstimatorSpec>(d.config).validate();
  }
  if (sweep) {
    for (double value : sweep->values) {
      ClutterScenario s = scenario;
      (sweep->axis == SweepAxis::Rho ? s.rho : s.nu) = value;
      s.validate();
    }
  }
  if (convergence && (convergence->trials < 1 || convergence->max_iters < 1)) {
    throw Error(ErrorCode::InvalidArgument, "convergence study needs trials and iterations");
  }
}

std::vector<std::string> ExperimentPlan::warnings() const {
  std::vector<std::string> out;
  if (!detectors.empty() && static_cast<double>(effective_calib_trials()) * pfa_target < 10.0) {
    out.push_back("calib_trials * pfa_target < 10: threshold estimate will be very noisy");
  }
  return out;
}

std::uint64_t stage_seed(std::uint64_t master_seed, Stage stage) {
  return SplitMix64::mix(SplitMix64::mix(master_seed) ^ (static_cast<std::uint64_t>(stage) * SplitMix64::kGolden));
}

McReport run_plan(const ExperimentPlan& plan, const HarnessConfig& cfg) {
  plan.validate();
  const auto start = std::chrono::steady_clock::now();
  McReport report;
  report.warnings = plan.warnings();
  if (plan.sweep) report.sweep_axis = plan.sweep->axis;

  for (const DetectorSpec& detector : plan.detectors) {
    DetectorReport dr;
    dr.name = detector.name;
    try {
      dr.calibration = calibrate_threshold(detector, plan.scenario, plan.pfa_target, plan.effective_calib_trials(),
                                           stage_seed(plan.master_seed, Stage::Calibration), cfg);
      dr.audit.merge(dr.calibration->audit);
      const double threshold = dr.calibration->threshold;
      if (!plan.snr_grid_db.empty()) {
        ClutterScenario h1 = plan.scenario;
        h1.hypothesis = Hypothesis::H1;
        Curve pd = estimate_pd(detector, threshold, h1, plan.snr_grid_db, plan.pd_trials,
                               stage_seed(plan.master_seed, Stage::Pd), cfg);
        dr.pd_curve = std::move(pd.points);
        dr.audit.merge(pd.audit);
      }
      if (plan.sweep) {
        Curve sweep = pfa_sensitivity(detector, threshold, plan.scenario, plan.sweep->axis, plan.sweep->values,
                                      plan.effective_sweep_trials(), stage_seed(plan.master_seed, Stage::Sweep), cfg);
        dr.pfa_sweep = std::move(sweep.points);
        dr.audit.merge(sweep.audit);
      }
    } catch (const std::exception& e) {
      dr.error = e.what();
    }
    report.detectors.push_back(std::move(dr));
  }

  if (plan.convergence) {
    CyclicOptions base;
    for (const auto& d : plan.detectors) {
      if (const auto* o = std::get_if<CyclicOptions>(&d.config)) {
        base = *o;
        break;
      }
    }
    report.convergence = convergence_profile(plan.scenario, plan.convergence->trials, plan.convergence->max_iters,
                                             stage_seed(plan.master_seed, Stage::Convergence), cfg, base);
  }
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

const char* to_string(SweepAxis axis) { return axis == SweepAxis::Rho ? "rho" : "nu"; }

}  // namespace hetclutter
