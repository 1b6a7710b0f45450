#include <cmath>
#include <functional>
#include <random>
#include <ostream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "hetclutter/baselines.hpp"
#include "hetclutter/clutter_sim.hpp"
#include "hetclutter/cyclic_glrt.hpp"
#include "hetclutter/radar_io.hpp"

namespace hetclutter::cli {

namespace {

struct Check {
  std::string name;
  std::function<bool()> run;
};

DataSet sample(std::uint64_t trial, Hypothesis h = Hypothesis::H0) {
  ClutterScenario s;
  s.hypothesis = h;
  s.snr_db = 10.0;
  return gen_dataset(s, 0x5e1f7e57ULL, trial);
}

double uniform(SplitMix64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
double normal(SplitMix64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

bool texture_scaling_invariance() {
  SplitMix64 rng(11);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const DataSet d = sample(t);
    CMatrix scaled = d.Z;
    for (Eigen::Index k = 0; k < scaled.cols(); ++k) {
      const double mag = std::pow(10.0, 6.0 * (uniform(rng) - 0.5));
      scaled.col(k) *= std::polar(mag, 2.0 * M_PI * uniform(rng));
    }
    if (rel(detect(d.z, d.Z, d.v).log_statistic, detect(d.z, scaled, d.v).log_statistic) > 1e-9) return false;
  }
  return true;
}

bool unitary_invariance() {
  SplitMix64 rng(12);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const DataSet d = sample(t, Hypothesis::H1);
    CMatrix g(d.z.size(), d.z.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = cdouble(normal(rng), normal(rng));
    const CMatrix q = Eigen::HouseholderQR<CMatrix>(g).householderQ();
    const double a = detect(d.z, d.Z, d.v).log_statistic;
    const double b = detect(q * d.z, q * d.Z, q * d.v).log_statistic;
    if (rel(a, b) > 1e-9) return false;
  }
  return true;
}

bool ascent_monotone() {
  CyclicOptions opts;
  opts.audit = true;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const DataSet d = sample(t, Hypothesis::H1);
    const DetectionOutcome o = detect(d.z, d.Z, d.v, opts);
    if (o.h1.diagnostics.monotone_violations + o.h0.diagnostics.monotone_violations > 0) return false;
  }
  return true;
}

bool fast_matches_naive() {
  CyclicOptions naive;
  naive.fast_path = false;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const DataSet d = sample(t, Hypothesis::H1);
    if (rel(detect(d.z, d.Z, d.v).log_statistic, detect(d.z, d.Z, d.v, naive).log_statistic) > 1e-8) return false;
  }
  return true;
}

bool estimator_properties() {
  for (std::uint64_t t = 0; t < 20; ++t) {
    const DataSet d = sample(t);
    const CMatrix m = nscm(d.Z);
    if (std::abs(m.trace().real() - static_cast<double>(d.Z.rows())) > 1e-12) return false;
    const CMatrix p = persymmetrize(recursive_fp(d.Z, 3));
    if ((persymmetrize(p) - p).norm() > 1e-14 * p.norm()) return false;
    const double s = nmf_statistic(d.z, d.v, m);
    if (!(s >= 0.0 && s <= 1.0)) return false;
  }
  return true;
}

bool iq_round_trip() {
  SplitMix64 rng(13);
  for (std::uint64_t p : {1u, 3u, 17u}) {
    for (std::uint64_t b : {1u, 5u}) {
      IqCube cube(p, b);
      for (auto& s : cube.samples) s = {static_cast<float>(normal(rng)), static_cast<float>(normal(rng))};
      cube.metadata["source"] = "selftest";
      const IqCube back = decode_iq(encode_iq(cube));
      if (back.samples != cube.samples || back.metadata != cube.metadata) return false;
    }
  }
  return window_count(30720, 8, 5) == 10238;
}

}  // namespace

int run_selftest(std::ostream& out, unsigned /*threads*/) {
  const std::vector<Check> checks = {
      {"texture scaling invariance", texture_scaling_invariance},
      {"unitary invariance", unitary_invariance},
      {"coordinate ascent monotone", ascent_monotone},
      {"rank-one sweep matches refactorization", fast_matches_naive},
      {"covariance estimator properties", estimator_properties},
      {"IQCUBE01 round trip and window count", iq_round_trip},
  };
  int failures = 0;
  for (const auto& c : checks) {
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      out << "  (" << e.what() << ")\n";
    }
    out << (ok ? "PASS " : "FAIL ") << c.name << "\n";
    failures += ok ? 0 : 1;
  }
  out << (failures == 0 ? "selftest passed\n" : "selftest failed\n");
  return failures == 0 ? kSuccess : kNumericalFailure;
}

}  // namespace hetclutter::cli
