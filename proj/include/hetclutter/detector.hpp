#pragma once

#include <string>
#include <variant>

#include "hetclutter/baselines.hpp"
#include "hetclutter/cyclic_glrt.hpp"

namespace hetclutter {

/// Statistic of one trial plus whatever ascent bookkeeping the detector did.
struct DetectorEval {
  double statistic = 0.0;
  int audited_steps = 0;
  int monotone_violations = 0;
  double worst_relative_drop = 0.0;
};

/// A named detector: the cyclic GLRT approximation or the NMF fed with one of
/// the covariance estimators.
struct DetectorSpec {
  std::string name;
  std::variant<CyclicOptions, CovEstimatorSpec> config;

  static DetectorSpec proposed(CyclicOptions opts = {}, std::string name = "proposed");
  static DetectorSpec nmf(CovEstimatorSpec spec, std::string name = "");

  bool is_proposed() const { return std::holds_alternative<CyclicOptions>(config); }

  DetectorEval evaluate(const CVector& z, const CMatrix& secondary, const CVector& v) const;
};

std::string default_detector_name(const CovEstimatorSpec& spec);

}  // namespace hetclutter
