#include "hetclutter/detector.hpp"

#include <algorithm>

namespace hetclutter {

DetectorSpec DetectorSpec::proposed(CyclicOptions opts, std::string name) {
  return DetectorSpec{std::move(name), opts};
}

DetectorSpec DetectorSpec::nmf(CovEstimatorSpec spec, std::string name) {
  if (name.empty()) name = default_detector_name(spec);
  return DetectorSpec{std::move(name), spec};
}

std::string default_detector_name(const CovEstimatorSpec& spec) {
  switch (spec.kind) {
    case CovKind::Scm: return "nmf-scm";
    case CovKind::Nscm: return "nmf-nscm";
    case CovKind::Recursive: return "nmf-recursive";
    case CovKind::PersymmetricRecursive: return "nmf-persymmetric";
  }
  return "nmf";
}

DetectorEval DetectorSpec::evaluate(const CVector& z, const CMatrix& secondary, const CVector& v) const {
  DetectorEval out;
  if (const auto* opts = std::get_if<CyclicOptions>(&config)) {
    const DetectionOutcome outcome = detect(z, secondary, v, *opts);
    out.statistic = outcome.log_statistic;
    for (const CycleState* s : {&outcome.h1, &outcome.h0}) {
      out.audited_steps += s->diagnostics.audited_steps;
      out.monotone_violations += s->diagnostics.monotone_violations;
      out.worst_relative_drop = std::max(out.worst_relative_drop, s->diagnostics.worst_relative_drop);
    }
  } else {
    const auto& spec = std::get<CovEstimatorSpec>(config);
    out.statistic = nmf_statistic(z, v, estimate_covariance(secondary, spec));
  }
  return out;
}

}  // namespace hetclutter
