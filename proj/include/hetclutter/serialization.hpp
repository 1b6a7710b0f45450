#pragma once

// JSON and CSV forms of the public types. Readers reject unknown keys and
// report type errors as InvalidArgument; absent keys keep their defaults.

#include <string>

#include "json.hpp"

#include "hetclutter/baselines.hpp"
#include "hetclutter/clutter_sim.hpp"
#include "hetclutter/cyclic_glrt.hpp"
#include "hetclutter/mc_harness.hpp"

namespace hetclutter {

using json = nlohmann::json;

json to_json(const ClutterScenario& s);
ClutterScenario scenario_from_json(const json& j);

json to_json(const CyclicOptions& o);
CyclicOptions cyclic_options_from_json(const json& j);

json to_json(const CovEstimatorSpec& s);
CovEstimatorSpec cov_spec_from_json(const json& j);

json to_json(const DetectorSpec& d);
DetectorSpec detector_from_json(const json& j);

json to_json(const CycleState& s);
json to_json(const DetectionOutcome& o);

/// {"z": [[re, im], ...], "Z": [[[re, im], ...] per secondary], "v": [...]}.
json dataset_to_json(const CVector& z, const CMatrix& secondary, const CVector& v);
DataSet dataset_from_json(const json& j);

json to_json(const ExperimentPlan& p);
ExperimentPlan plan_from_json(const json& j);

/// Report document; timing is included only when asked, so that reports from
/// identical plans compare byte for byte.
json to_json(const McReport& r, bool include_timing = false);

/// RFC-4180 tables: detector,axis,value,estimate,ci_low,ci_high,trials.
std::string pd_curve_csv(const McReport& r);
std::string pfa_sweep_csv(const McReport& r);
/// iteration,mean_delta_h1,mean_delta_h0,trials.
std::string convergence_csv(const ConvergenceProfile& profile);

/// Quotes a CSV field when it contains a comma, quote, or line break.
std::string csv_field(const std::string& s);
/// Shortest round-trip decimal form, "." separator.
std::string format_double(double x);

const char* to_string(InitMode m);
const char* to_string(CovKind k);
const char* to_string(Hypothesis h);
const char* to_string(CutTexture c);
CutTexture cut_texture_from_string(const std::string& s);

}  // namespace hetclutter
