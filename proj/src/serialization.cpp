#include "hetclutter/serialization.hpp"

#include <charconv>
#include <initializer_list>
#include <sstream>

#include "hetclutter/error.hpp"

namespace hetclutter {

namespace {

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a JSON object");
}

void reject_unknown_keys(const json& j, const char* what, std::initializer_list<const char*> allowed) {
  require_object(j, what);
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorCode::InvalidArgument, std::string(what) + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("key \"") + key + "\": " + e.what());
  }
}

// Integers must be given as JSON integers, not 8.0 or "8".
template <typename T>
void read_int(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_integer()) {
    throw Error(ErrorCode::InvalidArgument, std::string("key \"") + key + "\" must be an integer");
  }
  read(j, key, out);
}

void read_double(const json& j, const char* key, double& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number()) throw Error(ErrorCode::InvalidArgument, std::string("key \"") + key + "\" must be a number");
  out = it->get<double>();
}

json complex_to_json(cdouble c) { return json::array({c.real(), c.imag()}); }

cdouble complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::InvalidArgument, "complex values are [re, im] pairs");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json vector_to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

CVector vector_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::InvalidArgument, "vectors are nonempty arrays");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

json estimate_to_json(const char* axis_name, const CurvePoint& p) {
  return json{{axis_name, p.axis_value},        {"estimate", p.estimate.value},
              {"successes", p.estimate.successes}, {"trials", p.estimate.trials},
              {"ci_low", p.estimate.ci.low},     {"ci_high", p.estimate.ci.high}};
}

json audit_to_json(const AscentAudit& a) {
  return json{{"detections", a.detections},
              {"audited_steps", a.audited_steps},
              {"monotone_violations", a.monotone_violations},
              {"worst_relative_drop", a.worst_relative_drop}};
}

void append_rows(std::ostringstream& out, const std::string& detector, const char* axis,
                 const std::vector<CurvePoint>& points) {
  for (const auto& p : points) {
    out << csv_field(detector) << ',' << axis << ',' << format_double(p.axis_value) << ','
        << format_double(p.estimate.value) << ',' << format_double(p.estimate.ci.low) << ','
        << format_double(p.estimate.ci.high) << ',' << p.estimate.trials << "\r\n";
  }
}

constexpr const char* kCurveHeader = "detector,axis,value,estimate,ci_low,ci_high,trials\r\n";

}  // namespace

const char* to_string(InitMode m) {
  switch (m) {
    case InitMode::MpPseudoinverse: return "mp-pseudoinverse";
    case InitMode::PowerRatio: return "power-ratio";
    case InitMode::Unit: return "unit";
  }
  return "?";
}

const char* to_string(CovKind k) {
  switch (k) {
    case CovKind::Scm: return "scm";
    case CovKind::Nscm: return "nscm";
    case CovKind::Recursive: return "recursive";
    case CovKind::PersymmetricRecursive: return "persymmetric-recursive";
  }
  return "?";
}

const char* to_string(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

const char* to_string(CutTexture c) { return c == CutTexture::Design ? "design" : "sirp"; }

CutTexture cut_texture_from_string(const std::string& s) {
  if (s == "design") return CutTexture::Design;
  if (s == "sirp") return CutTexture::Sirp;
  throw Error(ErrorCode::InvalidArgument, "cut_texture must be \"design\" or \"sirp\"");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

json to_json(const ClutterScenario& s) {
  return json{{"N", s.N},           {"K", s.K},          {"rho", s.rho},
              {"nu", s.nu},         {"sigma2", s.sigma2}, {"doppler", s.doppler},
              {"snr_db", s.snr_db}, {"hypothesis", to_string(s.hypothesis)}};
}

ClutterScenario scenario_from_json(const json& j) {
  reject_unknown_keys(j, "scenario", {"N", "K", "rho", "nu", "sigma2", "doppler", "snr_db", "hypothesis"});
  ClutterScenario s;
  read_int(j, "N", s.N);
  read_int(j, "K", s.K);
  read_double(j, "rho", s.rho);
  read_double(j, "nu", s.nu);
  read_double(j, "sigma2", s.sigma2);
  read_double(j, "doppler", s.doppler);
  read_double(j, "snr_db", s.snr_db);
  std::string hyp = to_string(s.hypothesis);
  read(j, "hypothesis", hyp);
  if (hyp == "H0") s.hypothesis = Hypothesis::H0;
  else if (hyp == "H1") s.hypothesis = Hypothesis::H1;
  else throw Error(ErrorCode::InvalidArgument, "hypothesis must be \"H0\" or \"H1\"");
  s.validate();
  return s;
}

json to_json(const CyclicOptions& o) {
  return json{{"max_iters", o.max_iters},
              {"epsilon", o.epsilon},
              {"init_mode", to_string(o.init_mode)},
              {"gamma_clamp", {o.gamma_clamp[0], o.gamma_clamp[1]}},
              {"fast_path", o.fast_path},
              {"audit", o.audit}};
}

CyclicOptions cyclic_options_from_json(const json& j) {
  reject_unknown_keys(j, "options", {"max_iters", "epsilon", "init_mode", "gamma_clamp", "fast_path", "audit"});
  CyclicOptions o;
  read_int(j, "max_iters", o.max_iters);
  read_double(j, "epsilon", o.epsilon);
  std::string mode = to_string(o.init_mode);
  read(j, "init_mode", mode);
  if (mode == "mp-pseudoinverse") o.init_mode = InitMode::MpPseudoinverse;
  else if (mode == "power-ratio") o.init_mode = InitMode::PowerRatio;
  else if (mode == "unit") o.init_mode = InitMode::Unit;
  else throw Error(ErrorCode::InvalidArgument, "unknown init_mode \"" + mode + "\"");
  std::vector<double> clamp{o.gamma_clamp[0], o.gamma_clamp[1]};
  read(j, "gamma_clamp", clamp);
  if (clamp.size() != 2) throw Error(ErrorCode::InvalidArgument, "gamma_clamp is a [low, high] pair");
  o.gamma_clamp = {clamp[0], clamp[1]};
  read(j, "fast_path", o.fast_path);
  read(j, "audit", o.audit);
  o.validate();
  return o;
}

json to_json(const CovEstimatorSpec& s) {
  return json{{"kind", to_string(s.kind)},
              {"iterations", s.iterations},
              {"init", s.init == CovInit::Nscm ? "nscm" : "identity"}};
}

CovEstimatorSpec cov_spec_from_json(const json& j) {
  reject_unknown_keys(j, "estimator", {"kind", "iterations", "init"});
  CovEstimatorSpec s;
  std::string kind = to_string(s.kind);
  read(j, "kind", kind);
  if (kind == "scm") s.kind = CovKind::Scm;
  else if (kind == "nscm") s.kind = CovKind::Nscm;
  else if (kind == "recursive") s.kind = CovKind::Recursive;
  else if (kind == "persymmetric-recursive") s.kind = CovKind::PersymmetricRecursive;
  else throw Error(ErrorCode::InvalidArgument, "unknown estimator kind \"" + kind + "\"");
  read_int(j, "iterations", s.iterations);
  std::string init = "nscm";
  read(j, "init", init);
  if (init == "nscm") s.init = CovInit::Nscm;
  else if (init == "identity") s.init = CovInit::Identity;
  else throw Error(ErrorCode::InvalidArgument, "estimator init must be \"nscm\" or \"identity\"");
  s.validate();
  return s;
}

json to_json(const DetectorSpec& d) {
  if (const auto* o = std::get_if<CyclicOptions>(&d.config)) {
    return json{{"name", d.name}, {"type", "proposed"}, {"options", to_json(*o)}};
  }
  return json{{"name", d.name}, {"type", "nmf"}, {"estimator", to_json(std::get<CovEstimatorSpec>(d.config))}};
}

DetectorSpec detector_from_json(const json& j) {
  reject_unknown_keys(j, "detector", {"name", "type", "options", "estimator"});
  std::string type;
  read(j, "type", type);
  std::string name;
  read(j, "name", name);
  if (type == "proposed") {
    if (j.contains("estimator")) throw Error(ErrorCode::InvalidArgument, "proposed detector takes no estimator");
    const CyclicOptions o = j.contains("options") ? cyclic_options_from_json(j["options"]) : CyclicOptions{};
    return DetectorSpec::proposed(o, name.empty() ? "proposed" : name);
  }
  if (type == "nmf") {
    if (j.contains("options")) throw Error(ErrorCode::InvalidArgument, "nmf detector takes no options");
    const CovEstimatorSpec s = j.contains("estimator") ? cov_spec_from_json(j["estimator"]) : CovEstimatorSpec{};
    return DetectorSpec::nmf(s, name);
  }
  throw Error(ErrorCode::InvalidArgument, "detector type must be \"proposed\" or \"nmf\"");
}

json to_json(const CycleState& s) {
  const auto& d = s.diagnostics;
  return json{{"hypothesis", to_string(s.hypothesis)},
              {"alpha", complex_to_json(s.alpha)},
              {"gammas", s.gammas},
              {"loglik_trace", s.loglik_trace},
              {"iterations", s.iterations},
              {"delta_loglik_final", s.delta_loglik_final},
              {"converged", s.converged},
              {"diagnostics",
               {{"clamp_events", d.clamp_events},
                {"fast_path_fallbacks", d.fast_path_fallbacks},
                {"audited_steps", d.audited_steps},
                {"monotone_violations", d.monotone_violations},
                {"worst_relative_drop", d.worst_relative_drop}}}};
}

json to_json(const DetectionOutcome& o) {
  return json{{"log_statistic", o.log_statistic},
              {"converged", o.converged},
              {"iterations_used", {{"h1", o.h1.iterations}, {"h0", o.h0.iterations}}},
              {"delta_loglik_final", {{"h1", o.h1.delta_loglik_final}, {"h0", o.h0.delta_loglik_final}}},
              {"estimates", {{"h1", to_json(o.h1)}, {"h0", to_json(o.h0)}}}};
}

json dataset_to_json(const CVector& z, const CMatrix& secondary, const CVector& v) {
  json cols = json::array();
  for (Eigen::Index k = 0; k < secondary.cols(); ++k) cols.push_back(vector_to_json(secondary.col(k)));
  return json{{"z", vector_to_json(z)}, {"Z", cols}, {"v", vector_to_json(v)}};
}

DataSet dataset_from_json(const json& j) {
  reject_unknown_keys(j, "dataset", {"z", "Z", "v"});
  for (const char* key : {"z", "Z", "v"}) {
    if (!j.contains(key)) throw Error(ErrorCode::InvalidArgument, std::string("dataset needs \"") + key + "\"");
  }
  DataSet d;
  d.z = vector_from_json(j["z"]);
  d.v = vector_from_json(j["v"]);
  const json& cols = j["Z"];
  if (!cols.is_array() || cols.empty()) throw Error(ErrorCode::InvalidArgument, "Z is a nonempty array of vectors");
  d.Z.resize(d.z.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const CVector c = vector_from_json(cols[k]);
    if (c.size() != d.z.size()) throw Error(ErrorCode::InvalidArgument, "every secondary vector needs length N");
    d.Z.col(static_cast<Eigen::Index>(k)) = c;
  }
  if (d.v.size() != d.z.size()) throw Error(ErrorCode::InvalidArgument, "v needs length N");
  auto finite = [](const auto& m) { return m.allFinite(); };
  if (!finite(d.z) || !finite(d.Z) || !finite(d.v)) throw Error(ErrorCode::InvalidArgument, "nonfinite sample");
  return d;
}

json to_json(const ExperimentPlan& p) {
  json detectors = json::array();
  for (const auto& d : p.detectors) detectors.push_back(to_json(d));
  json j{{"scenario", to_json(p.scenario)},
         {"detectors", detectors},
         {"pfa_target", p.pfa_target},
         {"calib_trials", p.calib_trials},
         {"pd_trials", p.pd_trials},
         {"snr_grid_db", p.snr_grid_db},
         {"sweep_trials", p.sweep_trials},
         {"master_seed", p.master_seed},
         {"cut_texture", to_string(p.cut_mode)}};
  if (p.sweep) j["sweep"] = {{"axis", to_string(p.sweep->axis)}, {"values", p.sweep->values}};
  if (p.convergence) j["convergence"] = {{"trials", p.convergence->trials}, {"max_iters", p.convergence->max_iters}};
  return j;
}

ExperimentPlan plan_from_json(const json& j) {
  reject_unknown_keys(j, "plan",
                      {"scenario", "detectors", "pfa_target", "calib_trials", "pd_trials", "snr_grid_db", "sweep",
                       "sweep_trials", "convergence", "master_seed", "cut_texture"});
  ExperimentPlan p;
  if (j.contains("scenario")) p.scenario = scenario_from_json(j["scenario"]);
  if (j.contains("detectors")) {
    if (!j["detectors"].is_array()) throw Error(ErrorCode::InvalidArgument, "detectors must be an array");
    for (const auto& d : j["detectors"]) p.detectors.push_back(detector_from_json(d));
  }
  read_double(j, "pfa_target", p.pfa_target);
  read_int(j, "calib_trials", p.calib_trials);
  read_int(j, "pd_trials", p.pd_trials);
  read(j, "snr_grid_db", p.snr_grid_db);
  read_int(j, "sweep_trials", p.sweep_trials);
  read_int(j, "master_seed", p.master_seed);
  if (j.contains("cut_texture")) {
    std::string mode;
    read(j, "cut_texture", mode);
    p.cut_mode = cut_texture_from_string(mode);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    reject_unknown_keys(s, "sweep", {"axis", "values"});
    SweepSpec sweep;
    std::string axis;
    read(s, "axis", axis);
    if (axis == "rho") sweep.axis = SweepAxis::Rho;
    else if (axis == "nu") sweep.axis = SweepAxis::Nu;
    else throw Error(ErrorCode::InvalidArgument, "sweep axis must be \"rho\" or \"nu\"");
    read(s, "values", sweep.values);
    p.sweep = sweep;
  }
  if (j.contains("convergence")) {
    const json& c = j["convergence"];
    reject_unknown_keys(c, "convergence", {"trials", "max_iters"});
    ConvergenceSpec conv;
    read_int(c, "trials", conv.trials);
    read_int(c, "max_iters", conv.max_iters);
    p.convergence = conv;
  }
  p.validate();
  return p;
}

json to_json(const McReport& r, bool include_timing) {
  json detectors = json::array();
  for (const auto& d : r.detectors) {
    json dj{{"name", d.name}};
    if (d.calibration) {
      dj["threshold"] = d.calibration->threshold;
      dj["calibration"] = {{"trials", d.calibration->trials}, {"exceedances", d.calibration->exceedances}};
    }
    json pd = json::array();
    for (const auto& p : d.pd_curve) pd.push_back(estimate_to_json("snr_db", p));
    json sweep = json::array();
    for (const auto& p : d.pfa_sweep) sweep.push_back(estimate_to_json("value", p));
    dj["pd_curve"] = pd;
    dj["pfa_sweep"] = sweep;
    dj["audit"] = audit_to_json(d.audit);
    if (!d.error.empty()) dj["error"] = d.error;
    detectors.push_back(dj);
  }
  json j{{"detectors", detectors}, {"warnings", r.warnings}};
  if (r.sweep_axis) j["sweep_axis"] = to_string(*r.sweep_axis);
  if (r.convergence) {
    j["convergence"] = {{"trials", r.convergence->trials},
                        {"mean_delta_h1", r.convergence->mean_delta_h1},
                        {"mean_delta_h0", r.convergence->mean_delta_h0},
                        {"audit", audit_to_json(r.convergence->audit)}};
  }
  if (include_timing) j["timing"] = {{"elapsed_seconds", r.elapsed_seconds}};
  return j;
}

std::string pd_curve_csv(const McReport& r) {
  std::ostringstream out;
  out << kCurveHeader;
  for (const auto& d : r.detectors) append_rows(out, d.name, "snr_db", d.pd_curve);
  return out.str();
}

std::string pfa_sweep_csv(const McReport& r) {
  std::ostringstream out;
  out << kCurveHeader;
  const char* axis = r.sweep_axis ? to_string(*r.sweep_axis) : "value";
  for (const auto& d : r.detectors) append_rows(out, d.name, axis, d.pfa_sweep);
  return out.str();
}

std::string convergence_csv(const ConvergenceProfile& profile) {
  std::ostringstream out;
  out << "iteration,mean_delta_h1,mean_delta_h0,trials\r\n";
  for (std::size_t t = 0; t < profile.mean_delta_h1.size(); ++t) {
    out << (t + 1) << ',' << format_double(profile.mean_delta_h1[t]) << ','
        << format_double(profile.mean_delta_h0[t]) << ',' << profile.trials << "\r\n";
  }
  return out.str();
}

}  // namespace hetclutter
