#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "CLI11.hpp"
#include "hetclutter/error.hpp"
#include "hetclutter/radar_io.hpp"
#include "hetclutter/serialization.hpp"

namespace hetclutter::cli {

int run_selftest(std::ostream& out, unsigned threads);

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  unsigned threads = 0;
  double pfa = 1e-2;
  std::int64_t trials = 0;
  std::string preset;
  bool oracle = false;
};

struct DetectFlags {
  std::string scenario;
  std::string dataset;
  std::string save_dataset;
  int max_iters = 20;
  double epsilon = 0.0;
  std::string init_mode = "mp-pseudoinverse";
  bool naive = false;
  std::string cut_texture = "design";
};

struct CurvesFlags {
  std::string plan;
  std::int64_t pd_trials = 0;
  std::string cut_texture = "design";
};

struct RealdataFlags {
  std::string iq;
  std::int64_t cut_bin = 30;
  int secondary = 16;
  int guard = 2;
  int window = 8;
  int overlap = 5;
  std::string threshold_from = "cut";
  std::vector<double> snr_db{0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
  bool series = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "JSON file whose keys mirror these flags");
  sub->add_option("--seed", f.seed, "Master seed");
  sub->add_option("--out", f.out, "Output directory");
  sub->add_option("--threads", f.threads, "Worker threads (falls back to HETCLUTTER_THREADS)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--pfa", f.pfa, "Target probability of false alarm")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--trials", f.trials, "Monte Carlo trials for calibration and sweeps")
      ->check(CLI::PositiveNumber);
  sub->add_option("--preset", f.preset, "Experiment preset fig1..fig7");
  sub->add_flag("--oracle", f.oracle, "Cross-check against the naive path / audit every ascent step");
}

unsigned resolve_threads(const CommonFlags& f) {
  if (f.threads > 0) return f.threads;
  if (const char* env = std::getenv("HETCLUTTER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    throw UsageError("HETCLUTTER_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

std::string flag_value(const std::vector<std::string>& args, const std::string& flag) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind(flag + "=", 0) == 0) return args[i].substr(flag.size() + 1);
  }
  return {};
}

std::string scalar_to_arg(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw UsageError("config values must be scalars or arrays of scalars");
}

// Expands a JSON config into flags placed before the command-line ones; keys
// that also appear on the command line are skipped so the flag wins.
std::vector<std::string> config_args(CLI::App* sub, const std::string& path, const std::vector<std::string>& cmdline) {
  const json cfg = read_json_file(path);
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw(flag);
    if (opt == nullptr) throw UsageError("config: unknown key \"" + key + "\"");
    if (has_flag(cmdline, flag)) continue;
    if (opt->get_expected_min() == 0) {
      if (!value.is_boolean()) throw UsageError("config: \"" + key + "\" is a boolean flag");
      if (value.get<bool>()) out.push_back(flag);
      continue;
    }
    if (value.is_array()) {
      for (const auto& item : value) {
        out.push_back(flag);
        out.push_back(scalar_to_arg(item));
      }
    } else {
      out.push_back(flag);
      out.push_back(scalar_to_arg(value));
    }
  }
  return out;
}

void emit(const std::string& out_dir, const std::string& filename, const std::string& content, std::ostream& out) {
  if (out_dir.empty()) {
    out << content;
    return;
  }
  fs::create_directories(out_dir);
  write_file_atomic((fs::path(out_dir) / filename).string(), content);
}

double relative_deviation(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

double outcome_deviation(const DetectionOutcome& a, const DetectionOutcome& b) {
  double dev = relative_deviation(a.log_statistic, b.log_statistic);
  for (const auto& [x, y] : {std::pair{&a.h1, &b.h1}, std::pair{&a.h0, &b.h0}}) {
    for (std::size_t k = 0; k < x->gammas.size(); ++k) {
      dev = std::max(dev, relative_deviation(x->gammas[k], y->gammas[k]));
    }
  }
  const double alpha_scale = std::max(std::abs(a.h1.alpha), std::abs(b.h1.alpha));
  if (alpha_scale > 0.0) dev = std::max(dev, std::abs(a.h1.alpha - b.h1.alpha) / alpha_scale);
  return dev;
}

CyclicOptions options_from(const DetectFlags& d) {
  json j{{"max_iters", d.max_iters}, {"epsilon", d.epsilon}, {"init_mode", d.init_mode}, {"fast_path", !d.naive}};
  return cyclic_options_from_json(j);
}

int cmd_detect(const CommonFlags& c, const DetectFlags& d, std::ostream& out) {
  DataSet data;
  if (!d.dataset.empty() && !d.scenario.empty()) throw UsageError("give either --dataset or --scenario, not both");
  if (!d.dataset.empty()) {
    data = dataset_from_json(read_json_file(d.dataset));
  } else if (!d.scenario.empty() || !c.preset.empty()) {
    const ClutterScenario scenario =
        d.scenario.empty() ? preset_plan(c.preset).scenario : scenario_from_json(read_json_file(d.scenario));
    data = gen_dataset(scenario, c.seed, 0, cut_texture_from_string(d.cut_texture));
  } else {
    throw UsageError("detect needs --dataset, --scenario, or --preset");
  }
  CyclicOptions opts = options_from(d);
  opts.audit = c.oracle;

  const DetectionOutcome outcome = detect(data.z, data.Z, data.v, opts);
  json doc = to_json(outcome);
  bool oracle_failed = false;
  if (c.oracle) {
    CyclicOptions naive = opts;
    naive.fast_path = !opts.fast_path;
    const DetectionOutcome other = detect(data.z, data.Z, data.v, naive);
    const double dev = outcome_deviation(outcome, other);
    constexpr double kTolerance = 1e-8;
    oracle_failed = !(dev <= kTolerance);
    doc["oracle"] = {{"max_deviation", dev}, {"tolerance", kTolerance}, {"passed", !oracle_failed}};
  }
  if (!d.save_dataset.empty()) {
    write_file_atomic(d.save_dataset, dataset_to_json(data.z, data.Z, data.v).dump(2) + "\n");
  }
  emit(c.out, "outcome.json", doc.dump(2) + "\n", out);
  return oracle_failed ? kNumericalFailure : kSuccess;
}

int cmd_curves(const CommonFlags& c, const CurvesFlags& f, const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  if (!f.plan.empty() && !c.preset.empty()) throw UsageError("give either --plan or --preset, not both");
  ExperimentPlan plan;
  if (!f.plan.empty()) plan = plan_from_json(read_json_file(f.plan));
  else if (!c.preset.empty()) plan = preset_plan(c.preset);
  else throw UsageError("curves needs --plan or --preset");

  if (has_flag(args, "--seed")) plan.master_seed = c.seed;
  if (has_flag(args, "--pfa")) plan.pfa_target = c.pfa;
  if (has_flag(args, "--trials")) {
    plan.calib_trials = c.trials;
    plan.sweep_trials = c.trials;
    if (plan.convergence) plan.convergence->trials = c.trials;
  }
  if (f.pd_trials > 0) plan.pd_trials = f.pd_trials;
  if (has_flag(args, "--cut-texture")) plan.cut_mode = cut_texture_from_string(f.cut_texture);
  if (c.oracle) {
    for (auto& d : plan.detectors) {
      if (auto* o = std::get_if<CyclicOptions>(&d.config)) o->audit = true;
    }
  }
  if (plan.detectors.empty()) throw UsageError("plan has an empty detector list");
  plan.validate();
  for (const auto& w : plan.warnings()) err << "warning: " << w << "\n";

  HarnessConfig cfg;
  cfg.threads = resolve_threads(c);
  cfg.cut_mode = plan.cut_mode;
  const McReport report = run_plan(plan, cfg);

  const std::string dir = c.out.empty() ? "." : c.out;
  emit(dir, "report.json", to_json(report).dump(2) + "\n", out);
  if (!plan.snr_grid_db.empty()) emit(dir, "pd_curve.csv", pd_curve_csv(report), out);
  if (plan.sweep) emit(dir, "pfa_sweep.csv", pfa_sweep_csv(report), out);
  if (report.convergence) emit(dir, "convergence.csv", convergence_csv(*report.convergence), out);
  err << "curves: " << report.detectors.size() << " detector(s) in " << report.elapsed_seconds << " s\n";

  int status = kSuccess;
  for (const auto& d : report.detectors) {
    if (!d.error.empty()) {
      err << "detector " << d.name << " failed: " << d.error << "\n";
      status = kNumericalFailure;
    }
  }
  return status;
}

std::vector<double> statistics_for_bin(const DetectorSpec& det, const SnapshotSet& snaps, std::size_t bin, int k,
                                       int guard, unsigned threads, const CVector& v) {
  const auto pairs = build_cut_secondary(snaps, bin, k, guard);
  std::vector<double> stats(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t w) { stats[w] = det.evaluate(pairs[w].z, pairs[w].Z, v).statistic; });
  return stats;
}

int cmd_realdata(const CommonFlags& c, const RealdataFlags& f, const std::vector<std::string>& args,
                 std::ostream& out, std::ostream& err) {
  if (f.iq.empty()) throw UsageError("realdata needs --iq");
  if (f.threshold_from != "cut" && f.threshold_from != "white") {
    throw UsageError("--threshold-from must be \"cut\" or \"white\"");
  }
  const IqCube cube = load_iq(f.iq);
  if (f.cut_bin < 0 || static_cast<std::uint64_t>(f.cut_bin) >= cube.range_bins) {
    throw UsageError("cut bin " + std::to_string(f.cut_bin) + " outside 0.." + std::to_string(cube.range_bins - 1));
  }
  if (f.secondary < f.window) throw UsageError("--secondary must be at least --window");
  const SnapshotSet snaps = window_cpi(cube, f.window, f.overlap);
  const std::size_t cut = static_cast<std::size_t>(f.cut_bin);
  secondary_bins(cube.range_bins, cut, f.secondary, f.guard);  // validates the geometry up front

  const unsigned threads = resolve_threads(c);
  const CVector v = steering_vector(f.window, 0.0);
  const auto cut_pairs = build_cut_secondary(snaps, cut, f.secondary, f.guard);

  // SNR reference covariance: sample covariance of the CUT windows.
  CMatrix r_cut = CMatrix::Zero(f.window, f.window);
  for (const auto& p : cut_pairs) r_cut += p.z * p.z.adjoint();
  r_cut /= static_cast<double>(cut_pairs.size());

  std::vector<DetectorSpec> detectors = {DetectorSpec::proposed(),
                                         DetectorSpec::nmf({CovKind::Nscm, 3, CovInit::Nscm}),
                                         DetectorSpec::nmf({CovKind::Recursive, 3, CovInit::Nscm}),
                                         DetectorSpec::nmf({CovKind::PersymmetricRecursive, 3, CovInit::Nscm})};
  if (c.oracle) std::get<CyclicOptions>(detectors[0].config).audit = true;

  json report{{"iq", f.iq},
              {"pulses", cube.pulses},
              {"range_bins", cube.range_bins},
              {"windows_per_bin", snaps.window_count()},
              {"cut_bin", f.cut_bin},
              {"secondary_bins", secondary_bins(cube.range_bins, cut, f.secondary, f.guard)},
              {"pfa_target", c.pfa},
              {"threshold_from", f.threshold_from},
              {"detectors", json::array()}};
  std::ostringstream pfa_csv, pd_csv, series_csv;
  pfa_csv << "detector,axis,value,estimate,ci_low,ci_high,trials\r\n";
  pd_csv << "detector,axis,value,estimate,ci_low,ci_high,trials\r\n";
  series_csv << "detector,range_bin,window,statistic\r\n";

  for (const auto& det : detectors) {
    double threshold = 0.0;
    if (f.threshold_from == "cut") {
      threshold = threshold_from_sample(statistics_for_bin(det, snaps, cut, f.secondary, f.guard, threads, v), c.pfa);
    } else {
      ClutterScenario white;
      white.N = f.window;
      white.K = f.secondary;
      white.rho = 0.0;
      white.nu = std::numeric_limits<double>::infinity();
      white.sigma2 = 0.0;
      const std::int64_t n = has_flag(args, "--trials") ? c.trials : static_cast<std::int64_t>(std::ceil(100.0 / c.pfa));
      HarnessConfig cfg;
      cfg.threads = threads;
      threshold = calibrate_threshold(det, white, c.pfa, n, stage_seed(c.seed, Stage::Calibration), cfg).threshold;
    }

    json dj{{"name", det.name}, {"threshold", threshold}, {"per_bin_pfa", json::array()}, {"pd", json::array()}};
    for (std::size_t b = 0; b < cube.range_bins; ++b) {
      const auto stats = statistics_for_bin(det, snaps, b, f.secondary, f.guard, threads, v);
      const auto est = make_estimate(count_exceedances(stats, threshold), static_cast<std::int64_t>(stats.size()));
      dj["per_bin_pfa"].push_back({{"range_bin", b}, {"estimate", est.value}, {"ci_low", est.ci.low},
                                   {"ci_high", est.ci.high}, {"trials", est.trials}});
      pfa_csv << csv_field(det.name) << ",range_bin," << b << ',' << format_double(est.value) << ','
              << format_double(est.ci.low) << ',' << format_double(est.ci.high) << ',' << est.trials << "\r\n";
      if (f.series) {
        for (std::size_t w = 0; w < stats.size(); ++w) {
          series_csv << csv_field(det.name) << ',' << b << ',' << w << ',' << format_double(stats[w]) << "\r\n";
        }
      }
    }

    for (double snr_db : f.snr_db) {
      const cdouble alpha = alpha_from_snr(db_to_linear(snr_db), v, r_cut, 0.0);
      std::vector<char> hit(cut_pairs.size(), 0);
      parallel_for(cut_pairs.size(), threads, [&](std::size_t w) {
        const CVector z = cut_pairs[w].z + alpha * v;
        hit[w] = det.evaluate(z, cut_pairs[w].Z, v).statistic > threshold;
      });
      const auto est = make_estimate(std::count(hit.begin(), hit.end(), 1), static_cast<std::int64_t>(hit.size()));
      dj["pd"].push_back({{"snr_db", snr_db}, {"estimate", est.value}, {"ci_low", est.ci.low},
                          {"ci_high", est.ci.high}, {"trials", est.trials}});
      pd_csv << csv_field(det.name) << ",snr_db," << format_double(snr_db) << ',' << format_double(est.value) << ','
             << format_double(est.ci.low) << ',' << format_double(est.ci.high) << ',' << est.trials << "\r\n";
    }
    report["detectors"].push_back(dj);
  }

  const std::string dir = c.out.empty() ? "." : c.out;
  emit(dir, "realdata.json", report.dump(2) + "\n", out);
  emit(dir, "per_bin_pfa.csv", pfa_csv.str(), out);
  emit(dir, "pd_curve.csv", pd_csv.str(), out);
  if (f.series) emit(dir, "statistic_series.csv", series_csv.str(), out);
  err << "realdata: " << cube.range_bins << " bins x " << snaps.window_count() << " windows\n";
  return kSuccess;
}

std::vector<const char*> as_argv(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"hetclutter"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return argv;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw Error(ErrorCode::Io, "write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive detection in heterogeneous clutter: simulation, detection, and Monte Carlo analysis",
               "hetclutter"};
  app.require_subcommand(1);

  CommonFlags common;
  DetectFlags det;
  CurvesFlags cur;
  RealdataFlags real;

  CLI::App* detect_cmd = app.add_subcommand("detect", "Run the cyclic GLRT approximation on one data set");
  add_common(detect_cmd, common);
  detect_cmd->add_option("--scenario", det.scenario, "Scenario JSON; data drawn with --seed");
  detect_cmd->add_option("--dataset", det.dataset, "Data set JSON with z, Z, v");
  detect_cmd->add_option("--save-dataset", det.save_dataset, "Also write the data set used");
  detect_cmd->add_option("--max-iters", det.max_iters, "Iteration budget per hypothesis");
  detect_cmd->add_option("--epsilon", det.epsilon, "Relative log-likelihood stopping tolerance");
  detect_cmd->add_option("--init-mode", det.init_mode, "mp-pseudoinverse | power-ratio | unit");
  detect_cmd->add_flag("--naive", det.naive, "Refactor every B_h instead of rank-one sweeps");
  detect_cmd->add_option("--cut-texture", det.cut_texture, "design | sirp");

  CLI::App* curves_cmd = app.add_subcommand("curves", "Threshold calibration, Pd curves, Pfa sweeps, convergence");
  add_common(curves_cmd, common);
  curves_cmd->add_option("--plan", cur.plan, "Experiment plan JSON");
  curves_cmd->add_option("--pd-trials", cur.pd_trials, "Trials per Pd point")->check(CLI::PositiveNumber);
  curves_cmd->add_option("--cut-texture", cur.cut_texture, "design | sirp");

  CLI::App* real_cmd = app.add_subcommand("realdata", "Per-bin Pfa and Pd on a recorded IQCUBE01 file");
  add_common(real_cmd, common);
  real_cmd->add_option("--iq", real.iq, "IQCUBE01 file");
  real_cmd->add_option("--cut-bin", real.cut_bin, "Range bin under test");
  real_cmd->add_option("--secondary", real.secondary, "Secondary snapshots K");
  real_cmd->add_option("--guard", real.guard, "Guard bins per side");
  real_cmd->add_option("--window", real.window, "Pulses per snapshot N");
  real_cmd->add_option("--overlap", real.overlap, "Pulses shared by consecutive windows");
  real_cmd->add_option("--threshold-from", real.threshold_from, "cut | white");
  real_cmd->add_option("--snr-db", real.snr_db, "SNR grid for synthetic target injection");
  real_cmd->add_flag("--series", real.series, "Write the per-bin statistic series CSV");

  CLI::App* self_cmd = app.add_subcommand("selftest", "Run the built-in invariant checks");
  add_common(self_cmd, common);

  for (CLI::App* sub : {detect_cmd, curves_cmd, real_cmd, self_cmd}) {
    for (CLI::Option* opt : sub->get_options()) {
      if (opt->get_expected_min() > 0 && opt->get_expected_max() == 1) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
  }

  std::vector<std::string> merged = args;
  try {
    if (!args.empty()) {
      CLI::App* sub = nullptr;
      for (CLI::App* s : {detect_cmd, curves_cmd, real_cmd, self_cmd}) {
        if (s->get_name() == args[0]) sub = s;
      }
      const std::string config_path = flag_value(args, "--config");
      if (sub != nullptr && !config_path.empty()) {
        const std::vector<std::string> rest(args.begin() + 1, args.end());
        merged = {args[0]};
        for (auto& a : config_args(sub, config_path, rest)) merged.push_back(std::move(a));
        merged.insert(merged.end(), rest.begin(), rest.end());
      }
    }
    auto argv = as_argv(merged);
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kSuccess : kUsage;
    }

    if (detect_cmd->parsed()) return cmd_detect(common, det, out);
    if (curves_cmd->parsed()) return cmd_curves(common, cur, merged, out, err);
    if (real_cmd->parsed()) return cmd_realdata(common, real, merged, out, err);
    if (self_cmd->parsed()) return run_selftest(out, resolve_threads(common));
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.numerical() ? kNumericalFailure : kUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace hetclutter::cli
