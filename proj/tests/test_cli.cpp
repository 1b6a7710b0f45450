#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "hetclutter/radar_io.hpp"
#include "hetclutter/serialization.hpp"
#include "support.hpp"

using namespace hetclutter;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("hetclutter_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
  const Result help = call({"detect", "--help"});
  CHECK(help.code == 0);
  for (const char* flag : {"--seed", "--out", "--threads", "--pfa", "--trials", "--config", "--preset", "--oracle"}) {
    CHECK(help.out.find(flag) != std::string::npos);
  }
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"detect", "--no-such-flag"}).code == 2);
  CHECK(call({"detect"}).code == 2);
  CHECK(call({"curves", "--preset", "fig9"}).code == 2);
  CHECK(call({"curves", "--preset", "fig1", "--pfa", "2"}).code == 2);
}

TEST_CASE("detect is deterministic and writes nothing on bad input") {
  TempDir dir("detect");
  write_text(dir.file("s.json"), R"({"N": 4, "K": 8, "rho": 0.9, "nu": 1.0})");
  const Result a = call({"detect", "--scenario", dir.file("s.json"), "--seed", "7"});
  const Result b = call({"detect", "--scenario", dir.file("s.json"), "--seed", "7"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const json doc = json::parse(a.out);
  for (const char* key : {"log_statistic", "converged", "iterations_used", "delta_loglik_final", "estimates"}) {
    CHECK(doc.contains(key));
  }
  CHECK(doc["estimates"]["h1"]["gammas"].size() == 8);
  CHECK(call({"detect", "--scenario", dir.file("s.json"), "--seed", "8"}).out != a.out);

  write_text(dir.file("bad.json"), R"({"N": 4, "K": 8, "rho": 0.9, "nu": 1.0, "colour": 3})");
  const fs::path out = dir.path / "bad_out";
  CHECK(call({"detect", "--scenario", dir.file("bad.json"), "--out", out.string()}).code == 2);
  CHECK_FALSE(fs::exists(out / "outcome.json"));
  write_text(dir.file("broken.json"), "{\"N\": ");
  CHECK(call({"detect", "--scenario", dir.file("broken.json")}).code == 2);
  CHECK(call({"detect", "--scenario", dir.file("missing.json")}).code == 2);
}

TEST_CASE("detect on a saved data set reproduces the outcome") {
  TempDir dir("dataset");
  const Result a = call({"detect", "--preset", "fig2", "--seed", "3", "--save-dataset", dir.file("d.json"),
                         "--out", dir.path.string()});
  REQUIRE(a.code == 0);
  const Result b = call({"detect", "--dataset", dir.file("d.json")});
  REQUIRE(b.code == 0);
  CHECK(b.out == read_text(dir.file("outcome.json")));
  const Result naive = call({"detect", "--dataset", dir.file("d.json"), "--naive"});
  CHECK(json::parse(naive.out)["log_statistic"].get<double>() ==
        doctest::Approx(json::parse(b.out)["log_statistic"].get<double>()).epsilon(1e-8));
}

TEST_CASE("detect --oracle cross-checks both paths") {
  const Result r = call({"detect", "--preset", "fig2", "--seed", "11", "--oracle"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["oracle"]["passed"] == true);
  CHECK(doc["oracle"]["max_deviation"].get<double>() <= 1e-8);
  CHECK(doc["estimates"]["h1"]["diagnostics"]["audited_steps"].get<int>() > 0);
  CHECK(doc["estimates"]["h1"]["diagnostics"]["monotone_violations"] == 0);
}

TEST_CASE("config file merges under command-line flags") {
  TempDir dir("config");
  write_text(dir.file("s.json"), R"({"N": 4, "K": 8})");
  write_text(dir.file("cfg.json"), R"({"seed": 5, "max-iters": 3})");
  const Result with_cfg = call({"detect", "--scenario", dir.file("s.json"), "--config", dir.file("cfg.json")});
  const Result explicit_flags = call({"detect", "--scenario", dir.file("s.json"), "--seed", "5", "--max-iters", "3"});
  REQUIRE(with_cfg.code == 0);
  CHECK(with_cfg.out == explicit_flags.out);
  const Result override_seed =
      call({"detect", "--scenario", dir.file("s.json"), "--config", dir.file("cfg.json"), "--seed", "6"});
  CHECK(override_seed.out == call({"detect", "--scenario", dir.file("s.json"), "--seed", "6", "--max-iters", "3"}).out);

  write_text(dir.file("unknown.json"), R"({"sed": 5})");
  CHECK(call({"detect", "--scenario", dir.file("s.json"), "--config", dir.file("unknown.json")}).code == 2);
}

TEST_CASE("curves: convergence preset and plan errors") {
  TempDir dir("curves");
  const Result r = call({"curves", "--preset", "fig1", "--trials", "300", "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const std::string csv = read_text(dir.file("convergence.csv"));
  CHECK(count_lines(csv) == 21);
  CHECK(csv.rfind("iteration,mean_delta_h1,mean_delta_h0,trials\r\n", 0) == 0);
  const json report = json::parse(read_text(dir.file("report.json")));
  CHECK(report["convergence"]["mean_delta_h1"].size() == 20);
  CHECK(report["convergence"]["mean_delta_h1"][19].get<double>() <= 1e-2);
  CHECK_FALSE(fs::exists(dir.file("pd_curve.csv")));

  ExperimentPlan p = cli::preset_plan("fig3");
  p.detectors = {DetectorSpec::nmf({CovKind::Nscm, 3, CovInit::Nscm})};
  p.pfa_target = 0.1;
  p.calib_trials = 200;
  p.sweep_trials = 200;
  write_text(dir.file("plan.json"), to_json(p).dump());
  const Result s = call({"curves", "--plan", dir.file("plan.json"), "--out", dir.path.string(), "--threads", "2"});
  REQUIRE(s.code == 0);
  const std::string sweep = read_text(dir.file("pfa_sweep.csv"));
  CHECK(count_lines(sweep) == 1 + p.sweep->values.size());
  CHECK(sweep.find("nmf-nscm,rho,0.99,") != std::string::npos);

  json empty = to_json(p);
  empty["detectors"] = json::array();
  write_text(dir.file("empty.json"), empty.dump());
  fs::remove(dir.file("report.json"));
  CHECK(call({"curves", "--plan", dir.file("empty.json"), "--out", dir.path.string()}).code == 2);
  CHECK_FALSE(fs::exists(dir.file("report.json")));
}

TEST_CASE("realdata on white noise") {
  TempDir dir("realdata");
  SplitMix64 rng(800);
  IqCube cube(500, 24);
  for (auto& s : cube.samples) s = {static_cast<float>(normal(rng)), static_cast<float>(normal(rng))};
  save_iq(dir.file("white.iq"), cube);

  CHECK(call({"realdata", "--iq", dir.file("white.iq"), "--cut-bin", "24", "--out", dir.path.string()}).code == 2);
  CHECK(call({"realdata", "--iq", dir.file("white.iq"), "--cut-bin", "-1", "--out", dir.path.string()}).code == 2);
  CHECK(call({"realdata", "--iq", dir.file("nope.iq"), "--out", dir.path.string()}).code == 2);

  const Result r = call({"realdata", "--iq", dir.file("white.iq"), "--cut-bin", "12", "--pfa", "0.05", "--trials",
                         "2000", "--threshold-from", "white", "--snr-db", "0", "--snr-db", "20", "--out",
                         dir.path.string()});
  REQUIRE(r.code == 0);
  const json doc = json::parse(read_text(dir.file("realdata.json")));
  CHECK(doc["windows_per_bin"] == 165);
  REQUIRE(doc["detectors"].size() == 4);
  for (const auto& d : doc["detectors"]) {
    REQUIRE(d["per_bin_pfa"].size() == 24);
    int inside = 0;
    for (const auto& b : d["per_bin_pfa"]) {
      inside += b["ci_low"].get<double>() <= 0.05 && 0.05 <= b["ci_high"].get<double>();
    }
    // Overlapping windows make neighbouring trials dependent, so allow a few misses.
    CHECK(inside >= 20);
    CHECK(d["pd"][1]["estimate"].get<double>() >= d["pd"][0]["estimate"].get<double>());
    CHECK(d["pd"][1]["estimate"].get<double>() >= 0.9);
  }
  CHECK(count_lines(read_text(dir.file("per_bin_pfa.csv"))) == 1 + 4 * 24);

  const Result cut = call({"realdata", "--iq", dir.file("white.iq"), "--cut-bin", "3", "--pfa", "0.1",
                           "--threshold-from", "cut", "--out", dir.path.string()});
  REQUIRE(cut.code == 0);
  const json cdoc = json::parse(read_text(dir.file("realdata.json")));
  for (const auto& d : cdoc["detectors"]) {
    CHECK(d["per_bin_pfa"][3]["estimate"].get<double>() == doctest::Approx(17.0 / 165.0));
  }
}

}  // TEST_SUITE
