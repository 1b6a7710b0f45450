#include <numeric>

#include "cli.hpp"
#include "hetclutter/error.hpp"

namespace hetclutter::cli {

namespace {

// Clutter-to-noise ratio of 40 dB with unit clutter power.
constexpr double kThermalSigma2 = 1e-4;

std::vector<DetectorSpec> all_detectors() {
  return {DetectorSpec::proposed(),
          DetectorSpec::nmf({CovKind::Nscm, 3, CovInit::Nscm}),
          DetectorSpec::nmf({CovKind::Recursive, 3, CovInit::Nscm}),
          DetectorSpec::nmf({CovKind::PersymmetricRecursive, 3, CovInit::Nscm})};
}

ExperimentPlan base_plan(double sigma2) {
  ExperimentPlan p;
  p.scenario.N = 8;
  p.scenario.K = 16;
  p.scenario.rho = 0.95;
  p.scenario.nu = 0.5;
  p.scenario.sigma2 = sigma2;
  p.pfa_target = 1e-2;
  p.pd_trials = 1000;
  p.master_seed = 1;
  p.detectors = all_detectors();
  return p;
}

std::vector<double> snr_grid() {
  std::vector<double> grid;
  for (double snr = -5.0; snr <= 25.0; snr += 2.5) grid.push_back(snr);
  return grid;
}

}  // namespace

std::vector<std::string> preset_names() { return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7"}; }

ExperimentPlan preset_plan(const std::string& name) {
  if (name == "fig1") {
    ExperimentPlan p = base_plan(0.0);
    p.detectors = {DetectorSpec::proposed()};
    p.convergence = ConvergenceSpec{10000, 20};
    return p;
  }
  if (name == "fig2" || name == "fig5") {
    ExperimentPlan p = base_plan(name == "fig2" ? 0.0 : kThermalSigma2);
    p.snr_grid_db = snr_grid();
    return p;
  }
  if (name == "fig3" || name == "fig6") {
    ExperimentPlan p = base_plan(name == "fig3" ? 0.0 : kThermalSigma2);
    p.sweep = SweepSpec{SweepAxis::Rho, {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99}};
    return p;
  }
  if (name == "fig4" || name == "fig7") {
    ExperimentPlan p = base_plan(name == "fig4" ? 0.0 : kThermalSigma2);
    p.sweep = SweepSpec{SweepAxis::Nu, {0.2, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0}};
    return p;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown preset \"" + name + "\" (expected fig1..fig7)");
}

}  // namespace hetclutter::cli
