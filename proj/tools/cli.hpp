#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hetclutter/mc_harness.hpp"

namespace hetclutter::cli {

enum ExitCode : int { kSuccess = 0, kNumericalFailure = 1, kUsage = 2 };

/// Entry point shared by the binary and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Named experiment presets fig1..fig7 at desk scale.
ExperimentPlan preset_plan(const std::string& name);
std::vector<std::string> preset_names();

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace hetclutter::cli
