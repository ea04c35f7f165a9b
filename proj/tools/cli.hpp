#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rcwalk::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kBoundViolation = 4 };

// rcwalk <command> <config> [--section.key=value ...]
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* build_id();

}  // namespace rcwalk::cli
