#pragma once

#include <string>
#include <vector>

namespace magnify::cli {

/// Runs one subcommand (expand | certify | invert | sweep | falsify).
/// args excludes the program name. Returns 0 for a certified or converged
/// outcome, 1 for a refusal or finding, 2 for a usage or configuration error.
int run(const std::vector<std::string>& args);

}  // namespace magnify::cli
