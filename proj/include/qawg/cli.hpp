#pragma once

// Command-line front end: design-filter, simulate, analyze, reproduce-paper
// and fit-loss. Exit codes are part of the interface.

#include <ostream>
#include <string>

namespace qawg::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,        // precondition, physics or truncation error
    kConfigError = 2,    // bad command line or scenario file
    kDataError = 3,      // unreadable or corrupt record file
    kBandViolation = 4,  // a reproduce-paper band check failed
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Directory holding the checked-in scenario files.
std::string default_scenario_dir();

}  // namespace qawg::cli
