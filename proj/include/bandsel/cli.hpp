#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bandsel::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kDataError = 3,
    kNumericError = 4,
};

/// Runs the bandsel command line with argv-style arguments (args[0] is the
/// program name). Progress goes to `out`, diagnostics to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace bandsel::cli
