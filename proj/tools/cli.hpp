#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace fairsample::cli {

enum class ExitStatus : int {
  Success = 0,
  DataError = 1,
  UsageError = 2,
  InternalError = 3,
};

/// Runs one command line. `args[0]` is the program name. Data goes to `out`
/// (or files), diagnostics to `err`. Never throws.
ExitStatus run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace fairsample::cli
