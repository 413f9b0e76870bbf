#pragma once

#include <iosfwd>

#include "cli_config.hpp"

namespace momentum::cli {

/// Runs one subcommand and returns its exit code. Errors are thrown as
/// UsageError, MissingInput, HttpError or other std::exception types.
int run_command(const RunConfig& config, std::ostream& log);

}  // namespace momentum::cli
