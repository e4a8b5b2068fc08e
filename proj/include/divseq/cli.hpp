#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "divseq/error.hpp"

namespace divseq {

inline constexpr std::string_view kReportSchema = "divseq-report/1";

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitAborted = 2, kExitReplay = 3 };

/// Exit code reported for an error of the given kind.
int exit_code_for(ErrorKind kind);

/// Runs one command line (without the program name). Reports go to `out`,
/// structured errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace divseq
