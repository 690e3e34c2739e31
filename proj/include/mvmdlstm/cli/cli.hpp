#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mvmdlstm::cli {

/// Parses and runs one subcommand (synth, decompose, tune, run,
/// verify-tables). `args` excludes the program name. Returns the process
/// exit code: 0 on success, otherwise the error kind's code (2 config,
/// 3 data, 4 numeric, 5 fixture mismatch).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvmdlstm::cli
