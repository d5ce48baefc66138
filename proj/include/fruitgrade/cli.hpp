#pragma once

#include <string>
#include <vector>

namespace fruitgrade::cli {

/// Runs one subcommand (extract, select, train, evaluate, predict, synth).
/// args excludes the program name. Returns 0 on success, 1 on usage errors,
/// 2 on data or processing errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace fruitgrade::cli
