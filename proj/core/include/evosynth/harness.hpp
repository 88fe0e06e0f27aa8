#pragma once

namespace evosynth {

/// CLI entry point (subcommands: run, train-ancestor, report).
/// Returns 0 on success, 2 for usage/config errors, 1 for runtime errors.
int cli_run(int argc, const char* const* argv);

}  // namespace evosynth
