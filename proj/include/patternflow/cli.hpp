#pragma once

namespace patternflow {

/// Entry point behind the `patternflow` binary. Subcommands: run, validate,
/// simulate, stats, indicators. Returns 0 on success, 1 on flow error, 2 on
/// usage/parse/validation errors.
int cli_main(int argc, const char* const* argv);

}  // namespace patternflow
