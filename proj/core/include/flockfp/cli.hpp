#pragma once

#include <ostream>

#include "flockfp/config.hpp"

namespace flockfp {

// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_numerical_error = 3;

// Full command-line entry point (subcommands: phase, simulate, linearize,
// rates). Testable in-process; never throws, failures map to exit codes.
int run_cli(int argc, const char* const* argv);

// Individual subcommands; cfg must already contain any overrides. They throw
// ConfigError / NumericalError, which run_cli maps to exit codes.
void cmd_phase(const ConfigMap& cfg, std::ostream& out);
void cmd_simulate(const ConfigMap& cfg, std::ostream& out);
void cmd_linearize(const ConfigMap& cfg, std::ostream& out);
void cmd_rates(const ConfigMap& cfg, std::ostream& out);

}  // namespace flockfp
