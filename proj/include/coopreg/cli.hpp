#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coopreg {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;  // config/gain parse or schema error
inline constexpr int kExitAssumption = 2;  // an audited assumption failed
inline constexpr int kExitNumerical = 3;   // divergence, overflow, failed design

/// Entry point behind the `coopreg` binary; streams injectable for tests.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace coopreg
