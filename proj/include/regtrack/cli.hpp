#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace regtrack {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMetricFailure = 1;
inline constexpr int kExitInputError = 2;

/// Entry point of the `regtrack` tool: synth, track and check-jacobian.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace regtrack
