#pragma once

#include <iosfwd>

namespace localsgd_lab::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitDiverged = 2;
/// `verify` found a failing identity.
inline constexpr int kExitCheckFailed = 3;

/// Entry point shared by the executable and the tests.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace localsgd_lab::cli
