#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace teco::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertFailed = 1;
inline constexpr int kExitInputError = 2;

/// Runs the `teco` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace teco::cli
