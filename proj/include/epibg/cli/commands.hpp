#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace epibg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNonConvergence = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (without the program name). `env_seed` is
/// the value of the SEED environment variable, if set.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::optional<std::string>& env_seed);

/// %.9g rendering used by every CSV.
std::string format_number(double value);

}  // namespace epibg::cli
