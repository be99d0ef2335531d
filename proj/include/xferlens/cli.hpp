#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace xferlens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

/// Runs one subcommand. `args` excludes the program name. The report goes
/// to `out` (or the --output file); diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Per-subcommand seed: the global seed XOR the FNV-1a hash of the name.
std::uint64_t subcommand_seed(std::uint64_t seed, const std::string& name);

}  // namespace xferlens::cli
