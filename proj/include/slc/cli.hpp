#pragma once

// The `slc` command line: train | eval | diagnose | bench.

#include <iosfwd>
#include <string>
#include <vector>

namespace slc::cli {

// Stable exit codes for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNumerical = 3;

// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "SLC_OUTPUT_DIR";

// `args` excludes the program name. Human-readable output goes to `out`,
// warnings and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version();

}  // namespace slc::cli
