#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace collapse {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitNumerical = 2,
  kExitComparison = 3,
};

// Environment variable naming the output directory when --out is absent.
inline constexpr const char* kOutputDirEnv = "COLLAPSE_LAB_OUT";

// Entry point behind the collapse-lab binary. args excludes the program name:
//   <simulate|analytic|compare|lemma-check|ngram> --config <path> [--out <dir>] [--threads N]
// Every run writes manifest.json (the resolved config) next to its CSV files.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace collapse
