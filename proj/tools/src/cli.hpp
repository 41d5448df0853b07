#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kanneal::cli {

/// Exit codes shared by all subcommands.
enum Exit : int {
  kOk = 0,
  kPropertyFailed = 1,  // validate: at least one property failed
  kConfigError = 2,     // bad flags, config or input files
  kRunFailed = 3,       // divergence beyond tolerance; sweep: no cell succeeded
  kNoRate = 4,          // rate: fewer than three usable checkpoints
};

/// Entry point of the `kanneal` tool. `args` excludes the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kanneal::cli
