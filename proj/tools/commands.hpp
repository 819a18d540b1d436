#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pfid::cli {

/// Runs one pfid command. `args` excludes the program name, e.g.
/// {"train", "--dataset", "d.csv", "--out", "m.ckpt"}. Returns the exit code:
/// 0 when every requested artifact was written and validated.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pfid::cli
