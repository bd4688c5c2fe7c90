#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mertoneq::cli {

enum ExitCode : int {
  success = 0,
  validation_error = 1,
  solver_error = 2,
  verification_fail = 3,
  inconclusive = 4,
};

// Runs `mertoneq <command> --config <path> [--seed N] [--out-dir DIR] [--paths N]`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace mertoneq::cli
