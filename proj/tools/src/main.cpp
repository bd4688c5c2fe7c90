#include <iostream>
#include <string>
#include <vector>

#include "mertoneq_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mertoneq::cli::run(args, std::cout, std::cerr);
}
