#include <iostream>

#include "walkprior/harness/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return wp::harness::run_command(args, std::cout, std::cerr);
}
