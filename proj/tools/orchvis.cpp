#include <iostream>

#include "orchvis/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return orchvis::run_cli(args, std::cout, std::cerr);
}
