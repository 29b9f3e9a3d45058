#include <iostream>
#include <string>
#include <vector>

#include "safeice/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return safeice::run_main(args, std::cout, std::cerr);
}
