#include <iostream>
#include <string>
#include <vector>

#include "traffic/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return traffic::cli::run(args, std::cout, std::cerr);
}
