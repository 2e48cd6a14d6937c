#include <iostream>
#include <string>
#include <vector>

#include "urban3d/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return urban3d::cli::run(args, std::cout, std::cerr);
}
