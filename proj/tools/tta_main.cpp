#include <iostream>
#include <string>
#include <vector>

#include "tta/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return tta::cli::run(args, std::cout, std::cerr);
}
