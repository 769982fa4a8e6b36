#include <iostream>
#include <string>
#include <vector>

#include "epcal/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return epcal::cli::run(args, std::cout, std::cerr);
}
