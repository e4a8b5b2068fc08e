#include <iostream>

#include "divseq/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return divseq::run_cli(args, std::cout, std::cerr);
}
