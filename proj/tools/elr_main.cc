#include <iostream>

#include "elr/cli.h"

int main(int argc, char **argv) {
  elr::configure_logging();
  std::vector<std::string> args(argv + 1, argv + argc);
  return elr::run_cli(args, std::cout, std::cerr);
}
