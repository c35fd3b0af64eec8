#include <iostream>
#include <string>
#include <vector>

#include "qpjumps/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qpj::cli::run(args, std::cout, std::cerr);
}
