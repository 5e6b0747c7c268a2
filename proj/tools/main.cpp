#include <iostream>

#include "attrmetric/cli.hpp"

int main(int argc, char** argv) {
  return attrmetric::cli::main_entry(argc, argv, std::cout, std::cerr);
}
