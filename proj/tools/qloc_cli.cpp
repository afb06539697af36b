#include <iostream>

#include "qloc/cli.hpp"

int main(int argc, char** argv) {
  return qloc::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
