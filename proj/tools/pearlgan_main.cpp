#include <iostream>
#include <string>
#include <vector>

#include "pearlgan/cli.hpp"

int main(int argc, char** argv) {
  return pearlgan::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
