#include <iostream>
#include <string>
#include <vector>

#include "transtte/service.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return transtte::cli_dispatch(args, std::cout, std::cerr);
}
