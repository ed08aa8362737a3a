#include <iostream>
#include <string>
#include <vector>

#include <zfpbias/cli.hpp>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return zfpbias::run_cli(args, std::cout, std::cerr);
}
