#include <vector>

#include "teleopt/bench.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return teleopt::bench::run_cli(std::move(args));
}
