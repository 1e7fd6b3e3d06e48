#include <string>
#include <vector>

#include "entail/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return entail::run_cli(std::move(args));
}
