#include <string>
#include <vector>

#include "gqpp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gqpp::run_cli(args);
}
