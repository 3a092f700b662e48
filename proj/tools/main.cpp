#include <string>
#include <vector>

#include "tools/cli_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tautband::cli::run_cli(args);
}
