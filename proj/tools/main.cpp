#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "epibg/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> env_seed;
  if (const char* s = std::getenv("SEED")) env_seed = s;
  try {
    return epibg::cli::run(args, std::cout, std::cerr, env_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
