#include <string>
#include <vector>

#include "aidetect/cli.hpp"

int main(int argc, char** argv) {
  return aidetect::cli::run_command(std::vector<std::string>(argv + 1, argv + argc));
}
